#include "speclab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <omp.h>

#include "speclab/funcalc.hpp"
#include "speclab/stats.hpp"
#include "speclab/theory.hpp"

namespace speclab {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, std::string("wrong type (") + e.what() + ")");
    }
}

std::string write_text(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    const auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << text;
    return path;
}

std::string write_json(const std::string& dir, const std::string& name, const json& j) {
    return write_text(dir, name, j.dump(2) + "\n");
}

json base_summary(const ExperimentConfig& cfg, const std::string& hash) {
    return json{{"schema", "speclab." + to_string(cfg.mode) + "/1"},
                {"mode", to_string(cfg.mode)},
                {"config_hash", hash},
                {"config", cfg.raw}};
}

std::string cell_key(const std::string& filter, double n, std::size_t lambda_index) {
    std::ostringstream os;
    os << filter << "|n=" << n << "|lambda#" << lambda_index;
    return os.str();
}

// Results of an exact-risk sweep, shared by the sweep and saturation modes.
struct SweepOutcome {
    std::vector<RiskBreakdown> rows;
    json cells = json::array();
    json table = json::object();
    json slopes = json::object();
    json fits = json::object();
    long bias_negative = 0;
    long var_negative = 0;
    long var_monotone = 0;
    long bias_monotone = 0;  // reported only
    double seconds = 0.0;
};

SweepOutcome run_sweep_core(const ExperimentConfig& cfg, const EigenSystem& sys,
                            const std::vector<SourceFunction>& sources,
                            const std::vector<FilterSpec>& filters) {
    SweepOutcome out;
    const auto t0 = clock_type::now();
    Predictor pred(sys, sources, filters);
    const double fnorm = sources[0].norm_sq();

    // per (filter, n, lambda index): risks over seeds
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<RiskBreakdown>> groups;
    for (std::size_t in = 0; in < cfg.n_grid.size(); ++in) {
        const double n = cfg.n_grid[in];
        const auto lams = cfg.lambda_rule.lambdas(n);
        std::vector<CellRequest> cells;
        for (std::size_t fi = 0; fi < filters.size(); ++fi) {
            for (double l : lams) {
                cells.push_back({0, fi, l});
            }
        }
        for (std::uint64_t seed : cfg.seeds) {
            auto res = evaluate_design(sys, sources, filters, static_cast<Eigen::Index>(n), seed,
                                       cells, cfg.sigma_sq);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                pred.attach(res[c], 0, cells[c].filter, cfg.sigma_sq);
                if (res[c].bias_sq < -1e-12 * fnorm) {
                    ++out.bias_negative;
                }
                if (res[c].var < 0.0) {
                    ++out.var_negative;
                }
                const std::size_t li = c % lams.size();
                groups[{cells[c].filter, in, li}].push_back(res[c]);
                out.rows.push_back(res[c]);
            }
            // Var must not decrease as lambda decreases on a fixed design; Bias^2 should not increase
            for (std::size_t fi = 0; fi < filters.size(); ++fi) {
                std::vector<std::tuple<double, double, double>> lv;
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    if (cells[c].filter == fi) {
                        lv.emplace_back(res[c].lambda, res[c].var, res[c].bias_sq);
                    }
                }
                std::sort(lv.begin(), lv.end());
                for (std::size_t k = 1; k < lv.size(); ++k) {
                    const auto& [l0, v0, b0] = lv[k - 1];
                    const auto& [l1, v1, b1] = lv[k];
                    if (v0 < v1 - 1e-12 * v1) {
                        ++out.var_monotone;
                    }
                    if (b0 > b1 + 1e-12 * fnorm) {
                        ++out.bias_monotone;
                    }
                }
            }
        }
    }

    for (std::size_t fi = 0; fi < filters.size(); ++fi) {
        const std::string fname = filters[fi].name();
        std::vector<double> ns;
        std::vector<double> rule_risk;
        std::vector<double> best_risk;
        std::vector<double> best_lambda;
        for (std::size_t in = 0; in < cfg.n_grid.size(); ++in) {
            const double n = cfg.n_grid[in];
            const auto lams = cfg.lambda_rule.lambdas(n);
            double best = std::numeric_limits<double>::infinity();
            double best_l = 0.0;
            for (std::size_t li = 0; li < lams.size(); ++li) {
                const auto& g = groups[{fi, in, li}];
                std::vector<double> ratios;
                std::vector<double> risks;
                std::vector<double> biases;
                std::vector<double> vars;
                for (const auto& r : g) {
                    ratios.push_back(r.ratio());
                    risks.push_back(r.total());
                    biases.push_back(r.bias_sq);
                    vars.push_back(r.var);
                }
                const Quartiles q = quartiles(ratios);
                const double mr = median(risks);
                out.cells.push_back({{"filter", fname},
                                     {"n", n},
                                     {"lambda", lams[li]},
                                     {"median_ratio", q.median},
                                     {"ratio_q1", q.q1},
                                     {"ratio_q3", q.q3},
                                     {"ratio_iqr", q.iqr()},
                                     {"ratio_min", *std::min_element(ratios.begin(), ratios.end())},
                                     {"ratio_max", *std::max_element(ratios.begin(), ratios.end())},
                                     {"median_risk", mr},
                                     {"median_bias_sq", median(biases)},
                                     {"median_var", median(vars)},
                                     {"pred_bias_sq", g.front().pred_bias_sq},
                                     {"pred_var", g.front().pred_var}});
                out.table[cell_key(fname, n, li)] = q.median;
                if (mr < best) {
                    best = mr;
                    best_l = lams[li];
                }
            }
            ns.push_back(n);
            best_risk.push_back(best);
            best_lambda.push_back(best_l);
            if (cfg.lambda_rule.kind == LambdaRule::Kind::n_linked) {
                rule_risk.push_back(best);
            }
        }
        if (ns.size() >= 2) {
            auto put = [&](const std::string& key, const std::vector<double>& ys) {
                const SlopeFit f = fit_loglog(ns, ys);
                out.slopes[fname + ":" + key] = f.slope;
                out.fits[fname + ":" + key] = {{"slope", f.slope},
                                               {"stderr", f.stderr_slope},
                                               {"ci95", {f.ci_lo, f.ci_hi}},
                                               {"points", f.points}};
            };
            if (cfg.lambda_rule.kind == LambdaRule::Kind::n_linked) {
                put("risk_at_rule", rule_risk);
            } else {
                put("best_risk", best_risk);
                put("best_lambda", best_lambda);
            }
        }
    }
    out.seconds = seconds_since(t0);
    return out;
}

struct Context {
    EigenSystem sys;
    std::vector<FilterSpec> filters;
    std::vector<SourceFunction> sources;
};

Context make_context(const ExperimentConfig& cfg, bool need_source) {
    Context c{make_system(cfg.system), {}, {}};
    c.filters = build_filters(cfg, c.sys.kappa_sq());
    if (need_source) {
        SourceSpec s = cfg.source;
        c.sources.push_back(make_source(c.sys, s));
    }
    return c;
}

double smallest_lambda(const ExperimentConfig& cfg) {
    double m = std::numeric_limits<double>::infinity();
    if (cfg.n_grid.empty()) {
        for (double l : cfg.lambda_rule.lambdas(1.0)) {
            m = std::min(m, l);
        }
    }
    for (double n : cfg.n_grid) {
        for (double l : cfg.lambda_rule.lambdas(n)) {
            m = std::min(m, l);
        }
    }
    return m;
}

void require(bool ok, const std::string& field_name, const std::string& what) {
    if (!ok) {
        throw ConfigError(field_name, what);
    }
}

RunResult run_curve(const ExperimentConfig& cfg, const std::string& hash) {
    Context c = make_context(cfg, true);
    std::vector<double> lams = cfg.lambda_rule.kind == LambdaRule::Kind::n_linked
                                   ? log_grid(cfg.lambda_rule.lo, cfg.lambda_rule.hi,
                                              cfg.lambda_rule.per_decade)
                                   : cfg.lambda_rule.lambdas(1.0);
    check_truncation_budget(c.sys, c.filters, *std::min_element(lams.begin(), lams.end()));
    RunResult res;
    res.summary = base_summary(cfg, hash);
    json curves = json::array();
    json slopes = json::object();
    long violations = 0;
    for (std::size_t fi = 0; fi < c.filters.size(); ++fi) {
        const auto& f = c.filters[fi];
        TheoryCurve tc = compute_theory_curve(c.sys, c.sources[0], f, cfg.sigma_sq, lams, cfg.n_grid);
        res.files.push_back(
            write_text(cfg.output, "curve_" + std::to_string(fi) + ".csv", theory_curve_csv(tc, hash)));
        long bias_mono = 0;
        long n2_mono = 0;
        for (std::size_t i = 1; i < lams.size(); ++i) {
            // lams ascend
            if (tc.bias_sq[i] < tc.bias_sq[i - 1] * (1.0 - 1e-12)) {
                ++bias_mono;
            }
            if (tc.n2[i] > tc.n2[i - 1] * (1.0 + 1e-12)) {
                ++n2_mono;
            }
        }
        long not_quasi_convex = 0;
        std::vector<double> argmins;
        std::vector<double> minima;
        for (std::size_t in = 0; in < cfg.n_grid.size(); ++in) {
            std::vector<double> pr(lams.size());
            for (std::size_t i = 0; i < lams.size(); ++i) {
                pr[i] = tc.predicted(i, in);
            }
            if (!quasi_convex(pr)) {
                ++not_quasi_convex;
            }
            const std::size_t k = tc.argmin(in);
            argmins.push_back(lams[k]);
            minima.push_back(pr[k]);
        }
        violations += bias_mono + n2_mono + not_quasi_convex;
        const MinimaxRate mr = minimax_rate(c.sys.beta(), c.sources[0].s(), f.qualification());
        json entry{{"filter", f.name()},
                   {"argmin_lambda", argmins},
                   {"min_predicted_risk", minima},
                   {"n2_tail_worst", tc.n2_tail_worst},
                   {"bias_monotone_violations", bias_mono},
                   {"n2_monotone_violations", n2_mono},
                   {"quasi_convex_violations", not_quasi_convex},
                   {"target_risk_exponent", mr.exponent},
                   {"target_lambda_exponent", -mr.theta}};
        if (cfg.n_grid.size() >= 2) {
            const double sl = fit_loglog(cfg.n_grid, argmins).slope;
            const double sr = fit_loglog(cfg.n_grid, minima).slope;
            entry["argmin_lambda_slope"] = sl;
            entry["min_risk_slope"] = sr;
            slopes[f.name() + ":argmin_lambda"] = sl;
            slopes[f.name() + ":min_risk"] = sr;
        }
        curves.push_back(entry);
    }
    res.summary["curves"] = curves;
    res.summary["slopes"] = slopes;
    res.summary["source_tail_mass"] = c.sources[0].tail_mass();
    res.summary["invariant_violations"] = violations;
    res.exit_code = violations == 0 ? 0 : 1;
    return res;
}

RunResult run_sweep(const ExperimentConfig& cfg, const std::string& hash) {
    require(!cfg.n_grid.empty(), "n_grid", "sweep needs a nonempty n grid");
    require(!cfg.seeds.empty(), "seeds", "sweep needs at least one seed");
    Context c = make_context(cfg, true);
    require(c.sys.supports_point_eval(), "system.family", "sweeps need a point-evaluable system");
    check_truncation_budget(c.sys, c.filters, smallest_lambda(cfg));
    SweepOutcome o = run_sweep_core(cfg, c.sys, c.sources, c.filters);
    RunResult res;
    res.files.push_back(write_text(cfg.output, to_string(cfg.mode) + "_risk.csv", risk_csv(o.rows, hash)));
    res.summary = base_summary(cfg, hash);
    res.summary["cells"] = o.cells;
    res.summary["table"] = o.table;
    res.summary["slopes"] = o.slopes;
    res.summary["fits"] = o.fits;
    res.summary["seconds"] = o.seconds;
    res.summary["source_tail_mass"] = c.sources[0].tail_mass();
    res.summary["invariants"] = {{"bias_negative", o.bias_negative},
                                 {"var_negative", o.var_negative},
                                 {"var_monotone_violations", o.var_monotone},
                                 {"bias_monotone_violations_reported", o.bias_monotone}};
    const long bad = o.bias_negative + o.var_negative + o.var_monotone;

    if (cfg.mode == RunMode::saturation) {
        json targets = json::object();
        for (const auto& f : c.filters) {
            const MinimaxRate mr = minimax_rate(c.sys.beta(), cfg.source.s, f.qualification());
            const MinimaxRate free = minimax_rate(c.sys.beta(), cfg.source.s,
                                                  std::numeric_limits<double>::infinity());
            json t{{"target_exponent", mr.exponent}, {"saturated", mr.saturated}};
            const std::string key = f.name() + ":best_risk";
            if (o.fits.contains(key)) {
                const auto ci = o.fits[key]["ci95"];
                t["ci_excludes_unsaturated"] =
                    !(ci[0].get<double>() <= free.exponent && free.exponent <= ci[1].get<double>());
            }
            targets[f.name()] = t;
        }
        res.summary["targets"] = targets;
    }
    res.exit_code = bad == 0 ? 0 : 1;
    return res;
}

RunResult run_verify_filter(const ExperimentConfig& cfg, const std::string& hash) {
    Context c = make_context(cfg, false);
    const double ks = c.sys.kappa_sq();
    const int pts = std::max(cfg.audit_points, 2);
    const auto lam_grid = [&] {
        std::vector<double> g(static_cast<std::size_t>(pts));
        for (int i = 0; i < pts; ++i) {
            g[static_cast<std::size_t>(i)] = std::pow(10.0, -6.0 + 5.0 * i / (pts - 1));
        }
        return g;
    }();
    std::vector<double> z_grid{0.0};
    for (int i = 0; i < pts - 1; ++i) {
        z_grid.push_back(ks * std::pow(10.0, -10.0 + 10.0 * i / (pts - 2)));
    }
    const std::vector<double> taus{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
    RunResult res;
    res.summary = base_summary(cfg, hash);
    json reports = json::array();
    bool all_ok = true;
    for (const auto& f : c.filters) {
        const AuditReport a = audit_real_axis(f, lam_grid, z_grid, taus, ks);
        all_ok = all_ok && a.ok();
        reports.push_back({{"filter", a.filter},
                           {"kappa_sq", ks},
                           {"grid_points", lam_grid.size() * z_grid.size()},
                           {"measured_E", a.measured_E},
                           {"declared_E", f.E_const()},
                           {"taus", a.taus},
                           {"measured_F", a.measured_F},
                           {"declared_F", a.declared_F},
                           {"measured_F_lower", std::isnan(a.measured_F_lower) ? json(nullptr)
                                                                               : json(a.measured_F_lower)},
                           {"declared_F_lower", std::isnan(f.F_lower(ks)) ? json(nullptr)
                                                                          : json(f.F_lower(ks))},
                           {"violations",
                            {{"psi_range", a.psi_range_violations},
                             {"z_monotone", a.z_monotone_violations},
                             {"lambda_monotone", a.lambda_monotone_violations},
                             {"identity", a.identity_violations},
                             {"half_psi", a.half_psi_violations},
                             {"interpolation", a.interpolation_violations},
                             {"declared_E", a.declared_E_violations},
                             {"declared_F", a.declared_F_violations},
                             {"lower", a.lower_violations}}},
                           {"worst",
                            {{"z_monotone", a.z_monotone_worst},
                             {"lambda_monotone", a.lambda_monotone_worst},
                             {"identity", a.identity_worst}}},
                           {"ok", a.ok()}});
    }
    res.summary["filters"] = reports;
    res.exit_code = all_ok ? 0 : 1;
    return res;
}

RunResult run_verify_contour(const ExperimentConfig& cfg, const std::string& hash) {
    Context c = make_context(cfg, false);
    const double ks = c.sys.kappa_sq();
    RunResult res;
    res.summary = base_summary(cfg, hash);
    long failures = 0;

    // spectrum probe for the resolvent bound: 0, a geometric ladder and a uniform grid
    std::vector<double> spectrum{0.0, ks};
    for (int i = 0; i <= 200; ++i) {
        spectrum.push_back(ks * std::pow(10.0, -12.0 + 12.0 * i / 200.0));
        spectrum.push_back(ks * i / 200.0);
    }
    json geometry = json::array();
    for (double lam : cfg.contour_lambdas) {
        const ContourPath p = build_contour(lam, ks, cfg.nodes_per_segment);
        const double wind = winding_number(p, 0.5 * ks);
        const double len = inverse_distance_length(p);
        const ResolventBound rb = resolvent_bound(p, spectrum);
        const bool ok = std::abs(wind - 1.0) < 1e-6 && rb.wedge_max <= std::sqrt(8.0) * (1.0 + 1e-9) &&
                        rb.arc_max <= 2.0 * (1.0 + 1e-9);
        failures += ok ? 0 : 1;
        geometry.push_back({{"lambda", lam},
                            {"winding_number", wind},
                            {"inverse_distance_length", len},
                            {"length_over_log", len / std::log(1.0 / lam)},
                            {"resolvent_wedge_max", rb.wedge_max},
                            {"resolvent_arc_max", rb.arc_max},
                            {"ok", ok}});
    }
    res.summary["geometry"] = geometry;

    json audits = json::array();
    for (const auto& f : c.filters) {
        const AnalyticAuditReport a = audit_analytic_conditions(f, cfg.contour_lambdas, ks,
                                                                cfg.nodes_per_segment);
        json rows = json::array();
        for (const auto& r : a.rows) {
            rows.push_back({{"lambda", r.lambda},
                            {"E_tilde", r.E_tilde},
                            {"F_tilde", r.F_tilde},
                            {"F_tilde_left", r.F_tilde_left},
                            {"worst_E_node", {r.worst_E_node.real(), r.worst_E_node.imag()}},
                            {"worst_F_node", {r.worst_F_node.real(), r.worst_F_node.imag()}}});
        }
        bool ok = a.nonfinite_nodes == 0;
        if (f.family() == FilterFamily::iterated_ridge) {
            ok = ok && a.F_tilde <= std::pow(2.0, f.descriptor().order - 1.0) * (1.0 + 1e-6);
        }
        failures += ok ? 0 : 1;
        audits.push_back({{"filter", a.filter},
                          {"E_tilde", a.E_tilde},
                          {"F_tilde", a.F_tilde},
                          {"F_tilde_left", a.F_tilde_left},
                          {"nonfinite_nodes", a.nonfinite_nodes},
                          {"rows", rows},
                          {"ok", ok}});
    }
    res.summary["analytic"] = audits;

    json cross = json::array();
    const Eigen::MatrixXcd a = random_hermitian_psd(cfg.matrix_size, 0.9 * ks,
                                                    cfg.seeds.empty() ? 1 : cfg.seeds.front());
    for (const auto& f : c.filters) {
        for (double lam : cfg.matrix_lambdas) {
            const Eigen::MatrixXcd ref = matrix_filter_eig(a, f, FilterPart::phi, lam, ks);
            const auto one = matrix_filter_contour(a, f, FilterPart::phi, lam,
                                                   build_contour(lam, ks, cfg.nodes_per_segment));
            const auto two = matrix_filter_contour(a, f, FilterPart::phi, lam,
                                                   build_contour(lam, ks, 2 * cfg.nodes_per_segment));
            const double e1 = (one.value - ref).norm() / ref.norm();
            const double e2 = (two.value - ref).norm() / ref.norm();
            const bool ok = e1 <= 1e-6;
            failures += ok ? 0 : 1;
            cross.push_back({{"filter", f.name()},
                             {"lambda", lam},
                             {"rel_error", e1},
                             {"rel_error_doubled", e2},
                             {"warnings", one.warnings},
                             {"ok", ok}});
        }
    }
    res.summary["matrix_cross_check"] = cross;
    res.summary["failures"] = failures;
    res.exit_code = failures == 0 ? 0 : 1;
    return res;
}

RunResult run_interpolating(const ExperimentConfig& cfg, const std::string& hash) {
    require(cfg.n_grid.size() >= 2, "n_grid", "interpolating mode needs at least two sizes");
    require(!cfg.seeds.empty(), "seeds", "interpolating mode needs at least one seed");
    Context c = make_context(cfg, true);
    require(c.sys.supports_point_eval(), "system.family", "needs a point-evaluable system");
    const FilterSpec& f = c.filters.front();
    RunResult res;
    res.summary = base_summary(cfg, hash);

    std::vector<std::vector<double>> var_by_n(cfg.n_grid.size());
    json warnings = json::array();
    for (std::uint64_t seed : cfg.seeds) {
        const InterpolatingReport r =
            interpolating_probe(c.sys, c.sources[0], f, cfg.sigma_sq, cfg.n_grid, seed);
        for (std::size_t i = 0; i < r.var_over_sigma.size(); ++i) {
            var_by_n[i].push_back(r.var_over_sigma[i]);
        }
        for (const auto& w : r.warnings) {
            warnings.push_back(w);
        }
    }
    std::vector<double> med_var;
    for (const auto& v : var_by_n) {
        med_var.push_back(median(v));
    }
    const double floor = *std::min_element(med_var.begin(), med_var.end());

    // the same sizes with the rate-optimal lambda, for contrast
    const MinimaxRate mr = minimax_rate(c.sys.beta(), c.sources[0].s(), f.qualification());
    ExperimentConfig opt = cfg;
    opt.lambda_rule = LambdaRule{};
    opt.lambda_rule.kind = LambdaRule::Kind::n_linked;
    opt.lambda_rule.theta = mr.theta;
    opt.filters = {cfg.filters.front()};
    const std::vector<FilterSpec> one{f};
    check_truncation_budget(c.sys, one, smallest_lambda(opt));
    const SweepOutcome o = run_sweep_core(opt, c.sys, c.sources, one);
    json slopes = json::object();
    slopes["interpolating_var"] = fit_loglog(cfg.n_grid, med_var).slope;
    slopes["optimal_risk"] = o.slopes[f.name() + ":risk_at_rule"];
    res.files.push_back(write_text(cfg.output, "interpolating_optimal_risk.csv", risk_csv(o.rows, hash)));
    res.summary["n_grid"] = cfg.n_grid;
    res.summary["median_var_over_sigma_sq"] = med_var;
    res.summary["floor"] = floor;
    res.summary["slopes"] = slopes;
    res.summary["optimal_theta"] = mr.theta;
    res.summary["warnings"] = warnings;
    json table = json::object();
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        table[cell_key(f.name(), cfg.n_grid[i], 0)] = med_var[i];
    }
    res.summary["table"] = table;
    const bool ok = cfg.sigma_sq == 0.0 || floor > 0.0;
    res.exit_code = ok ? 0 : 1;
    return res;
}

} // namespace

std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::curve:
        return "curve";
    case RunMode::sweep:
        return "sweep";
    case RunMode::verify_filter:
        return "verify-filter";
    case RunMode::verify_contour:
        return "verify-contour";
    case RunMode::saturation:
        return "saturation";
    case RunMode::interpolating:
        return "interpolating";
    }
    return "?";
}

RunMode run_mode_from_string(const std::string& s) {
    for (RunMode m : {RunMode::curve, RunMode::sweep, RunMode::verify_filter, RunMode::verify_contour,
                      RunMode::saturation, RunMode::interpolating}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw ConfigError("mode", "unknown mode '" + s + "'");
}

std::vector<double> LambdaRule::lambdas(double n) const {
    switch (kind) {
    case Kind::grid:
        return log_grid(lo, hi, per_decade);
    case Kind::list:
        return values;
    case Kind::n_linked:
        return {a * std::pow(n, -theta)};
    }
    return {};
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("", "configuration must be a JSON object");
    }
    static const std::vector<std::string> known{
        "mode",   "system",     "filter",      "filters",         "source",       "sigma_sq",
        "n_grid", "lambda_rule", "seeds",      "output",          "threads",      "nodes_per_segment",
        "matrix_size", "contour_lambdas", "matrix_lambdas", "audit_points"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ConfigError(k, "unknown field");
        }
    }
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.mode = run_mode_from_string(field<std::string>(j, "mode", "sweep"));
    cfg.system = system_from_json(j.value("system", json::object()), "system");
    if (j.contains("filters")) {
        if (!j["filters"].is_array() || j["filters"].empty()) {
            throw ConfigError("filters", "expected a nonempty array");
        }
        for (const auto& f : j["filters"]) {
            cfg.filters.push_back(f);
        }
    } else {
        cfg.filters.push_back(j.value("filter", json{{"family", "krr"}}));
    }
    // validate the filter documents up front (kappa only affects the GD step size)
    for (std::size_t i = 0; i < cfg.filters.size(); ++i) {
        filter_from_json(cfg.filters[i], 1.0, "filters[" + std::to_string(i) + "]");
    }
    cfg.source = source_from_json(j.value("source", json::object()), "source");
    require(cfg.source.blocks <= cfg.system.m_max, "source.blocks", "exceeds system.m_max");
    cfg.sigma_sq = field<double>(j, "sigma_sq", cfg.sigma_sq);
    require(cfg.sigma_sq >= 0.0, "sigma_sq", "must be >= 0");
    cfg.n_grid = field<std::vector<double>>(j, "n_grid", {});
    for (double n : cfg.n_grid) {
        require(n >= 1.0 && std::floor(n) == n, "n_grid", "sizes must be positive integers");
    }
    if (j.contains("lambda_rule")) {
        const json& r = j["lambda_rule"];
        require(r.is_object(), "lambda_rule", "expected an object");
        const auto kind = r.value("kind", std::string("n_linked"));
        auto& lr = cfg.lambda_rule;
        if (kind == "grid") {
            lr.kind = LambdaRule::Kind::grid;
        } else if (kind == "list") {
            lr.kind = LambdaRule::Kind::list;
        } else if (kind == "n_linked") {
            lr.kind = LambdaRule::Kind::n_linked;
        } else {
            throw ConfigError("lambda_rule.kind", "unknown kind '" + kind + "'");
        }
        try {
            lr.lo = r.value("lo", lr.lo);
            lr.hi = r.value("hi", lr.hi);
            lr.per_decade = r.value("per_decade", lr.per_decade);
            lr.values = r.value("values", lr.values);
            lr.a = r.value("a", lr.a);
            lr.theta = r.value("theta", lr.theta);
        } catch (const json::exception& e) {
            throw ConfigError("lambda_rule", std::string("wrong type (") + e.what() + ")");
        }
        if (lr.kind == LambdaRule::Kind::grid) {
            require(lr.lo > 0.0 && lr.hi < 1.0 && lr.lo <= lr.hi, "lambda_rule",
                    "grid needs 0 < lo <= hi < 1");
        }
        if (lr.kind == LambdaRule::Kind::list) {
            require(!lr.values.empty(), "lambda_rule.values", "must be nonempty");
            for (double v : lr.values) {
                require(v > 0.0 && v < 1.0, "lambda_rule.values", "entries must lie in (0, 1)");
            }
        }
        if (lr.kind == LambdaRule::Kind::n_linked) {
            require(lr.a > 0.0 && lr.theta > 0.0, "lambda_rule", "n_linked needs a > 0, theta > 0");
        }
    }
    cfg.seeds = field<std::vector<std::uint64_t>>(j, "seeds", cfg.seeds);
    cfg.output = field<std::string>(j, "output", cfg.output);
    cfg.threads = field<int>(j, "threads", cfg.threads);
    cfg.nodes_per_segment = field<int>(j, "nodes_per_segment", cfg.nodes_per_segment);
    require(cfg.nodes_per_segment >= 16, "nodes_per_segment", "must be >= 16");
    cfg.matrix_size = field<int>(j, "matrix_size", cfg.matrix_size);
    require(cfg.matrix_size >= 1, "matrix_size", "must be >= 1");
    cfg.contour_lambdas = field<std::vector<double>>(j, "contour_lambdas", cfg.contour_lambdas);
    cfg.matrix_lambdas = field<std::vector<double>>(j, "matrix_lambdas", cfg.matrix_lambdas);
    for (double l : cfg.contour_lambdas) {
        require(l > 0.0 && l < 1.0, "contour_lambdas", "entries must lie in (0, 1)");
    }
    for (double l : cfg.matrix_lambdas) {
        require(l > 0.0 && l < 1.0, "matrix_lambdas", "entries must lie in (0, 1)");
    }
    cfg.audit_points = field<int>(j, "audit_points", cfg.audit_points);
    const bool empirical = cfg.mode == RunMode::sweep || cfg.mode == RunMode::saturation ||
                           cfg.mode == RunMode::interpolating;
    if (empirical) {
        require(!cfg.seeds.empty(), "seeds", "empirical modes need at least one seed");
        require(!cfg.n_grid.empty(), "n_grid", "empirical modes need a nonempty n grid");
    }
    if (cfg.mode == RunMode::saturation) {
        require(cfg.filters.size() >= 2, "filters", "saturation compares at least two filters");
        require(cfg.lambda_rule.kind != LambdaRule::Kind::n_linked, "lambda_rule",
                "saturation selects the best lambda per n from a grid or list");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open config file " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", path + ": " + e.what());
    }
    return parse_config(j);
}

std::vector<FilterSpec> build_filters(const ExperimentConfig& cfg, double kappa_sq) {
    std::vector<FilterSpec> out;
    for (std::size_t i = 0; i < cfg.filters.size(); ++i) {
        const std::string path = "filters[" + std::to_string(i) + "]";
        const FilterDescriptor d = filter_from_json(cfg.filters[i], kappa_sq, path);
        try {
            out.push_back(make_filter(d, kappa_sq));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
        }
    }
    return out;
}

void check_truncation_budget(const EigenSystem& sys, const std::vector<FilterSpec>& filters,
                             double min_lambda) {
    for (const auto& f : filters) {
        const double n2 = phi_effective_dim(sys, f, 2.0, min_lambda);
        const double tail = phi_effective_dim_tail(sys, f, 2.0, min_lambda);
        if (!(tail < 1e-3 * n2)) {
            std::ostringstream os;
            os << "truncation budget exceeded for " << f.name() << " at lambda=" << min_lambda
               << ": tail bound " << tail << " vs N_2 " << n2 << "; increase m_max";
            throw ConfigError("system.m_max", os.str());
        }
    }
}

std::vector<RiskBreakdown> evaluate_design(const EigenSystem& sys,
                                           const std::vector<SourceFunction>& sources,
                                           const std::vector<FilterSpec>& filters, Eigen::Index n,
                                           std::uint64_t seed, const std::vector<CellRequest>& cells,
                                           double sigma_sq, DesignTiming* timing) {
    if (sources.empty()) {
        throw std::invalid_argument("evaluate_design: need at least one source");
    }
    auto t0 = clock_type::now();
    const SampleDesign x = sample_design(sys, n, seed);
    const GramPack gp = build_gram(sys, sources[0], x);
    std::vector<std::pair<Eigen::VectorXcd, Eigen::VectorXcd>> vecs(sources.size());
    for (std::size_t s = 1; s < sources.size(); ++s) {
        vecs[s] = source_vectors(sys, sources[s], x);
    }
    const double t_build = seconds_since(t0);
    t0 = clock_type::now();
    SpectralCache cache(gp, sys.kappa_sq());
    const double t_dec = seconds_since(t0);
    t0 = clock_type::now();

    // group by source so each rebinding happens once
    std::vector<RiskBreakdown> out(cells.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        bool bound = false;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].source != s) {
                continue;
            }
            if (!bound) {
                if (s == 0) {
                    cache.bind_source(gp.y_star, gp.b, gp.f_norm_sq);
                } else {
                    cache.bind_source(vecs[s].first, vecs[s].second, sources[s].norm_sq());
                }
                bound = true;
            }
            out[c] = exact_conditional_risk(cache, filters.at(cells[c].filter), cells[c].lambda,
                                            sigma_sq);
            out[c].seed = seed;
        }
    }
    if (timing != nullptr) {
        timing->build_seconds += t_build;
        timing->decompose_seconds += t_dec;
        timing->evaluate_seconds += seconds_since(t0);
    }
    return out;
}

std::pair<double, double> Predictor::terms(std::size_t source, std::size_t filter, double lambda) {
    const auto key = std::make_tuple(source, filter, lambda);
    auto it = memo_.find(key);
    if (it == memo_.end()) {
        const auto& f = filters_->at(filter);
        const double b = bias_main_term(*sys_, sources_->at(source), f, lambda);
        const double n2 = phi_effective_dim(*sys_, f, 2.0, lambda);
        it = memo_.emplace(key, std::make_pair(b, n2)).first;
    }
    return it->second;
}

void Predictor::attach(RiskBreakdown& r, std::size_t source, std::size_t filter, double sigma_sq) {
    const auto [b, n2] = terms(source, filter, r.lambda);
    r.pred_bias_sq = b;
    r.pred_var = sigma_sq / r.n * n2;
}

std::string risk_csv(const std::vector<RiskBreakdown>& rows, const std::string& config_hash) {
    std::ostringstream os;
    os << "# config_hash=" << config_hash << "\n";
    os << "n,lambda,bias_sq,var,total,pred_bias_sq,pred_var,ratio,seed\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.n << ',' << r.lambda << ',' << r.bias_sq << ',' << r.var << ',' << r.total() << ','
           << r.pred_bias_sq << ',' << r.pred_var << ',' << r.ratio() << ',' << r.seed << '\n';
    }
    return os.str();
}

RunResult run(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) {
        omp_set_num_threads(cfg.threads);
    }
    const std::string hash = config_hash(cfg.raw);
    RunResult res;
    switch (cfg.mode) {
    case RunMode::curve:
        res = run_curve(cfg, hash);
        break;
    case RunMode::sweep:
    case RunMode::saturation:
        res = run_sweep(cfg, hash);
        break;
    case RunMode::verify_filter:
        res = run_verify_filter(cfg, hash);
        break;
    case RunMode::verify_contour:
        res = run_verify_contour(cfg, hash);
        break;
    case RunMode::interpolating:
        res = run_interpolating(cfg, hash);
        break;
    }
    res.summary["exit_code"] = res.exit_code;
    res.files.push_back(write_json(cfg.output, to_string(cfg.mode) + "_summary.json", res.summary));
    return res;
}

json report_diff(const json& a, const json& b) {
    if (!a.contains("schema") || !b.contains("schema")) {
        throw ConfigError("schema", "both reports must carry a schema tag");
    }
    if (a["schema"] != b["schema"]) {
        throw ConfigError("schema", "schema mismatch: " + a["schema"].get<std::string>() + " vs " +
                                        b["schema"].get<std::string>());
    }
    json out{{"schema", "speclab.diff/1"},
             {"a_config_hash", a.value("config_hash", "")},
             {"b_config_hash", b.value("config_hash", "")}};
    for (const char* section : {"slopes", "table"}) {
        json deltas = json::object();
        json unmatched = json::array();
        const json sa = a.value(section, json::object());
        const json sb = b.value(section, json::object());
        for (const auto& [k, v] : sa.items()) {
            if (sb.contains(k) && v.is_number() && sb[k].is_number()) {
                deltas[k] = {{"a", v}, {"b", sb[k]}, {"delta", sb[k].get<double>() - v.get<double>()}};
            } else {
                unmatched.push_back(k);
            }
        }
        for (const auto& [k, v] : sb.items()) {
            if (!sa.contains(k)) {
                unmatched.push_back(k);
            }
        }
        out[section] = deltas;
        out[std::string(section) + "_unmatched"] = unmatched;
    }
    // summaries produced from different filters: pair slope keys by suffix when only one
    // slope of that kind exists on each side
    json cross = json::object();
    const json sa = a.value("slopes", json::object());
    const json sb = b.value("slopes", json::object());
    for (const auto& [ka, va] : sa.items()) {
        const auto pa = ka.rfind(':');
        const std::string kind = pa == std::string::npos ? ka : ka.substr(pa + 1);
        for (const auto& [kb, vb] : sb.items()) {
            const auto pb = kb.rfind(':');
            const std::string kind_b = pb == std::string::npos ? kb : kb.substr(pb + 1);
            if (kind == kind_b && ka != kb && va.is_number() && vb.is_number()) {
                cross[ka + " -> " + kb] = vb.get<double>() - va.get<double>();
            }
        }
    }
    out["slope_cross_deltas"] = cross;
    return out;
}

} // namespace speclab
