#include "speclab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace speclab {

namespace {

void check_lambda(double lambda, const char* who) {
    if (!(lambda > 0.0) || !(lambda < 1.0)) {
        throw std::invalid_argument(std::string(who) + ": lambda must lie in (0, 1)");
    }
}

} // namespace

double bias_main_term(const EigenSystem& sys, const SourceFunction& f, const FilterSpec& filter,
                      double lambda) {
    check_lambda(lambda, "bias_main_term");
    const auto mu = sys.mu();
    const auto fb = f.fbar_sq();
    double acc = 0.0;
    // small terms first
    for (std::size_t i = fb.size(); i-- > 0;) {
        if (fb[i] == 0.0) {
            continue;
        }
        const double ps = filter.psi(lambda, mu[i]);
        acc += ps * ps * fb[i];
    }
    return acc;
}

double phi_effective_dim(const EigenSystem& sys, const FilterSpec& filter, double p, double lambda) {
    check_lambda(lambda, "phi_effective_dim");
    if (!(p >= 1.0)) {
        throw std::invalid_argument("phi_effective_dim: order p must be >= 1");
    }
    const auto mu = sys.mu();
    const auto d = sys.mult();
    double acc = 0.0;
    for (std::size_t i = mu.size(); i-- > 0;) {
        const double v = mu[i] * filter.phi(lambda, mu[i]);
        acc += static_cast<double>(d[i]) * (p == 2.0 ? v * v : std::pow(v, p));
    }
    return acc;
}

double phi_effective_dim_tail(const EigenSystem& sys, const FilterSpec& filter, double p,
                              double lambda) {
    return std::pow(filter.E_const() / lambda, p) * sys.tail_power_sum(p);
}

CountResult counting_function(const EigenSystem& sys, double eps) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("counting_function: eps must be positive");
    }
    const auto mu = sys.mu();
    // mu is strictly decreasing: count blocks with mu_m >= eps
    const auto it = std::partition_point(mu.begin(), mu.end(), [eps](double v) { return v >= eps; });
    const auto m = static_cast<int>(it - mu.begin());
    return {sys.cumulative(m), eps < mu.back()};
}

double phi_integral(const EigenSystem& sys, double lambda, bool with_tail) {
    const auto mu = sys.mu();
    const auto d = sys.mult();
    double acc = with_tail ? sys.tail_power_sum(1.0) : 0.0;
    for (std::size_t i = mu.size(); i-- > 0;) {
        acc += static_cast<double>(d[i]) * std::min(lambda, mu[i]);
    }
    return acc;
}

MinimaxRate minimax_rate(double beta, double s, double tau_max) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("minimax_rate: beta must exceed 1");
    }
    if (!(s > 0.0)) {
        throw std::invalid_argument("minimax_rate: s must be positive");
    }
    MinimaxRate r;
    r.saturated = s > 2.0 * tau_max;
    const double st = r.saturated ? 2.0 * tau_max : s;
    r.exponent = -st * beta / (st * beta + 1.0);
    // bias lambda^st against variance lambda^{-1/beta}/n balances at lambda = n^{-beta/(st beta + 1)}
    r.theta = beta / (st * beta + 1.0);
    return r;
}

Sandwich effective_dim_sandwich(const EigenSystem& sys, const FilterSpec& filter, double p,
                                double lambda, double E, double F1) {
    Sandwich s;
    s.value = phi_effective_dim(sys, filter, p, lambda);
    s.lower = std::pow(2.0, -p) * static_cast<double>(counting_function(sys, 2.0 * F1 * lambda).count);
    s.upper = p * std::pow(E, p) / lambda * phi_integral(sys, lambda, false);
    return s;
}

double residual_lower_bound(const EigenSystem& sys, const SourceFunction& f, double E, double lambda) {
    const auto mu = sys.mu();
    const auto fb = f.fbar_sq();
    const double cut = lambda / (2.0 * E);
    double acc = 0.0;
    for (std::size_t i = fb.size(); i-- > 0;) {
        if (mu[i] < cut) {
            acc += fb[i];
        }
    }
    return 0.25 * acc;
}

double bias_upper_bound(const EigenSystem& sys, const SourceFunction& f, const FilterSpec& filter,
                        double t, double lambda) {
    const double tau = filter.qualification();
    const double theta = std::min(0.5 * t, tau);
    const double excess = std::max(t - 2.0 * tau, 0.0);
    const double ft = filter.F_tau(theta);
    return ft * ft * std::pow(sys.kappa_sq(), excess) * interp_norm_sq(sys, f, t) *
           std::pow(lambda, 2.0 * theta);
}

std::size_t TheoryCurve::argmin(std::size_t i_n) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (predicted(i, i_n) < predicted(best, i_n)) {
            best = i;
        }
    }
    return best;
}

TheoryCurve compute_theory_curve(const EigenSystem& sys, const SourceFunction& f,
                                 const FilterSpec& filter, double sigma_sq,
                                 const std::vector<double>& lambdas,
                                 const std::vector<double>& n_grid) {
    TheoryCurve c;
    c.lambdas = lambdas;
    c.n_grid = n_grid;
    c.sigma_sq = sigma_sq;
    c.filter = filter.name();
    c.bias_sq.resize(lambdas.size());
    c.n2.resize(lambdas.size());
    std::vector<double> tail_rel(lambdas.size());
    const auto nl = static_cast<std::ptrdiff_t>(lambdas.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < nl; ++i) {
        const auto k = static_cast<std::size_t>(i);
        c.bias_sq[k] = bias_main_term(sys, f, filter, lambdas[k]);
        c.n2[k] = phi_effective_dim(sys, filter, 2.0, lambdas[k]);
        tail_rel[k] = phi_effective_dim_tail(sys, filter, 2.0, lambdas[k]) / c.n2[k];
    }
    for (double t : tail_rel) {
        c.n2_tail_worst = std::max(c.n2_tail_worst, t);
    }
    return c;
}

std::string theory_curve_csv(const TheoryCurve& c, const std::string& config_hash) {
    std::ostringstream os;
    os << "# config_hash=" << config_hash << "\n";
    os << "lambda,bias_sq,n,var_term,predicted_risk\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        for (std::size_t j = 0; j < c.n_grid.size(); ++j) {
            os << c.lambdas[i] << ',' << c.bias_sq[i] << ',' << c.n_grid[j] << ','
               << c.var_term(i, j) << ',' << c.predicted(i, j) << '\n';
        }
    }
    return os.str();
}

bool quasi_convex(const std::vector<double>& v) {
    // once the sequence has started rising it may not fall again
    bool rising = false;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) {
            rising = true;
        } else if (rising && v[i] < v[i - 1]) {
            return false;
        }
    }
    return true;
}

} // namespace speclab
