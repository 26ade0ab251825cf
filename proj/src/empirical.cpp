#include "speclab/empirical.hpp"

#include <cmath>
#include <tuple>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "speclab/linalg.hpp"
#include "speclab/stats.hpp"
#include "speclab/theory.hpp"

namespace speclab {

SampleDesign sample_design(const EigenSystem& sys, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("sample_design: n must be >= 1");
    }
    if (!sys.supports_point_eval()) {
        throw std::invalid_argument("sample_design: abstract system has no point domain");
    }
    SampleDesign d;
    d.seed = seed;
    d.domain = sys.family();
    const int dim = sys.point_dim();
    std::mt19937_64 rng(seed);
    d.points.resize(dim, n);
    if (sys.family() == SystemFamily::torus) {
        std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
        for (Eigen::Index i = 0; i < n; ++i) {
            d.points(0, i) = u(rng);
        }
    } else {
        std::normal_distribution<double> g(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            double nrm = 0.0;
            do {
                for (int k = 0; k < dim; ++k) {
                    d.points(k, i) = g(rng);
                }
                nrm = d.points.col(i).norm();
            } while (nrm == 0.0);
            d.points.col(i) /= nrm;
        }
    }
    return d;
}

namespace {

template <bool Parallel>
Eigen::MatrixXd kernel_matrix_impl(const EigenSystem& sys, int power, const SampleDesign& x,
                                   double* imag_residue) {
    const Eigen::Index n = x.n();
    Eigen::MatrixXd k(n, n);
    double resid = 0.0;
#pragma omp parallel for schedule(dynamic, 16) reduction(max : resid) if (Parallel)
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const cplx v = kernel_eval(sys, power, x.point(i), x.point(j));
            k(i, j) = v.real();
            resid = std::max(resid, std::abs(v.imag()));
        }
    }
    k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
    if (imag_residue != nullptr) {
        *imag_residue = std::max(*imag_residue, resid);
    }
    return k;
}

template <bool Parallel>
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> source_vectors_impl(const EigenSystem& sys,
                                                                  const SourceFunction& f,
                                                                  const SampleDesign& x) {
    if (!f.has_point_eval()) {
        throw std::invalid_argument("source has no point-evaluable representation");
    }
    const Eigen::Index n = x.n();
    Eigen::VectorXcd y(n);
    Eigen::VectorXcd b(n);
#pragma omp parallel for schedule(static) if (Parallel)
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = f.evaluate(sys, x.point(i));
        b[i] = f.apply_T(sys, x.point(i));
    }
    return {std::move(y), std::move(b)};
}

template <bool Parallel>
GramPack build_gram_impl(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x) {
    if (!f.has_point_eval()) {
        throw std::invalid_argument("build_gram: source has no point-evaluable representation");
    }
    GramPack gp;
    const Eigen::Index n = x.n();
    gp.K = kernel_matrix_impl<Parallel>(sys, 1, x, &gp.imag_residue) / static_cast<double>(n);
    gp.G2 = kernel_matrix_impl<Parallel>(sys, 2, x, &gp.imag_residue);
    if (gp.imag_residue > 1e-10) {
        throw std::runtime_error("build_gram: kernel has a non-negligible imaginary part");
    }
    std::tie(gp.y_star, gp.b) = source_vectors_impl<Parallel>(sys, f, x);
    gp.f_norm_sq = f.norm_sq();
    return gp;
}

} // namespace

Eigen::MatrixXd kernel_matrix(const EigenSystem& sys, int power, const SampleDesign& x) {
    return kernel_matrix_impl<true>(sys, power, x, nullptr);
}

Eigen::MatrixXd kernel_matrix_serial(const EigenSystem& sys, int power, const SampleDesign& x) {
    return kernel_matrix_impl<false>(sys, power, x, nullptr);
}

GramPack build_gram(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x) {
    return build_gram_impl<true>(sys, f, x);
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> source_vectors(const EigenSystem& sys,
                                                             const SourceFunction& f,
                                                             const SampleDesign& x) {
    return source_vectors_impl<true>(sys, f, x);
}

GramPack build_gram_serial(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x) {
    return build_gram_impl<false>(sys, f, x);
}

SpectralCache::SpectralCache(const GramPack& gp, double kappa_sq) : gp_(&gp) {
    SymEig eig = eigh(gp.K);
    evals_ = std::move(eig.values);
    vectors_ = std::move(eig.vectors);
    const double tol = 1e-10 * std::max(kappa_sq, 1.0);
    for (Eigen::Index i = 0; i < evals_.size(); ++i) {
        if (evals_[i] > kappa_sq + 1e-8) {
            throw std::runtime_error("SpectralCache: eigenvalue of K exceeds kappa^2");
        }
        if (evals_[i] < 0.0) {
            if (evals_[i] < -tol) {
                throw std::runtime_error("SpectralCache: K is not positive semidefinite");
            }
            evals_[i] = 0.0;
            ++clamped_;
        }
    }
    const Eigen::MatrixXd g2u = gp.G2 * vectors_;
    g2_diag_ = (vectors_.array() * g2u.array()).colwise().sum().transpose();
    bind_source(gp.y_star, gp.b, gp.f_norm_sq);
}

void SpectralCache::bind_source(const Eigen::VectorXcd& y, const Eigen::VectorXcd& b,
                                double f_norm_sq) {
    if (y.size() != n() || b.size() != n()) {
        throw std::invalid_argument("SpectralCache::bind_source: size mismatch");
    }
    const Eigen::VectorXd re = vectors_.transpose() * y.real();
    const Eigen::VectorXd im = vectors_.transpose() * y.imag();
    uty_.resize(n());
    uty_.real() = re;
    uty_.imag() = im;
    b_ = b;
    f_norm_sq_ = f_norm_sq;
}

Eigen::VectorXd SpectralCache::filtered(const FilterSpec& f, double lambda) const {
    Eigen::VectorXd v(evals_.size());
    for (Eigen::Index i = 0; i < evals_.size(); ++i) {
        v[i] = f.phi(lambda, evals_[i]);
    }
    return v;
}

Eigen::VectorXcd SpectralCache::coefficients(const FilterSpec& f, double lambda) const {
    const Eigen::VectorXd ph = filtered(f, lambda);
    const Eigen::VectorXcd c = ph.cast<cplx>().cwiseProduct(uty_) / static_cast<double>(gp_->n());
    return vectors_.cast<cplx>() * c;
}

double SpectralCache::bias_sq(const FilterSpec& f, double lambda) const {
    const Eigen::VectorXd ph = filtered(f, lambda);
    const Eigen::VectorXcd c = ph.cast<cplx>().cwiseProduct(uty_) / static_cast<double>(gp_->n());
    const Eigen::VectorXd ar = vectors_ * c.real();
    const Eigen::VectorXd ai = vectors_ * c.imag();
    const auto& g2 = gp_->G2;
    const double quad = ar.dot(g2 * ar) + ai.dot(g2 * ai);
    // Re(alpha^H b)
    const double cross = ar.dot(b_.real()) + ai.dot(b_.imag());
    return quad - 2.0 * cross + f_norm_sq_;
}

double SpectralCache::variance(const FilterSpec& f, double lambda, double sigma_sq) const {
    const Eigen::VectorXd ph = filtered(f, lambda);
    const double n = static_cast<double>(gp_->n());
    return sigma_sq / (n * n) * ph.cwiseAbs2().dot(g2_diag_);
}

RiskBreakdown exact_conditional_risk(const SpectralCache& cache, const FilterSpec& f, double lambda,
                                     double sigma_sq) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("exact_conditional_risk: lambda must be positive");
    }
    RiskBreakdown r;
    r.n = static_cast<double>(cache.gram().n());
    r.lambda = lambda;
    r.bias_sq = cache.bias_sq(f, lambda);
    r.var = sigma_sq == 0.0 ? 0.0 : cache.variance(f, lambda, sigma_sq);
    return r;
}

RiskBreakdown exact_conditional_risk(const GramPack& gp, const FilterSpec& f, double lambda,
                                     double sigma_sq, double kappa_sq) {
    const SpectralCache cache(gp, kappa_sq);
    return exact_conditional_risk(cache, f, lambda, sigma_sq);
}

void attach_prediction(RiskBreakdown& r, const EigenSystem& sys, const SourceFunction& f,
                       const FilterSpec& filter, double sigma_sq) {
    r.pred_bias_sq = bias_main_term(sys, f, filter, r.lambda);
    r.pred_var = sigma_sq / r.n * phi_effective_dim(sys, filter, 2.0, r.lambda);
}

MonotonicityReport variance_monotonicity_probe(const SpectralCache& cache, const FilterSpec& f,
                                               const std::vector<std::pair<double, double>>& pairs,
                                               double sigma_sq) {
    MonotonicityReport rep;
    for (const auto& [small, large] : pairs) {
        if (!(small <= large)) {
            throw std::invalid_argument("variance_monotonicity_probe: pairs must be ordered");
        }
        const double vs = cache.variance(f, small, sigma_sq);
        const double vl = cache.variance(f, large, sigma_sq);
        rep.lambda_small.push_back(small);
        rep.lambda_large.push_back(large);
        rep.margin.push_back(vl > 0.0 ? (vs - vl) / vl : vs - vl);
        if (vs < vl - 1e-12 * vl) {
            ++rep.violations;
        }
    }
    return rep;
}

InterpolatingReport interpolating_probe(const EigenSystem& sys, const SourceFunction& f,
                                        const FilterSpec& filter, double sigma_sq,
                                        const std::vector<double>& n_grid, std::uint64_t seed) {
    InterpolatingReport rep;
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
        if (!(n_grid[i] > n_grid[i - 1])) {
            throw std::invalid_argument("interpolating_probe: n grid must be increasing");
        }
    }
    rep.n_grid = n_grid;
    rep.floor = std::numeric_limits<double>::infinity();
    for (double nd : n_grid) {
        const auto n = static_cast<Eigen::Index>(std::llround(nd));
        const double lambda = std::pow(nd, -sys.beta());
        if (!sys.closed_form_series() && sys.mu().back() > 1e-2 * lambda) {
            std::ostringstream os;
            os << "n=" << n << ": smallest represented eigenvalue " << sys.mu().back()
               << " is not far below lambda=" << lambda;
            rep.warnings.push_back(os.str());
        }
        const SampleDesign x = sample_design(sys, n, seed);
        const GramPack gp = build_gram(sys, f, x);
        const SpectralCache cache(gp, sys.kappa_sq());
        const double v = sigma_sq == 0.0 ? 0.0 : cache.variance(filter, lambda, sigma_sq) / sigma_sq;
        const double ln = std::log(nd);
        rep.lambdas.push_back(lambda);
        rep.var_over_sigma.push_back(v);
        rep.log_weighted_half.push_back(v * std::sqrt(ln));
        rep.log_weighted_one.push_back(v * ln);
        rep.floor = std::min(rep.floor, v);
    }
    if (n_grid.size() >= 2 && rep.floor > 0.0) {
        rep.slope = fit_loglog(n_grid, rep.var_over_sigma).slope;
    }
    return rep;
}

MonteCarloEstimate monte_carlo_risk(const EigenSystem& sys, const SourceFunction& f,
                                    const SampleDesign& x, const FilterSpec& filter, double lambda,
                                    double sigma_sq, int draws, std::uint64_t seed) {
    if (sys.family() != SystemFamily::torus || sys.closed_form_series()) {
        throw std::invalid_argument(
            "monte_carlo_risk: needs a torus system whose kernel is its truncated Mercer sum");
    }
    if (draws < 2) {
        throw std::invalid_argument("monte_carlo_risk: need at least two draws");
    }
    const Eigen::Index n = x.n();
    const Eigen::MatrixXd k = kernel_matrix(sys, 1, x) / static_cast<double>(n);
    const SymEig eig = eigh(k);
    Eigen::VectorXd ph(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ph[i] = filter.phi(lambda, std::max(eig.values[i], 0.0));
    }
    // alpha = filt * y, filt = U phi(Lambda) U^T / n
    const Eigen::MatrixXd filt =
        eig.vectors * ph.asDiagonal() * eig.vectors.transpose() / static_cast<double>(n);

    // Fourier coefficients of sum_i alpha_i k(x_i, .): mu_m sum_i alpha_i conj(e_{m,l}(x_i))
    const auto mu = sys.mu();
    const auto ncoef = static_cast<Eigen::Index>(sys.counted_size());
    Eigen::MatrixXcd coef(ncoef, n);
    Eigen::VectorXcd target = Eigen::VectorXcd::Zero(ncoef);
    Eigen::Index row = 0;
    for (int m = 1; m <= sys.m_max(); ++m) {
        const double w = mu[static_cast<std::size_t>(m - 1)];
        const auto d = sys.mult()[static_cast<std::size_t>(m - 1)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto e = sys.eval_block(m, x.point(i));
            for (std::int64_t l = 0; l < d; ++l) {
                coef(row + l, i) = w * std::conj(e[static_cast<std::size_t>(l)]);
            }
        }
        if (m <= f.blocks()) {
            const auto c = f.coeff_block(m);
            for (std::int64_t l = 0; l < d; ++l) {
                target[row + l] = c[static_cast<std::size_t>(l)];
            }
        }
        row += d;
    }
    Eigen::VectorXcd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = f.evaluate(sys, x.point(i));
    }
    const Eigen::MatrixXcd map = coef * filt.cast<cplx>();
    const Eigen::VectorXcd base = map * y - target;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(sigma_sq));
    Eigen::VectorXd eps(n);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int t = 0; t < draws; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            eps[i] = g(rng);
        }
        const double err = (base + map * eps.cast<cplx>()).squaredNorm();
        sum += err;
        sum_sq += err * err;
    }
    MonteCarloEstimate est;
    est.draws = draws;
    est.mean = sum / draws;
    const double var = std::max(sum_sq / draws - est.mean * est.mean, 0.0) * draws / (draws - 1.0);
    est.stderr_mean = std::sqrt(var / draws);
    return est;
}

} // namespace speclab
