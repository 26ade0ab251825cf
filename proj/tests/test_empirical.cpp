#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "speclab/empirical.hpp"
#include "speclab/stats.hpp"
#include "speclab/theory.hpp"

using namespace speclab;

namespace {

/// Risk of the KRR estimator computed coefficient-wise: the estimator's Fourier coefficients
/// are mu_m sum_i alpha_i conj(e_{m,l}(x_i)), and both bias and noise terms are read off in
/// that basis (Parseval), independently of the Gram identities.
std::pair<double, double> fourier_oracle(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x,
                                         double lambda, double sigma_sq) {
    const Eigen::Index n = x.n();
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (int m = 1; m <= sys.m_max(); ++m) {
                const auto ei = sys.eval_block(m, x.point(i));
                const auto ej = sys.eval_block(m, x.point(j));
                for (std::size_t l = 0; l < ei.size(); ++l) {
                    acc += sys.mu()[static_cast<std::size_t>(m - 1)] * std::conj(ei[l]) * ej[l];
                }
            }
            k(i, j) = acc;
        }
    }
    const Eigen::MatrixXcd a = (k / static_cast<double>(n) + lambda * Eigen::MatrixXcd::Identity(n, n)).inverse() /
                               static_cast<double>(n);
    Eigen::VectorXcd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = f.evaluate(sys, x.point(i));
    }
    const Eigen::VectorXcd alpha = a * y;
    double bias = 0.0;
    double var = 0.0;
    for (int m = 1; m <= sys.m_max(); ++m) {
        const double mu = sys.mu()[static_cast<std::size_t>(m - 1)];
        const auto coef = f.coeff_block(m);
        for (std::size_t l = 0; l < coef.size(); ++l) {
            Eigen::RowVectorXcd row(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                row[i] = mu * std::conj(sys.eval_block(m, x.point(i))[l]);
            }
            const cplx fhat = (row * alpha)(0, 0);
            bias += std::norm(fhat - coef[l]);
            var += sigma_sq * (row * a).squaredNorm();
        }
    }
    return {bias, var};
}

} // namespace

TEST_CASE("designs are deterministic per seed") {
    const EigenSystem sys = make_torus_system(2.0, 10, false);
    const SampleDesign a = sample_design(sys, 4, 7);
    const SampleDesign b = sample_design(sys, 4, 7);
    CHECK(a.points == b.points);
    CHECK(a.points != sample_design(sys, 4, 8).points);
}

TEST_CASE("torus design is uniform at the CLT scale") {
    const EigenSystem sys = make_torus_system(2.0, 10, false);
    const SampleDesign x = sample_design(sys, 10000, 1);
    cplx mean = 0.0;
    for (Eigen::Index i = 0; i < x.n(); ++i) {
        CHECK(x.point(i)[0] >= -std::numbers::pi);
        CHECK(x.point(i)[0] < std::numbers::pi);
        mean += std::polar(1.0, x.point(i)[0]);
    }
    mean /= static_cast<double>(x.n());
    CHECK(std::abs(mean) < 5.0 / std::sqrt(10000.0));
}

TEST_CASE("sphere design lies on the unit sphere") {
    const EigenSystem sys = make_sphere_system(2, 2.0, 10);
    const SampleDesign x = sample_design(sys, 1000, 3);
    REQUIRE(x.points.rows() == 3);
    for (Eigen::Index i = 0; i < x.n(); ++i) {
        CHECK(std::abs(x.points.col(i).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("one-point Gram pack") {
    const EigenSystem sys = make_torus_system(2.0, 100, false);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    const SampleDesign x = sample_design(sys, 1, 2);
    const GramPack gp = build_gram(sys, f, x);
    CHECK(gp.K(0, 0) == doctest::Approx(kernel_eval(sys, 1, x.point(0), x.point(0)).real()));
    CHECK(gp.G2(0, 0) == doctest::Approx(kernel_eval(sys, 2, x.point(0), x.point(0)).real()));
}

TEST_CASE("power-2 Gram equals the Gram of the squared system") {
    const EigenSystem sys = make_torus_system(2.0, 300, false);
    const EigenSystem sq = make_torus_system(4.0, 300, false);
    const SampleDesign x = sample_design(sys, 20, 4);
    CHECK((kernel_matrix(sys, 2, x) - kernel_matrix(sq, 1, x)).cwiseAbs().maxCoeff() < 1e-12);
    const EigenSystem closed = make_torus_system(2.0, 300, true);
    const EigenSystem closed_sq = make_torus_system(4.0, 300, true);
    CHECK((kernel_matrix(closed, 2, x) - kernel_matrix(closed_sq, 1, x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-block source gives b = mu_1 f(x)") {
    const EigenSystem sys = make_torus_system(2.0, 50, false);
    const SourceFunction f = make_block_source(sys, {1.0}, 1.0);
    const SampleDesign x = sample_design(sys, 6, 5);
    const GramPack gp = build_gram(sys, f, x);
    for (Eigen::Index i = 0; i < 6; ++i) {
        CHECK(gp.b[i] == sys.mu()[0] * gp.y_star[i]);
    }
}

TEST_CASE("parallel and serial Gram construction agree exactly") {
    const EigenSystem sys = make_torus_system(2.0, 2000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 500});
    const SampleDesign x = sample_design(sys, 64, 9);
    const GramPack a = build_gram(sys, f, x);
    const GramPack b = build_gram_serial(sys, f, x);
    CHECK(a.K == b.K);
    CHECK(a.G2 == b.G2);
    CHECK(a.b == b.b);
    CHECK(a.y_star == b.y_star);
    CHECK(kernel_matrix(sys, 1, x) == kernel_matrix_serial(sys, 1, x));
}

TEST_CASE("noiseless variance vanishes and huge lambda leaves all of f as bias") {
    const EigenSystem sys = make_torus_system(2.0, 2000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    const SampleDesign x = sample_design(sys, 50, 1);
    const GramPack gp = build_gram(sys, f, x);
    const RiskBreakdown r0 = exact_conditional_risk(gp, make_krr(), 0.05, 0.0, sys.kappa_sq());
    CHECK(r0.var == 0.0);
    const RiskBreakdown big = exact_conditional_risk(gp, make_krr(), 1e3, 1.0, sys.kappa_sq());
    CHECK(big.bias_sq / f.norm_sq() >= 0.99);
    CHECK(big.bias_sq / f.norm_sq() <= 1.0);
}

TEST_CASE("exact risk matches a Fourier-coefficient oracle") {
    const EigenSystem sys = make_torus_system(2.0, 40, false);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    for (int n : {2, 7}) {
        const SampleDesign x = sample_design(sys, n, 13);
        const GramPack gp = build_gram(sys, f, x);
        for (double l : {0.3, 0.01}) {
            const RiskBreakdown r = exact_conditional_risk(gp, make_krr(), l, 0.7, sys.kappa_sq());
            const auto [bias, var] = fourier_oracle(sys, f, x, l, 0.7);
            CHECK(r.bias_sq == doctest::Approx(bias).epsilon(1e-9));
            CHECK(r.var == doctest::Approx(var).epsilon(1e-9));
        }
    }
}

TEST_CASE("variance is linear in sigma^2 and bias does not depend on it") {
    const EigenSystem sys = make_torus_system(2.0, 2000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    const SampleDesign x = sample_design(sys, 80, 2);
    const GramPack gp = build_gram(sys, f, x);
    const SpectralCache cache(gp, sys.kappa_sq());
    for (const auto& filt : {make_krr(), make_gradient_flow()}) {
        const RiskBreakdown a = exact_conditional_risk(cache, filt, 0.02, 1.0);
        const RiskBreakdown b = exact_conditional_risk(cache, filt, 0.02, 2.0);
        CHECK(b.var == 2.0 * a.var);
        CHECK(b.bias_sq == a.bias_sq);
    }
}

TEST_CASE("variance decreases along the regularization path") {
    const EigenSystem sys = make_torus_system(2.0, 2000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    const SampleDesign x = sample_design(sys, 120, 6);
    const GramPack gp = build_gram(sys, f, x);
    const SpectralCache cache(gp, sys.kappa_sq());
    CHECK(cache.variance(make_krr(), 0.01, 1.0) >= cache.variance(make_krr(), 0.1, 1.0));
    const MonotonicityReport same = variance_monotonicity_probe(cache, make_krr(), {{0.05, 0.05}});
    CHECK(same.violations == 0);
    CHECK(same.margin[0] == 0.0);
    // gradient descent: more steps (smaller lambda) never reduce the variance
    const FilterSpec gd = make_gradient_descent(0.4 / sys.kappa_sq(), sys.kappa_sq());
    const auto lams = log_grid(1e-4, 0.5, 16);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 1; i < lams.size(); ++i) {
        pairs.emplace_back(lams[i - 1], lams[i]);
    }
    CHECK(variance_monotonicity_probe(cache, gd, pairs).violations == 0);
}

TEST_CASE("interpolating probe") {
    const EigenSystem sys = make_torus_system(2.0, 2000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 500});
    const InterpolatingReport quiet = interpolating_probe(sys, f, make_krr(), 0.0, {32, 64}, 1);
    CHECK(quiet.var_over_sigma[0] == 0.0);
    CHECK(quiet.var_over_sigma[1] == 0.0);
    const InterpolatingReport r = interpolating_probe(sys, f, make_krr(), 1.0, {32, 64, 128}, 1);
    CHECK(r.floor > 0.1);
    CHECK(r.lambdas[2] == doctest::Approx(std::pow(128.0, -2.0)));
    CHECK_THROWS_AS(interpolating_probe(sys, f, make_krr(), 1.0, {64, 32}, 1), std::invalid_argument);
}

TEST_CASE("noise Monte Carlo agrees with the exact risk") {
    const EigenSystem sys = make_torus_system(2.0, 100, false);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 0});
    const SampleDesign x = sample_design(sys, 32, 3);
    const GramPack gp = build_gram(sys, f, x);
    const RiskBreakdown r = exact_conditional_risk(gp, make_krr(), 0.05, 1.0, sys.kappa_sq());
    const MonteCarloEstimate mc = monte_carlo_risk(sys, f, x, make_krr(), 0.05, 1.0, 4000, 1);
    CHECK(std::abs(mc.mean - r.total()) <= 4.0 * mc.stderr_mean);
    const EigenSystem closed = make_torus_system(2.0, 100, true);
    CHECK_THROWS_AS(monte_carlo_risk(closed, f, x, make_krr(), 0.05, 1.0, 10, 1), std::invalid_argument);
}

TEST_CASE("risk ratio uses attached predictions") {
    const EigenSystem sys = make_torus_system(2.0, 200000, true);
    const SourceFunction f = make_source(sys, {SourceStyle::exact_powerlaw, 1.0, 1.0, 2000});
    const SampleDesign x = sample_design(sys, 200, 1);
    const GramPack gp = build_gram(sys, f, x);
    RiskBreakdown r = exact_conditional_risk(gp, make_krr(), 0.03, 1.0, sys.kappa_sq());
    attach_prediction(r, sys, f, make_krr(), 1.0);
    CHECK(r.pred_var == doctest::Approx(phi_effective_dim(sys, make_krr(), 2.0, 0.03) / 200.0));
    CHECK(r.ratio() == doctest::Approx(r.total() / r.predicted()));
    CHECK(r.ratio() > 0.5);
    CHECK(r.ratio() < 2.0);
}
