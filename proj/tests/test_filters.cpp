#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "speclab/filters.hpp"
#include "speclab/stats.hpp"

using namespace speclab;

namespace {

std::vector<double> z_grid(double kappa_sq, int points) {
    std::vector<double> zs{0.0};
    for (int i = 0; i < points - 1; ++i) {
        zs.push_back(kappa_sq * std::pow(10.0, -10.0 + 10.0 * i / (points - 2)));
    }
    return zs;
}

double sup_scaled_psi(const FilterSpec& f, double tau, const std::vector<double>& lams,
                      const std::vector<double>& zs) {
    double s = 0.0;
    for (double l : lams) {
        for (double z : zs) {
            s = std::max(s, std::pow(z, tau) * f.psi(l, z) / std::pow(l, tau));
        }
    }
    return s;
}

} // namespace

TEST_CASE("closed-form filter values") {
    const FilterSpec krr = make_krr();
    CHECK(krr.phi(0.1, 0.1) == doctest::Approx(5.0));
    CHECK(krr.psi(0.1, 0.1) == doctest::Approx(0.5));
    const FilterSpec gf = make_gradient_flow();
    for (double l : {1e-5, 1e-2, 0.5}) {
        CHECK(gf.psi(l, 0.0) == 1.0);
    }
    const FilterSpec ir3 = make_iterated_ridge(3.0);
    CHECK(ir3.psi(0.2, 0.2) == doctest::Approx(0.125));
    CHECK(ir3.psi(0.01, 0.3) == doctest::Approx(std::pow(0.01 / 0.31, 3.0)).epsilon(1e-14));
}

TEST_CASE("phi and psi satisfy the identity in real and complex arguments") {
    const std::vector<FilterSpec> fs{make_krr(), make_iterated_ridge(2.5), make_gradient_flow(),
                                     make_gradient_descent(0.2, 1.0)};
    for (const auto& f : fs) {
        for (double l : {1e-4, 1e-2, 0.3}) {
            for (double z : {0.0, 1e-9, 1e-6 * l, 1e-3, 0.2, 1.0}) {
                CHECK(std::abs(f.psi(l, z) + z * f.phi(l, z) - 1.0) < 1e-12);
            }
            for (cplx z : {cplx(-0.3 * l, 0.2 * l), cplx(0.5, -0.4), cplx(1e-7, 1e-7)}) {
                CHECK(std::abs(f.psi(l, z) + z * f.phi(l, z) - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("complex and real evaluations agree on the real axis") {
    const std::vector<FilterSpec> fs{make_krr(), make_iterated_ridge(2.0), make_gradient_flow(),
                                     make_gradient_descent(0.2, 1.0)};
    for (const auto& f : fs) {
        for (double z : {0.0, 1e-8, 0.003, 0.4}) {
            const cplx c = f.phi(0.01, cplx(z, 0.0));
            CHECK(std::abs(c.real() - f.phi(0.01, z)) <= 1e-12 * std::abs(f.phi(0.01, z)));
            CHECK(std::abs(c.imag()) < 1e-12);
        }
    }
}

TEST_CASE("gradient descent with integer steps equals the geometric sum") {
    const double eta = 0.1;
    const FilterSpec gd = make_gradient_descent(eta, 1.0);
    for (int t : {1, 4, 10, 37}) {
        const double lambda = 1.0 / (eta * t);
        REQUIRE(gd.steps(lambda) == doctest::Approx(t));
        for (double z : {0.0, 0.05, 0.5, 1.0, 1.9}) {
            double sum = 0.0;
            for (int k = 0; k < t; ++k) {
                sum += std::pow(1.0 - eta * z, k);
            }
            CHECK(std::abs(gd.phi(lambda, z) - eta * sum) <= 1e-12 * std::max(1.0, eta * sum));
        }
    }
}

TEST_CASE("filter constructors validate parameters") {
    CHECK_THROWS_AS(make_iterated_ridge(0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_gradient_descent(0.6, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_gradient_descent(0.0, 1.0), std::invalid_argument);
    CHECK_NOTHROW(make_gradient_descent(0.4, 1.0));
}

TEST_CASE("qualification and declared constants") {
    CHECK(make_krr().qualification() == 1.0);
    CHECK(make_iterated_ridge(3.0).qualification() == 3.0);
    CHECK(std::isinf(make_gradient_flow().qualification()));
    CHECK(make_krr().E_const() == 1.0);
    CHECK(make_iterated_ridge(3.0).E_const() == 3.0);
    CHECK(make_gradient_descent(0.1, 1.0).E_const() == 2.0);
    for (double tau : {1.0, 2.0, 4.0}) {
        CHECK(make_gradient_flow().F_tau(tau) == doctest::Approx(std::pow(tau / std::numbers::e, tau)));
    }
    CHECK(std::isnan(make_gradient_flow().F_lower(1.0)));
    CHECK(make_krr().F_lower(1.0) == doctest::Approx(0.5));
}

TEST_CASE("measured E for KRR is one") {
    const auto lams = log_grid(1e-6, 1e-1, 20);
    const auto zs = z_grid(1.0, 100);
    const AuditReport a = audit_real_axis(make_krr(), lams, zs, {0.0, 1.0}, 1.0);
    CHECK(a.measured_E == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.ok());
}

TEST_CASE("gradient flow second-order qualification constant") {
    const auto lams = log_grid(1e-5, 1e-1, 10);
    std::vector<double> zs;
    for (double e = -12.0; e <= 0.0; e += 0.001) {
        zs.push_back(std::pow(10.0, e));
    }
    const double s = sup_scaled_psi(make_gradient_flow(), 2.0, lams, zs);
    // (2/e)^2 = 0.541341...
    CHECK(s <= std::pow(2.0 / std::numbers::e, 2.0) * (1.0 + 1e-12));
    CHECK(s >= 0.5413);
}

TEST_CASE("iterated ridge(2) has qualification two and not more") {
    const FilterSpec f = make_iterated_ridge(2.0);
    const auto zs = z_grid(1.0, 400);
    double prev = 0.0;
    for (double l : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
        CHECK(sup_scaled_psi(f, 2.0, {l}, zs) <= 1.0 + 1e-12);
        const double grow = sup_scaled_psi(f, 2.5, {l}, zs);
        CHECK(grow > prev);
        prev = grow;
    }
}

TEST_CASE("gradient descent real-axis E stays below two") {
    const FilterSpec gd = make_gradient_descent(0.1, 1.0);
    const AuditReport a = audit_real_axis(gd, log_grid(1e-5, 0.9, 16), z_grid(1.0, 200), {1.0}, 1.0);
    CHECK(a.measured_E <= 2.0);
    CHECK(a.measured_E >= 1.0);
}

TEST_CASE("phi is nondecreasing as lambda decreases") {
    const std::vector<FilterSpec> fs{make_krr(), make_iterated_ridge(2.0), make_gradient_flow(),
                                     make_gradient_descent(0.2, 1.0)};
    const auto lams = log_grid(1e-5, 0.5, 16);
    for (const auto& f : fs) {
        for (double z : {0.0, 1e-6, 1e-3, 0.1, 1.0}) {
            for (std::size_t i = 1; i < lams.size(); ++i) {
                CHECK(f.phi(lams[i - 1], z) >= f.phi(lams[i], z) * (1.0 - 1e-13));
            }
        }
    }
}

TEST_CASE("audit reports all four families clean") {
    const double ks = 1.8;
    const std::vector<FilterSpec> fs{make_krr(), make_iterated_ridge(2.0), make_gradient_flow(),
                                     make_gradient_descent(0.4 / ks, ks)};
    for (const auto& f : fs) {
        const AuditReport a = audit_real_axis(f, log_grid(1e-6, 1e-1, 20), z_grid(ks, 100),
                                              {0.0, 0.5, 1.0, 2.0}, ks);
        CHECK_MESSAGE(a.ok(), f.name());
        CHECK(a.measured_E <= f.E_const() * (1.0 + 1e-12));
    }
}
