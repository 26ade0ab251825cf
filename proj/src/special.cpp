#include "speclab/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace speclab::special {

namespace {

// B_0 .. B_16 (B_1 = -1/2 convention).
constexpr std::array<double, 17> kBernoulli = {
    1.0,        -0.5,        1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0, 0.0, -1.0 / 30.0,
    0.0,        5.0 / 66.0,  0.0,       -691.0 / 2730.0,  0.0, 7.0 / 6.0,  0.0,
    -3617.0 / 510.0};

} // namespace

double binomial(std::int64_t n, std::int64_t k) {
    if (n < 0 || k < 0 || k > n) {
        return 0.0;
    }
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::int64_t i = 1; i <= k; ++i) {
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return std::round(r);
}

double hurwitz_zeta(double s, double a) {
    if (!(s > 1.0) || !(a > 0.0)) {
        throw std::invalid_argument("hurwitz_zeta: requires s > 1 and a > 0");
    }
    // Direct head plus Euler-Maclaurin tail from a + N.
    constexpr int kHead = 12;
    double sum = 0.0;
    for (int k = 0; k < kHead; ++k) {
        sum += std::pow(a + k, -s);
    }
    const double x = a + kHead;
    sum += std::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(x, -s);
    // sum_j B_{2j}/(2j)! * s(s+1)...(s+2j-2) x^{-s-2j+1}
    double rising = s;
    double fact = 2.0;
    for (int j = 1; j <= 6; ++j) {
        const double term = kBernoulli[2 * j] / fact * rising * std::pow(x, -s - 2 * j + 1);
        sum += term;
        rising *= (s + 2 * j - 1) * (s + 2 * j);
        fact *= (2 * j + 1) * (2 * j + 2);
    }
    return sum;
}

double bernoulli_poly(int n, double t) {
    if (n < 0 || n > 16) {
        throw std::invalid_argument("bernoulli_poly: order out of range");
    }
    double r = 0.0;
    for (int k = 0; k <= n; ++k) {
        r += binomial(n, k) * kBernoulli[k] * std::pow(t, n - k);
    }
    return r;
}

std::optional<double> cosine_zeta_series(double q, double delta) {
    const double qr = std::round(q);
    if (std::abs(q - qr) > 1e-12 || qr < 2 || qr > 16 || static_cast<int>(qr) % 2 != 0) {
        return std::nullopt;
    }
    const int n = static_cast<int>(qr);
    const int r = n / 2;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(delta, two_pi) / two_pi;
    if (t < 0.0) {
        t += 1.0;
    }
    double fact = 1.0;
    for (int k = 2; k <= n; ++k) {
        fact *= k;
    }
    const double sign = (r % 2 == 1) ? 1.0 : -1.0;
    return sign * std::pow(two_pi, n) * bernoulli_poly(n, t) / (2.0 * fact);
}

double gegenbauer(int m, double alpha, double t) {
    if (m < 0) {
        throw std::invalid_argument("gegenbauer: negative degree");
    }
    double c_prev = 1.0;
    if (m == 0) {
        return c_prev;
    }
    double c = 2.0 * alpha * t;
    for (int k = 2; k <= m; ++k) {
        const double next = (2.0 * t * (k + alpha - 1.0) * c - (k + 2.0 * alpha - 2.0) * c_prev) / k;
        c_prev = c;
        c = next;
    }
    return c;
}

} // namespace speclab::special
