#pragma once

#include <cstdint>
#include <optional>

namespace speclab::special {

/// Hurwitz zeta sum_{k>=0} (k+a)^{-s}, s > 1, a > 0.
double hurwitz_zeta(double s, double a);

/// Bernoulli polynomial B_n(t), n <= 16.
double bernoulli_poly(int n, double t);

/// Closed form of sum_{k>=1} cos(k*delta) / k^q for even integer q in [2, 16].
/// Returns nullopt when q is not such an even integer.
std::optional<double> cosine_zeta_series(double q, double delta);

/// Gegenbauer polynomial C_m^alpha(t) by three-term recurrence.
double gegenbauer(int m, double alpha, double t);

/// Binomial coefficient C(n, k) as double; zero for k < 0 or k > n, n may be negative -> 0.
double binomial(std::int64_t n, std::int64_t k);

} // namespace speclab::special
