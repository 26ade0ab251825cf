#pragma once

#include <vector>

namespace speclab {

double median(std::vector<double> v);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double iqr() const { return q3 - q1; }
};

/// Quartiles by linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> v);

/// Ordinary least squares y = intercept + slope x with a two-sided Student-t interval.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int points = 0;

    bool ci_contains(double v) const { return ci_lo <= v && v <= ci_hi; }
};

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y,
                    double confidence = 0.95);
/// Fit in log-log coordinates; all inputs must be positive.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    double confidence = 0.95);

/// Log-uniform grid from lo to hi inclusive with `per_decade` points per decade.
std::vector<double> log_grid(double lo, double hi, int per_decade = 32);

} // namespace speclab
