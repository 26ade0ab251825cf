#include "speclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace speclab {

namespace {

double sorted_quantile(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

} // namespace

double median(std::vector<double> v) { return quartiles(std::move(v)).median; }

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) {
        throw std::invalid_argument("quartiles: empty sample");
    }
    std::sort(v.begin(), v.end());
    return {sorted_quantile(v, 0.25), sorted_quantile(v, 0.5), sorted_quantile(v, 0.75)};
}

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y, double confidence) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_linear: need at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("fit_linear: abscissae are all equal");
    }
    SlopeFit fit;
    fit.points = static_cast<int>(x.size());
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
        const boost::math::students_t dist(n - 2.0);
        const double t = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
        fit.ci_lo = fit.slope - t * fit.stderr_slope;
        fit.ci_hi = fit.slope + t * fit.stderr_slope;
    } else {
        fit.ci_lo = -std::numeric_limits<double>::infinity();
        fit.ci_hi = std::numeric_limits<double>::infinity();
    }
    return fit;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double confidence) {
    std::vector<double> lx(x.size());
    std::vector<double> ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("fit_loglog: values must be positive");
        }
        lx[i] = std::log(x[i]);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        ly[i] = std::log(y[i]);
    }
    return fit_linear(lx, ly, confidence);
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) {
        throw std::invalid_argument("log_grid: need 0 < lo <= hi and per_decade >= 1");
    }
    const double decades = std::log10(hi / lo);
    const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
    std::vector<double> g(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        g[static_cast<std::size_t>(i)] = lo * std::pow(10.0, decades * i / steps);
    }
    g.back() = hi;
    return g;
}

} // namespace speclab
