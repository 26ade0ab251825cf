#include "speclab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "speclab/special.hpp"

namespace speclab {

namespace {

double even_integer_or_nan(double beta) {
    const double r = std::round(beta);
    if (std::abs(beta - r) < 1e-12 && static_cast<long>(r) % 2 == 0 && r >= 2 && r <= 8) {
        return r;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// sum_{m > m0} term(m) for a positive, eventually power-law decaying term. Sums directly for
// a stretch, then closes with the integral of the fitted local power law.
double power_tail(const std::function<double(double)>& term, int m0) {
    constexpr int kDirect = 200000;
    double sum = 0.0;
    const double start = static_cast<double>(m0) + 1.0;
    const double stop = start + kDirect;
    for (double m = start; m < stop; m += 1.0) {
        const double t = term(m);
        sum += t;
        if (t < 1e-18 * sum) {
            return sum;
        }
    }
    const double f1 = term(stop);
    const double f2 = term(2.0 * stop);
    if (f1 <= 0.0) {
        return sum;
    }
    const double p = -std::log(f2 / f1) / std::log(2.0);
    if (!(p > 1.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return sum + f1 * stop / (p - 1.0) + 0.5 * f1;
}

} // namespace

double sphere_harmonic_dim(int d, int degree) {
    if (degree < 0) {
        return 0.0;
    }
    return special::binomial(degree + d, degree) - special::binomial(degree - 2 + d, degree - 2);
}

double zonal_kernel(int d, int degree, double t) {
    const double alpha = 0.5 * (d - 1);
    return (degree + alpha) / alpha * special::gegenbauer(degree, alpha, t);
}

double EigenSystem::cumulative_growth() const {
    switch (desc_.family) {
    case SystemFamily::torus:
        return 1.0;
    case SystemFamily::sphere:
        return static_cast<double>(desc_.sphere_dim);
    case SystemFamily::powerlaw:
        return desc_.gamma;
    }
    return 1.0;
}

double EigenSystem::mu_at(int m) const {
    if (m < 1) {
        throw std::out_of_range("mu_at: block index starts at 1");
    }
    if (m <= m_max()) {
        return mu_[static_cast<std::size_t>(m - 1)];
    }
    switch (desc_.family) {
    case SystemFamily::torus:
        return std::pow(2.0 * (m - 1), -desc_.beta);
    case SystemFamily::sphere:
        return rule_(m - 1);
    case SystemFamily::powerlaw:
        return std::pow(std::round(std::pow(static_cast<double>(m), desc_.gamma)), -desc_.beta);
    }
    return 0.0;
}

double EigenSystem::mult_at(int m) const {
    if (m <= m_max()) {
        return static_cast<double>(mult_[static_cast<std::size_t>(m - 1)]);
    }
    switch (desc_.family) {
    case SystemFamily::torus:
        return 2.0;
    case SystemFamily::sphere:
        return sphere_harmonic_dim(desc_.sphere_dim, m - 1);
    case SystemFamily::powerlaw: {
        const double g = desc_.gamma;
        return std::round(std::pow(static_cast<double>(m), g)) -
               std::round(std::pow(static_cast<double>(m - 1), g));
    }
    }
    return 0.0;
}

double EigenSystem::tail_power_sum(double q) const {
    const int mm = m_max();
    if (desc_.family == SystemFamily::torus) {
        // sum_{k >= M} 2 (2k)^{-beta q}
        const double s = desc_.beta * q;
        return std::pow(2.0, 1.0 - s) * special::hurwitz_zeta(s, static_cast<double>(mm));
    }
    if (desc_.family == SystemFamily::sphere) {
        const int d = desc_.sphere_dim;
        const auto rule = rule_;
        return power_tail(
            [d, rule, q](double m) {
                const int deg = static_cast<int>(m) - 1;
                return sphere_harmonic_dim(d, deg) * std::pow(rule(deg), q);
            },
            mm);
    }
    const double g = desc_.gamma;
    const double b = desc_.beta;
    return power_tail(
        [g, b, q](double m) {
            const double dm = std::round(std::pow(m, g));
            const double dm1 = std::round(std::pow(m - 1.0, g));
            return (dm - dm1) * std::pow(dm, -b * q);
        },
        mm);
}

double EigenSystem::counted_eigenvalue(std::int64_t j) const {
    return mu_[static_cast<std::size_t>(block_of(j).first - 1)];
}

std::pair<int, std::int64_t> EigenSystem::block_of(std::int64_t j) const {
    if (j < 1 || j > counted_size()) {
        throw std::out_of_range("counted index out of represented range");
    }
    // first m with cumulative_[m] >= j
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), j);
    const int m = static_cast<int>(it - cumulative_.begin());
    return {m, j - cumulative_[static_cast<std::size_t>(m - 1)] - 1};
}

int EigenSystem::point_dim() const {
    switch (desc_.family) {
    case SystemFamily::torus:
        return 1;
    case SystemFamily::sphere:
        return desc_.sphere_dim + 1;
    case SystemFamily::powerlaw:
        return 0;
    }
    return 0;
}

std::vector<cplx> EigenSystem::eval_block(int m, std::span<const double> x) const {
    if (desc_.family != SystemFamily::torus) {
        throw std::invalid_argument("eval_block: only the torus exposes individual eigenfunctions");
    }
    if (m < 1 || m > m_max()) {
        throw std::out_of_range("eval_block: block index out of range");
    }
    if (m == 1) {
        return {cplx(1.0, 0.0)};
    }
    const double k = m - 1;
    return {std::polar(1.0, k * x[0]), std::polar(1.0, -k * x[0])};
}

cplx EigenSystem::block_kernel(int m, std::span<const double> x, std::span<const double> y) const {
    switch (desc_.family) {
    case SystemFamily::torus: {
        const auto ex = eval_block(m, x);
        const auto ey = eval_block(m, y);
        cplx s = 0.0;
        for (std::size_t l = 0; l < ex.size(); ++l) {
            s += std::conj(ex[l]) * ey[l];
        }
        return s;
    }
    case SystemFamily::sphere: {
        double t = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            t += x[i] * y[i];
        }
        t = std::clamp(t, -1.0, 1.0);
        return zonal_kernel(desc_.sphere_dim, m - 1, t);
    }
    case SystemFamily::powerlaw:
        break;
    }
    throw std::invalid_argument("block_kernel: abstract power-law system has no point evaluation");
}

void EigenSystem::finalize() {
    const std::size_t mm = mu_.size();
    for (std::size_t i = 0; i < mm; ++i) {
        if (!(mu_[i] > 0.0) || !std::isfinite(mu_[i])) {
            throw std::invalid_argument("eigenvalues must be positive and finite");
        }
        if (i > 0 && !(mu_[i] < mu_[i - 1])) {
            throw std::invalid_argument("eigenvalues must be strictly decreasing (block " +
                                        std::to_string(i + 1) + ")");
        }
        if (mult_[i] < 1) {
            throw std::invalid_argument("multiplicities must be >= 1");
        }
    }
    cumulative_.assign(mm + 1, 0);
    for (std::size_t i = 0; i < mm; ++i) {
        cumulative_[i + 1] = cumulative_[i] + mult_[i];
    }
    // Bracket constants: lambda_j j^beta over block m spans [mu (D_{m-1}+1)^beta, mu D_m^beta].
    c_eig_ = std::numeric_limits<double>::infinity();
    C_eig_ = 0.0;
    for (std::size_t i = 0; i < mm; ++i) {
        const double lo = mu_[i] * std::pow(static_cast<double>(cumulative_[i] + 1), desc_.beta);
        const double hi = mu_[i] * std::pow(static_cast<double>(cumulative_[i + 1]), desc_.beta);
        c_eig_ = std::min(c_eig_, lo);
        C_eig_ = std::max(C_eig_, hi);
    }
    if (!closed_form_) {
        kappa_sq_ = 0.0;
        for (std::size_t i = 0; i < mm; ++i) {
            kappa_sq_ += static_cast<double>(mult_[i]) * mu_[i];
        }
    }
}

EigenSystem make_torus_system(double beta, int m_max, bool exact_series) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("make_torus_system: decay exponent must exceed 1");
    }
    if (m_max < 1) {
        throw std::invalid_argument("make_torus_system: M_max must be >= 1");
    }
    EigenSystem sys;
    sys.desc_ = SystemDescriptor{SystemFamily::torus, beta, 1.0, 0, 0.0, m_max, exact_series};
    sys.mu_.resize(static_cast<std::size_t>(m_max));
    sys.mult_.resize(static_cast<std::size_t>(m_max));
    sys.mu_[0] = 1.0;
    sys.mult_[0] = 1;
    for (int m = 2; m <= m_max; ++m) {
        sys.mu_[static_cast<std::size_t>(m - 1)] = std::pow(2.0 * (m - 1), -beta);
        sys.mult_[static_cast<std::size_t>(m - 1)] = 2;
    }
    sys.regularity_M_ = 1.0;
    sys.closed_form_ = exact_series && !std::isnan(even_integer_or_nan(beta));
    if (sys.closed_form_) {
        sys.kappa_sq_ = 1.0 + std::pow(2.0, 1.0 - beta) * special::hurwitz_zeta(beta, 1.0);
    }
    sys.finalize();
    return sys;
}

EigenSystem make_sphere_system(int d, const DegreeRule& rule, int m_max, double rule_exponent) {
    if (d < 2) {
        throw std::invalid_argument("make_sphere_system: requires d >= 2");
    }
    if (m_max < 1) {
        throw std::invalid_argument("make_sphere_system: M_max must be >= 1");
    }
    EigenSystem sys;
    sys.desc_ = SystemDescriptor{SystemFamily::sphere, 0.0, static_cast<double>(d), d,
                                 rule_exponent, m_max, false};
    sys.rule_ = rule;
    sys.mu_.resize(static_cast<std::size_t>(m_max));
    sys.mult_.resize(static_cast<std::size_t>(m_max));
    for (int deg = 0; deg < m_max; ++deg) {
        sys.mu_[static_cast<std::size_t>(deg)] = rule(deg);
        sys.mult_[static_cast<std::size_t>(deg)] =
            static_cast<std::int64_t>(std::llround(sphere_harmonic_dim(d, deg)));
    }
    // beta implied by the rule: (1+deg)^{-a} with counts ~ deg^d gives beta = a/d.
    sys.desc_.beta = rule_exponent > 0.0 ? rule_exponent / d : 0.0;
    if (sys.desc_.beta == 0.0 && m_max >= 4) {
        const double m1 = m_max / 2;
        const double m2 = m_max - 1;
        sys.desc_.beta = -std::log(rule(static_cast<int>(m2)) / rule(static_cast<int>(m1))) /
                         std::log((m2 + 1.0) / (m1 + 1.0)) / d;
    }
    sys.regularity_M_ = 1.0;
    sys.finalize();
    return sys;
}

EigenSystem make_sphere_system(int d, double beta, int m_max) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("make_sphere_system: decay exponent must exceed 1");
    }
    const double a = d * beta;
    return make_sphere_system(
        d, [a](int deg) { return std::pow(1.0 + deg, -a); }, m_max, a);
}

EigenSystem make_powerlaw_system(double beta, double gamma, int m_max) {
    if (!(beta > 1.0)) {
        throw std::invalid_argument("make_powerlaw_system: decay exponent must exceed 1");
    }
    if (!(gamma >= 1.0)) {
        throw std::invalid_argument("make_powerlaw_system: gamma must be >= 1");
    }
    if (m_max < 1) {
        throw std::invalid_argument("make_powerlaw_system: M_max must be >= 1");
    }
    EigenSystem sys;
    sys.desc_ = SystemDescriptor{SystemFamily::powerlaw, beta, gamma, 0, 0.0, m_max, false};
    sys.mu_.resize(static_cast<std::size_t>(m_max));
    sys.mult_.resize(static_cast<std::size_t>(m_max));
    double prev = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        const double dm = std::round(std::pow(static_cast<double>(m), gamma));
        sys.mult_[static_cast<std::size_t>(m - 1)] = static_cast<std::int64_t>(dm - prev);
        sys.mu_[static_cast<std::size_t>(m - 1)] = std::pow(dm, -beta);
        prev = dm;
    }
    sys.regularity_M_ = std::numeric_limits<double>::quiet_NaN();
    sys.finalize();
    return sys;
}

EigenSystem make_system(const SystemDescriptor& desc) {
    switch (desc.family) {
    case SystemFamily::torus:
        return make_torus_system(desc.beta, desc.m_max, desc.exact_series);
    case SystemFamily::sphere:
        if (desc.rule_exponent > 0.0) {
            const double a = desc.rule_exponent;
            return make_sphere_system(
                desc.sphere_dim, [a](int deg) { return std::pow(1.0 + deg, -a); }, desc.m_max, a);
        }
        return make_sphere_system(desc.sphere_dim, desc.beta, desc.m_max);
    case SystemFamily::powerlaw:
        return make_powerlaw_system(desc.beta, desc.gamma, desc.m_max);
    }
    throw std::invalid_argument("unknown system family");
}

cplx kernel_eval(const EigenSystem& sys, int power, std::span<const double> x,
                 std::span<const double> y) {
    if (power < 1) {
        throw std::invalid_argument("kernel_eval: power must be >= 1");
    }
    switch (sys.family()) {
    case SystemFamily::torus: {
        const double delta = y[0] - x[0];
        if (sys.closed_form_series()) {
            const double q = sys.beta() * power;
            if (const auto s = special::cosine_zeta_series(q, delta)) {
                return 1.0 + std::pow(2.0, 1.0 - q) * *s;
            }
        }
        // sum_m mu_m^p 2 cos(k delta), summed from the small end.
        const auto mu = sys.mu();
        double acc = 0.0;
        for (int m = sys.m_max(); m >= 2; --m) {
            acc += 2.0 * std::pow(mu[static_cast<std::size_t>(m - 1)], power) *
                   std::cos((m - 1) * delta);
        }
        return 1.0 + acc;
    }
    case SystemFamily::sphere: {
        double t = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            t += x[i] * y[i];
        }
        t = std::clamp(t, -1.0, 1.0);
        const int d = sys.descriptor().sphere_dim;
        const double alpha = 0.5 * (d - 1);
        const auto mu = sys.mu();
        double c_prev = 1.0;
        double c = 2.0 * alpha * t;
        double acc = std::pow(mu[0], power);
        for (int deg = 1; deg < sys.m_max(); ++deg) {
            if (deg >= 2) {
                const double next =
                    (2.0 * t * (deg + alpha - 1.0) * c - (deg + 2.0 * alpha - 2.0) * c_prev) / deg;
                c_prev = c;
                c = next;
            }
            acc += std::pow(mu[static_cast<std::size_t>(deg)], power) * (deg + alpha) / alpha * c;
        }
        return acc;
    }
    case SystemFamily::powerlaw:
        break;
    }
    throw std::invalid_argument("kernel_eval: abstract power-law system has no point evaluation");
}

double regularity_ratio(const EigenSystem& sys, const std::vector<std::vector<double>>& probes) {
    double worst = 0.0;
    for (const auto& x : probes) {
        double num = 0.0;
        double den = 0.0;
        for (int m = 1; m <= sys.m_max(); ++m) {
            num += sys.block_kernel(m, x, x).real();
            den += static_cast<double>(sys.mult()[static_cast<std::size_t>(m - 1)]);
            worst = std::max(worst, num / den);
        }
    }
    return worst;
}

} // namespace speclab
