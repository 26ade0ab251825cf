#include "speclab/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace speclab {

namespace {

// |z| below this fraction of lambda switches phi to its Taylor branch at the removable
// singularity z = 0.
constexpr double kSeriesThreshold = 1e-4;
constexpr int kSeriesTerms = 5;

// phi = (1/z) sum_{k>=1} a_k w^k with w = scale * z, evaluated as scale * sum a_k w^{k-1}.
template <typename T, typename Coef>
T series_phi(T w, double scale, Coef coef) {
    T acc = 0.0;
    T wp = 1.0;
    for (int k = 1; k <= kSeriesTerms; ++k) {
        acc += coef(k) * wp;
        wp *= w;
    }
    return scale * acc;
}

// Coefficients of 1 - (1+u)^{-p}: (-1)^{k+1} (p)_k / k!.
double ridge_coef(double p, int k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) {
        c *= (p + i) / (i + 1);
    }
    return (k % 2 == 1) ? c : -c;
}

// Coefficients of 1 - e^{-u}: (-1)^{k+1} / k!.
double flow_coef(int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c /= i;
    }
    return (k % 2 == 1) ? c : -c;
}

// Coefficients of 1 - (1-w)^t: (-1)^{k+1} C(t, k).
double descent_coef(double t, int k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) {
        c *= (t - i) / (i + 1);
    }
    return (k % 2 == 1) ? c : -c;
}

double flow_regularity_constant() {
    // sup_{u>0} (1+u)(1-e^{-u})/u, unimodal; golden-section search.
    auto g = [](double u) { return (1.0 + u) * (-std::expm1(-u)) / u; };
    double a = 0.1;
    double b = 10.0;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    for (int i = 0; i < 200; ++i) {
        if (g(c) > g(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    return g(0.5 * (a + b));
}

} // namespace

std::string FilterSpec::name() const {
    switch (desc_.family) {
    case FilterFamily::krr:
        return "krr";
    case FilterFamily::iterated_ridge:
        return "iterated_ridge(" + std::to_string(desc_.order) + ")";
    case FilterFamily::gradient_flow:
        return "gradient_flow";
    case FilterFamily::gradient_descent:
        return "gradient_descent(" + std::to_string(desc_.eta) + ")";
    }
    return "unknown";
}

cplx FilterSpec::phi(double lambda, cplx z) const {
    const bool small = std::abs(z) < kSeriesThreshold * lambda;
    switch (desc_.family) {
    case FilterFamily::krr:
        return 1.0 / (z + lambda);
    case FilterFamily::iterated_ridge: {
        const double p = desc_.order;
        if (small) {
            return series_phi(z / lambda, 1.0 / lambda, [p](int k) { return ridge_coef(p, k); });
        }
        return (1.0 - psi(lambda, z)) / z;
    }
    case FilterFamily::gradient_flow:
        if (small) {
            return series_phi(z / lambda, 1.0 / lambda, flow_coef);
        }
        return (1.0 - std::exp(-z / lambda)) / z;
    case FilterFamily::gradient_descent: {
        const double eta = desc_.eta;
        const double t = steps(lambda);
        if (small) {
            return series_phi(eta * z, eta, [t](int k) { return descent_coef(t, k); });
        }
        return (1.0 - psi(lambda, z)) / z;
    }
    }
    return 0.0;
}

cplx FilterSpec::psi(double lambda, cplx z) const {
    switch (desc_.family) {
    case FilterFamily::krr:
        return lambda / (z + lambda);
    case FilterFamily::iterated_ridge:
        return std::exp(desc_.order * (std::log(lambda) - std::log(z + lambda)));
    case FilterFamily::gradient_flow:
        return std::exp(-z / lambda);
    case FilterFamily::gradient_descent:
        return std::exp(steps(lambda) * std::log(1.0 - desc_.eta * z));
    }
    return 0.0;
}

double FilterSpec::phi(double lambda, double z) const {
    const bool small = std::abs(z) < kSeriesThreshold * lambda;
    switch (desc_.family) {
    case FilterFamily::krr:
        return 1.0 / (z + lambda);
    case FilterFamily::iterated_ridge: {
        const double p = desc_.order;
        if (small) {
            return series_phi(z / lambda, 1.0 / lambda, [p](int k) { return ridge_coef(p, k); });
        }
        return -std::expm1(-p * std::log1p(z / lambda)) / z;
    }
    case FilterFamily::gradient_flow:
        if (small) {
            return series_phi(z / lambda, 1.0 / lambda, flow_coef);
        }
        return -std::expm1(-z / lambda) / z;
    case FilterFamily::gradient_descent: {
        const double eta = desc_.eta;
        const double t = steps(lambda);
        if (small) {
            return series_phi(eta * z, eta, [t](int k) { return descent_coef(t, k); });
        }
        return -std::expm1(t * std::log1p(-eta * z)) / z;
    }
    }
    return 0.0;
}

double FilterSpec::psi(double lambda, double z) const {
    switch (desc_.family) {
    case FilterFamily::krr:
        return lambda / (z + lambda);
    case FilterFamily::iterated_ridge:
        return std::exp(-desc_.order * std::log1p(z / lambda));
    case FilterFamily::gradient_flow:
        return std::exp(-z / lambda);
    case FilterFamily::gradient_descent:
        return std::exp(steps(lambda) * std::log1p(-desc_.eta * z));
    }
    return 0.0;
}

double FilterSpec::qualification() const {
    switch (desc_.family) {
    case FilterFamily::krr:
        return 1.0;
    case FilterFamily::iterated_ridge:
        return desc_.order;
    case FilterFamily::gradient_flow:
    case FilterFamily::gradient_descent:
        return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double FilterSpec::F_tau(double tau) const {
    if (tau < 0.0 || tau > qualification()) {
        return std::numeric_limits<double>::infinity();
    }
    auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    switch (desc_.family) {
    case FilterFamily::krr:
        return std::exp(xlogx(tau) + xlogx(1.0 - tau));
    case FilterFamily::iterated_ridge: {
        const double p = desc_.order;
        return std::exp(xlogx(tau) + xlogx(p - tau) - xlogx(p));
    }
    case FilterFamily::gradient_flow:
    case FilterFamily::gradient_descent:
        return tau > 0.0 ? std::pow(tau / std::exp(1.0), tau) : 1.0;
    }
    return 0.0;
}

double FilterSpec::F_lower(double kappa_sq) const {
    switch (desc_.family) {
    case FilterFamily::krr:
        return 1.0 / (kappa_sq + 1.0);
    case FilterFamily::iterated_ridge:
        return std::pow(1.0 / (kappa_sq + 1.0), desc_.order);
    default:
        return std::numeric_limits<double>::quiet_NaN();
    }
}

FilterSpec make_filter(const FilterDescriptor& desc, double kappa_sq) {
    FilterSpec f;
    f.desc_ = desc;
    switch (desc.family) {
    case FilterFamily::krr:
        f.e_const_ = 1.0;
        break;
    case FilterFamily::iterated_ridge:
        if (!(desc.order >= 1.0)) {
            throw std::invalid_argument("iterated ridge requires order p >= 1");
        }
        // (1 - v^p)/(1 - v) with v = lambda/(z+lambda) in (0, 1] peaks at p as v -> 1.
        f.e_const_ = desc.order;
        break;
    case FilterFamily::gradient_flow:
        f.e_const_ = flow_regularity_constant();
        break;
    case FilterFamily::gradient_descent:
        if (!(desc.eta > 0.0) || !(desc.eta < 1.0 / (2.0 * kappa_sq))) {
            throw std::invalid_argument("gradient descent requires 0 < eta < 1/(2 kappa^2)");
        }
        // phi <= min(1/lambda, 1/z) on the real axis, so (z+lambda) phi <= 2.
        f.e_const_ = 2.0;
        break;
    }
    return f;
}

bool AuditReport::ok() const {
    return psi_range_violations == 0 && z_monotone_violations == 0 &&
           lambda_monotone_violations == 0 && identity_violations == 0 &&
           half_psi_violations == 0 && interpolation_violations == 0 &&
           declared_E_violations == 0 && declared_F_violations == 0 && lower_violations == 0;
}

AuditReport audit_real_axis(const FilterSpec& f, const std::vector<double>& lambda_grid,
                            const std::vector<double>& z_grid, const std::vector<double>& tau_grid,
                            double kappa_sq) {
    AuditReport rep;
    rep.filter = f.name();
    if (lambda_grid.empty() || z_grid.empty()) {
        return rep;
    }
    auto lambdas = lambda_grid;
    auto zs = z_grid;
    std::sort(lambdas.begin(), lambdas.end());
    std::sort(zs.begin(), zs.end());

    const double tau_cap = std::min(f.qualification(), kTauProbeMax);
    for (double t : tau_grid) {
        if (t >= 0.0 && t <= tau_cap) {
            rep.taus.push_back(t);
        }
    }
    rep.measured_F.assign(rep.taus.size(), 0.0);
    for (double t : rep.taus) {
        rep.declared_F.push_back(f.F_tau(t));
    }
    const double tau_max = f.qualification();
    const bool finite_q = std::isfinite(tau_max);
    const double f_lower = f.F_lower(kappa_sq);
    if (finite_q) {
        rep.measured_F_lower = std::numeric_limits<double>::infinity();
    }
    constexpr double kMonoTol = 1e-14;

    const std::size_t nz = zs.size();
    std::vector<double> prev_psi;
    for (std::size_t a = 0; a < lambdas.size(); ++a) {
        const double lam = lambdas[a];
        std::vector<double> psi_row(nz);
        for (std::size_t i = 0; i < nz; ++i) {
            const double z = zs[i];
            const double ph = f.phi(lam, z);
            const double ps = f.psi(lam, z);
            psi_row[i] = ps;

            const double defect = std::abs(ps + z * ph - 1.0);
            rep.identity_worst = std::max(rep.identity_worst, defect);
            if (defect > 1e-12) {
                ++rep.identity_violations;
            }
            if (ps < -1e-15 || ps > 1.0 + 1e-15) {
                ++rep.psi_range_violations;
            }
            rep.measured_E = std::max(rep.measured_E, (z + lam) * ph);
            for (std::size_t k = 0; k < rep.taus.size(); ++k) {
                const double t = rep.taus[k];
                const double v = (t == 0.0 ? 1.0 : std::pow(z / lam, t)) * ps;
                rep.measured_F[k] = std::max(rep.measured_F[k], v);
            }
            if (finite_q) {
                const double r = ps / std::pow(lam, tau_max);
                rep.measured_F_lower = std::min(rep.measured_F_lower, r);
                if (ps < f_lower * std::pow(lam, tau_max) * (1.0 - 1e-12)) {
                    ++rep.lower_violations;
                }
            }
            if (z <= lam / (2.0 * f.E_const()) && ps < 0.5) {
                ++rep.half_psi_violations;
            }
            if (i > 0 && ps > psi_row[i - 1] + kMonoTol) {
                ++rep.z_monotone_violations;
                rep.z_monotone_worst = std::max(rep.z_monotone_worst, ps - psi_row[i - 1]);
            }
            // lambdas ascend: psi at the smaller lambda must not exceed psi at this one.
            if (a > 0 && prev_psi[i] > ps + kMonoTol) {
                ++rep.lambda_monotone_violations;
                rep.lambda_monotone_worst = std::max(rep.lambda_monotone_worst, prev_psi[i] - ps);
            }
        }
        prev_psi = std::move(psi_row);
    }

    if (rep.measured_E > f.E_const() * (1.0 + 1e-12)) {
        ++rep.declared_E_violations;
    }
    for (std::size_t k = 0; k < rep.taus.size(); ++k) {
        if (rep.measured_F[k] > rep.declared_F[k] * (1.0 + 1e-6)) {
            ++rep.declared_F_violations;
        }
    }
    // F_r <= F_0^{1-r/tau} F_tau^{r/tau} between measured constants; F_0 = sup psi.
    double f0 = 0.0;
    for (double p : prev_psi) {
        f0 = std::max(f0, p);
    }
    f0 = std::max(f0, 1.0);
    for (std::size_t i = 0; i < rep.taus.size(); ++i) {
        for (std::size_t j = 0; j < rep.taus.size(); ++j) {
            const double r = rep.taus[i];
            const double t = rep.taus[j];
            if (!(r < t) || t == 0.0) {
                continue;
            }
            const double bound = std::pow(f0, 1.0 - r / t) * std::pow(rep.measured_F[j], r / t);
            if (rep.measured_F[i] > bound * (1.0 + 1e-12)) {
                ++rep.interpolation_violations;
            }
        }
    }
    return rep;
}

} // namespace speclab
