#pragma once

#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace speclab {

using cplx = std::complex<double>;

enum class FilterFamily { krr, iterated_ridge, gradient_flow, gradient_descent };

struct FilterDescriptor {
    FilterFamily family = FilterFamily::krr;
    double order = 1.0;  // iterated ridge p
    double eta = 0.0;    // gradient descent step size
};

/// Spectral filter phi_lambda with remainder psi_lambda(z) = 1 - z phi_lambda(z), extended
/// analytically to the complex plane, together with its regularity and qualification
/// constants. Immutable.
class FilterSpec {
public:
    FilterFamily family() const { return desc_.family; }
    const FilterDescriptor& descriptor() const { return desc_; }
    std::string name() const;

    cplx phi(double lambda, cplx z) const;
    cplx psi(double lambda, cplx z) const;
    double phi(double lambda, double z) const;
    double psi(double lambda, double z) const;

    /// tau_max; infinity for gradient flow and descent.
    double qualification() const;
    /// sup_{z >= 0} (z + lambda) phi_lambda(z) over all lambda in (0,1).
    double E_const() const { return e_const_; }
    /// Bound F_tau in sup z^tau psi_lambda(z) <= F_tau lambda^tau, tau <= tau_max.
    double F_tau(double tau) const;
    /// F_lower with psi_lambda >= F_lower lambda^tau_max on [0, kappa^2]; NaN when tau_max = inf.
    double F_lower(double kappa_sq) const;

    /// Gradient descent iteration count t = 1/(eta lambda).
    double steps(double lambda) const { return 1.0 / (desc_.eta * lambda); }

    friend FilterSpec make_filter(const FilterDescriptor&, double);

private:
    FilterDescriptor desc_;
    double e_const_ = 1.0;
};

/// Builds a filter. `kappa_sq` bounds the spectrum the filter will see and is only used to
/// validate the gradient descent step size (eta < 1/(2 kappa^2)).
FilterSpec make_filter(const FilterDescriptor& desc, double kappa_sq = 1.0);

inline FilterSpec make_krr() { return make_filter({FilterFamily::krr, 1.0, 0.0}); }
inline FilterSpec make_iterated_ridge(double p) {
    return make_filter({FilterFamily::iterated_ridge, p, 0.0});
}
inline FilterSpec make_gradient_flow() {
    return make_filter({FilterFamily::gradient_flow, 1.0, 0.0});
}
inline FilterSpec make_gradient_descent(double eta, double kappa_sq) {
    return make_filter({FilterFamily::gradient_descent, 1.0, eta}, kappa_sq);
}

/// Real-axis audit of the filter axioms on a (lambda, z) grid.
struct AuditReport {
    std::string filter;
    double measured_E = 0.0;              // sup (z+lambda) phi
    std::vector<double> taus;
    std::vector<double> measured_F;       // sup z^tau psi / lambda^tau per tau
    std::vector<double> declared_F;       // F_tau per tau
    double measured_F_lower = std::numeric_limits<double>::quiet_NaN();  // inf psi / lambda^tau_max
    long psi_range_violations = 0;        // psi outside [0, 1]
    long z_monotone_violations = 0;       // psi increasing in z
    double z_monotone_worst = 0.0;
    long lambda_monotone_violations = 0;  // psi increasing as lambda decreases
    double lambda_monotone_worst = 0.0;
    long identity_violations = 0;         // psi + z phi != 1
    double identity_worst = 0.0;
    long half_psi_violations = 0;         // psi < 1/2 where z <= lambda/(2E)
    long interpolation_violations = 0;    // F_r > F_0^{1-r/tau} F_tau^{r/tau} among measured values
    long declared_E_violations = 0;       // measured_E above E_const
    long declared_F_violations = 0;       // measured F above declared F_tau
    long lower_violations = 0;            // psi below F_lower lambda^tau_max

    bool ok() const;
};

AuditReport audit_real_axis(const FilterSpec& f, const std::vector<double>& lambda_grid,
                            const std::vector<double>& z_grid, const std::vector<double>& tau_grid,
                            double kappa_sq);

/// Cap on probed tau for infinite-qualification filters.
inline constexpr double kTauProbeMax = 8.0;

} // namespace speclab
