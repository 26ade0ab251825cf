#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace speclab {

using cplx = std::complex<double>;

enum class SystemFamily { torus, sphere, powerlaw };

/// Serializable description of a constructed eigen-system.
struct SystemDescriptor {
    SystemFamily family = SystemFamily::torus;
    double beta = 2.0;
    double gamma = 1.0;          // powerlaw: sum_{k<=m} d_k ~ m^gamma
    int sphere_dim = 2;          // sphere S^d embedded in R^{d+1}
    double rule_exponent = 0.0;  // sphere: mu = (1+degree)^{-rule_exponent}; 0 means d*beta
    int m_max = 1000;
    bool exact_series = true;    // torus: closed-form Mercer series when beta is an even integer
};

/// Eigenvalue rule for the sphere, indexed by harmonic degree 0, 1, 2, ...
using DegreeRule = std::function<double(int)>;

/// Truncated distinct-eigenvalue spectrum {mu_m, d_m} of the integral operator, with
/// eigenfunction (torus) or zonal block-kernel (sphere) evaluation. Blocks are indexed
/// from 1 as in the Mercer expansion; for the sphere block m holds degree m-1.
///
/// Immutable after construction.
class EigenSystem {
public:
    const SystemDescriptor& descriptor() const { return desc_; }
    SystemFamily family() const { return desc_.family; }
    int m_max() const { return static_cast<int>(mu_.size()); }

    std::span<const double> mu() const { return mu_; }
    std::span<const std::int64_t> mult() const { return mult_; }
    double mu_at(int m) const;         // any m >= 1, including beyond the truncation
    double mult_at(int m) const;

    double kappa_sq() const { return kappa_sq_; }
    double beta() const { return desc_.beta; }
    double c_eig() const { return c_eig_; }
    double C_eig() const { return C_eig_; }
    double regularity_M() const { return regularity_M_; }
    /// Exponent gamma with sum_{k<=m} d_k ~ m^gamma.
    double cumulative_growth() const;

    /// sum_{m > M_max} d_m mu_m^q, the part of the spectrum not represented.
    double tail_power_sum(double q) const;
    double tail_mass() const { return tail_power_sum(1.0); }

    /// Number of eigenvalues counted with multiplicity.
    std::int64_t counted_size() const { return cumulative_.back(); }
    /// lambda_j, j >= 1 counted with multiplicity.
    double counted_eigenvalue(std::int64_t j) const;
    /// Block m containing counted index j, and the slot within it (0-based).
    std::pair<int, std::int64_t> block_of(std::int64_t j) const;
    /// sum_{k<=m} d_k.
    std::int64_t cumulative(int m) const { return cumulative_[static_cast<std::size_t>(m)]; }

    /// Ambient coordinates per point: 1 (angle) on the torus, d+1 on the sphere.
    int point_dim() const;
    bool supports_point_eval() const { return desc_.family != SystemFamily::powerlaw; }
    bool supports_eigenfunctions() const { return desc_.family == SystemFamily::torus; }
    /// True when kernel_eval sums the full Mercer series in closed form.
    bool closed_form_series() const { return closed_form_; }

    /// (e_{m,1}(x), ..., e_{m,d_m}(x)); torus only.
    std::vector<cplx> eval_block(int m, std::span<const double> x) const;
    /// k_m(x, y) = sum_l conj(e_{m,l}(x)) e_{m,l}(y).
    cplx block_kernel(int m, std::span<const double> x, std::span<const double> y) const;

    friend EigenSystem make_torus_system(double, int, bool);
    friend EigenSystem make_sphere_system(int, const DegreeRule&, int, double);
    friend EigenSystem make_powerlaw_system(double, double, int);

private:
    EigenSystem() = default;
    void finalize();

    SystemDescriptor desc_;
    DegreeRule rule_;
    std::vector<double> mu_;
    std::vector<std::int64_t> mult_;
    std::vector<std::int64_t> cumulative_;  // cumulative_[m] = sum_{k<=m} d_k, cumulative_[0] = 0
    double kappa_sq_ = 0.0;
    double c_eig_ = 0.0;
    double C_eig_ = 0.0;
    double regularity_M_ = 1.0;
    bool closed_form_ = false;
};

/// One-dimensional torus with the uniform measure and Fourier eigenfunctions. Block 1 is
/// frequency 0; block m >= 2 holds frequencies +-(m-1) with mu_m = (2(m-1))^{-beta}, so the
/// counted eigenvalues are lambda_1 = 1 and lambda_j = j^{-beta} at even j.
EigenSystem make_torus_system(double beta, int m_max, bool exact_series = true);

/// Sphere S^d with the uniform measure; `rule` maps harmonic degree to eigenvalue and must be
/// positive and strictly decreasing. `rule_exponent` is recorded in the descriptor when the
/// rule is (1+degree)^{-rule_exponent}, 0 otherwise.
EigenSystem make_sphere_system(int d, const DegreeRule& rule, int m_max, double rule_exponent = 0.0);
/// Default rule mu = (1+degree)^{-d*beta}, which gives lambda_j ~ j^{-beta}.
EigenSystem make_sphere_system(int d, double beta, int m_max);

/// Abstract diagonal system with sum_{k<=m} d_k = round(m^gamma) and mu_m = (sum_{k<=m} d_k)^{-beta}.
/// No point evaluation.
EigenSystem make_powerlaw_system(double beta, double gamma, int m_max);

EigenSystem make_system(const SystemDescriptor& desc);

/// Mercer sum sum_m mu_m^power k_m(x, y). Truncated at M_max unless the system carries a
/// closed-form series for this power.
cplx kernel_eval(const EigenSystem& sys, int power, std::span<const double> x,
                 std::span<const double> y);

/// Dimension of degree-`degree` spherical harmonics on S^d.
double sphere_harmonic_dim(int d, int degree);
/// Reproducing kernel of the degree-`degree` harmonics as a function of t = <x, y>.
double zonal_kernel(int d, int degree, double t);

/// max over probe points and N <= M_max of sum_{m<=N} k_m(x,x) / sum_{m<=N} d_m. The
/// regular-RKHS condition holds on the probes when this is <= regularity_M.
double regularity_ratio(const EigenSystem& sys, const std::vector<std::vector<double>>& probes);

} // namespace speclab
