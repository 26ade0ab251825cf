#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "speclab/filters.hpp"
#include "speclab/source.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

/// R^2_phi(lambda; f) = sum_m psi_lambda(mu_m)^2 fbar_m^2 over the source's represented blocks.
double bias_main_term(const EigenSystem& sys, const SourceFunction& f, const FilterSpec& filter,
                      double lambda);

/// N_{p,phi}(lambda) = sum_m d_m [mu_m phi_lambda(mu_m)]^p over the represented spectrum.
double phi_effective_dim(const EigenSystem& sys, const FilterSpec& filter, double p, double lambda);

/// Upper bound on the unrepresented part of N_{p,phi}: E^p lambda^{-p} sum_{m > M} d_m mu_m^p.
double phi_effective_dim_tail(const EigenSystem& sys, const FilterSpec& filter, double p,
                              double lambda);

struct CountResult {
    std::int64_t count = 0;
    /// eps lies below the smallest represented eigenvalue, so the count is truncation-limited.
    bool truncated = false;
};

/// Phi(eps) = #{j : lambda_j >= eps} over the represented counted sequence.
CountResult counting_function(const EigenSystem& sys, double eps);

/// integral_0^lambda Phi(x) dx = sum_m d_m min(lambda, mu_m); `with_tail` adds the unrepresented
/// mass sum_{m > M} d_m mu_m (all such mu_m are taken to lie below lambda).
double phi_integral(const EigenSystem& sys, double lambda, bool with_tail = false);

/// R^2 + (sigma^2 / n) N_2.
inline double predicted_risk(double bias_sq, double n2, double sigma_sq, double n) {
    return bias_sq + sigma_sq / n * n2;
}

struct MinimaxRate {
    double exponent = 0.0;   // risk ~ n^{exponent}
    double theta = 0.0;      // lambda ~ n^{-theta} attaining it
    bool saturated = false;  // s > 2 tau_max
};

MinimaxRate minimax_rate(double beta, double s, double tau_max);

/// Both sides of 2^{-p} Phi(2 F_1 lambda) <= N_p <= p E^p lambda^{-1} int_0^lambda Phi.
struct Sandwich {
    double lower = 0.0;
    double value = 0.0;
    double upper = 0.0;
    bool holds() const { return lower <= value && value <= upper; }
};

Sandwich effective_dim_sandwich(const EigenSystem& sys, const FilterSpec& filter, double p,
                                double lambda, double E, double F1);

/// 1/4 sum_{m : mu_m < lambda/(2E)} fbar_m^2.
double residual_lower_bound(const EigenSystem& sys, const SourceFunction& f, double E, double lambda);

/// F_theta^2 kappa^{2 (t - 2 tau)^+} ||f||^2_{[H]^t} lambda^{2 theta} with theta = min(t/2, tau).
double bias_upper_bound(const EigenSystem& sys, const SourceFunction& f, const FilterSpec& filter,
                        double t, double lambda);

/// Deterministic bias and variance curves on a lambda grid for a set of sample sizes.
struct TheoryCurve {
    std::vector<double> lambdas;
    std::vector<double> bias_sq;
    std::vector<double> n2;
    std::vector<double> n_grid;
    double sigma_sq = 1.0;
    double n2_tail_worst = 0.0;   // worst relative tail bound of N_2 over the grid
    std::string system;
    std::string filter;
    std::string source;

    double var_term(std::size_t i_lambda, std::size_t i_n) const {
        return sigma_sq / n_grid[i_n] * n2[i_lambda];
    }
    double predicted(std::size_t i_lambda, std::size_t i_n) const {
        return bias_sq[i_lambda] + var_term(i_lambda, i_n);
    }
    /// Index of the grid minimizer of the predicted risk at n_grid[i_n].
    std::size_t argmin(std::size_t i_n) const;
};

TheoryCurve compute_theory_curve(const EigenSystem& sys, const SourceFunction& f,
                                 const FilterSpec& filter, double sigma_sq,
                                 const std::vector<double>& lambdas,
                                 const std::vector<double>& n_grid);

/// Rows lambda,bias_sq,n,var_term,predicted_risk preceded by a `# config_hash=` line.
std::string theory_curve_csv(const TheoryCurve& c, const std::string& config_hash);

/// True when no grid point is a strict local maximum between two lower values.
bool quasi_convex(const std::vector<double>& v);

} // namespace speclab
