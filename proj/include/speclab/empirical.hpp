#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/filters.hpp"
#include "speclab/source.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

/// n i.i.d. points from the system's measure; column i of `points` (point_dim x n) is x_i.
struct SampleDesign {
    Eigen::MatrixXd points;
    std::uint64_t seed = 0;
    SystemFamily domain = SystemFamily::torus;

    Eigen::Index n() const { return points.cols(); }
    std::span<const double> point(Eigen::Index i) const {
        return {points.data() + i * points.rows(), static_cast<std::size_t>(points.rows())};
    }
};

/// Uniform angles in [-pi, pi) on the torus, normalized Gaussians on the sphere.
SampleDesign sample_design(const EigenSystem& sys, Eigen::Index n, std::uint64_t seed);

/// Gram quantities of one design. The kernels of every supported system are real, so K and G2
/// are stored as real symmetric matrices; the construction checks the imaginary residue.
struct GramPack {
    Eigen::MatrixXd K;     // k(x_i, x_j) / n
    Eigen::MatrixXd G2;    // sum_m mu_m^2 k_m(x_i, x_j)
    Eigen::VectorXcd b;    // (T f)(x_i)
    Eigen::VectorXcd y_star;
    double f_norm_sq = 0.0;
    double imag_residue = 0.0;

    Eigen::Index n() const { return K.rows(); }
};

GramPack build_gram(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x);

/// (f(x_i), (T f)(x_i)) over the design.
std::pair<Eigen::VectorXcd, Eigen::VectorXcd> source_vectors(const EigenSystem& sys,
                                                             const SourceFunction& f,
                                                             const SampleDesign& x);
/// Single-threaded reference for build_gram.
GramPack build_gram_serial(const EigenSystem& sys, const SourceFunction& f, const SampleDesign& x);

/// Real Gram matrix [k^{(power)}(x_i, x_j)] (unscaled).
Eigen::MatrixXd kernel_matrix(const EigenSystem& sys, int power, const SampleDesign& x);
Eigen::MatrixXd kernel_matrix_serial(const EigenSystem& sys, int power, const SampleDesign& x);

struct RiskBreakdown {
    double n = 0.0;
    double lambda = 0.0;
    double bias_sq = 0.0;
    double var = 0.0;
    double pred_bias_sq = 0.0;
    double pred_var = 0.0;
    std::uint64_t seed = 0;

    double total() const { return bias_sq + var; }
    double predicted() const { return pred_bias_sq + pred_var; }
    double ratio() const { return total() / predicted(); }
};

/// Eigendecomposition of K reused across filters and lambdas: O(n^3) once, O(n^2) per lambda.
class SpectralCache {
public:
    SpectralCache(const GramPack& gp, double kappa_sq);

    const GramPack& gram() const { return *gp_; }
    Eigen::Index n() const { return evals_.size(); }
    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    int clamped() const { return clamped_; }

    /// Swaps in another regression function on the same design; y = f(x_i), b = (T f)(x_i).
    void bind_source(const Eigen::VectorXcd& y, const Eigen::VectorXcd& b, double f_norm_sq);

    /// alpha = phi(K) y / n, the representer coefficients of the estimator.
    Eigen::VectorXcd coefficients(const FilterSpec& f, double lambda) const;
    double bias_sq(const FilterSpec& f, double lambda) const;
    double variance(const FilterSpec& f, double lambda, double sigma_sq) const;

private:
    Eigen::VectorXd filtered(const FilterSpec& f, double lambda) const;

    const GramPack* gp_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXd vectors_;
    Eigen::VectorXd g2_diag_;     // diag(U^T G2 U)
    Eigen::VectorXcd uty_;        // U^T y
    Eigen::VectorXcd b_;
    double f_norm_sq_ = 0.0;
    int clamped_ = 0;
};

/// Exact E[||f_hat - f*||^2 | X] split into bias and variance, without predictions.
RiskBreakdown exact_conditional_risk(const GramPack& gp, const FilterSpec& f, double lambda,
                                     double sigma_sq, double kappa_sq);
RiskBreakdown exact_conditional_risk(const SpectralCache& cache, const FilterSpec& f, double lambda,
                                     double sigma_sq);

/// Fills pred_bias_sq and pred_var from the deterministic curves.
void attach_prediction(RiskBreakdown& r, const EigenSystem& sys, const SourceFunction& f,
                       const FilterSpec& filter, double sigma_sq);

struct MonotonicityReport {
    std::vector<double> lambda_small;
    std::vector<double> lambda_large;
    std::vector<double> margin;  // Var(small) - Var(large), relative to Var(large)
    int violations = 0;
};

MonotonicityReport variance_monotonicity_probe(const SpectralCache& cache, const FilterSpec& f,
                                               const std::vector<std::pair<double, double>>& pairs,
                                               double sigma_sq = 1.0);

struct InterpolatingReport {
    std::vector<double> n_grid;
    std::vector<double> lambdas;
    std::vector<double> var_over_sigma;     // Var / sigma^2
    std::vector<double> log_weighted_half;  // Var (ln n)^{1/2} / sigma^2
    std::vector<double> log_weighted_one;   // Var (ln n) / sigma^2
    double floor = 0.0;                     // min Var / sigma^2
    double slope = 0.0;
    std::vector<std::string> warnings;
};

/// lambda(n) = n^{-beta}; exact conditional variance along the n grid.
InterpolatingReport interpolating_probe(const EigenSystem& sys, const SourceFunction& f,
                                        const FilterSpec& filter, double sigma_sq,
                                        const std::vector<double>& n_grid, std::uint64_t seed);

struct MonteCarloEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
    int draws = 0;
};

/// Noise Monte Carlo of ||f_hat - f*||^2 with Gaussian noise, computing each L2 error from the
/// estimator's Fourier coefficients (Parseval). Requires a torus system without the closed-form
/// series, so the kernel is exactly its truncated Mercer sum.
MonteCarloEstimate monte_carlo_risk(const EigenSystem& sys, const SourceFunction& f,
                                    const SampleDesign& x, const FilterSpec& filter, double lambda,
                                    double sigma_sq, int draws, std::uint64_t seed);

} // namespace speclab
