#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/filters.hpp"

namespace speclab {

enum class ContourSegment { lower_wedge = 0, arc = 1, upper_wedge = 2 };

/// Closed counterclockwise discretization of the wedge-plus-arc contour around [0, kappa^2]:
/// lower wedge x - (x+eta)i and upper wedge x + (x+eta)i for x in [-eta, kappa^2], eta = lambda/2,
/// joined by the arc |z - kappa^2| = kappa^2 + eta, Re z >= kappa^2. weights[k] integrates
/// g(z) dz, i.e. sum_k weights[k] g(nodes[k]) ~ closed integral of g.
struct ContourPath {
    double lambda = 0.0;
    double kappa_sq = 0.0;
    int nodes_per_segment = 0;
    std::vector<cplx> nodes;
    std::vector<cplx> weights;
    std::vector<ContourSegment> segment;

    std::size_t size() const { return nodes.size(); }
};

/// Wedge segments are graded geometrically in x + eta, starting at 1e-10 lambda; all three
/// segments use a sine-endpoint substitution so the trapezoid rule stays high order at the
/// corners. The corner -eta is listed as first and last node with zero weight.
ContourPath build_contour(double lambda, double kappa_sq, int nodes_per_segment = 512);

/// (1/2 pi i) closed integral of dz/(z - a) by the path quadrature.
double winding_number(const ContourPath& path, cplx a);

/// Closed integral of |dz| / |z + lambda|.
double inverse_distance_length(const ContourPath& path);

/// sup over nodes of |(z+lambda) phi(z)| and |(z+lambda) psi(z)|/lambda.
struct AnalyticLambdaRow {
    double lambda = 0.0;
    double E_tilde = 0.0;
    double F_tilde = 0.0;
    double F_tilde_left = 0.0;  // restricted to Re z <= 0
    cplx worst_E_node;
    cplx worst_F_node;
};

struct AnalyticAuditReport {
    std::string filter;
    std::vector<AnalyticLambdaRow> rows;
    double E_tilde = 0.0;        // sup over lambda
    double F_tilde = 0.0;
    double F_tilde_left = 0.0;
    long nonfinite_nodes = 0;
};

AnalyticAuditReport audit_analytic_conditions(const FilterSpec& f,
                                              const std::vector<double>& lambda_grid,
                                              double kappa_sq, int nodes_per_segment = 512);

enum class FilterPart { phi, psi };

/// U f(Lambda) U^H through a dense eigendecomposition. Eigenvalues in [-1e-10 kappa^2, 0) are
/// clamped to 0; anything above kappa^2 + 1e-8 or below the tolerance throws.
Eigen::MatrixXcd matrix_filter_eig(const Eigen::MatrixXcd& a, const FilterSpec& f, FilterPart which,
                                   double lambda, double kappa_sq);

struct ContourResult {
    Eigen::MatrixXcd value;
    /// Smallest distance from a weighted node to the Gershgorin hull of the spectrum.
    double min_node_distance = 0.0;
    std::vector<std::string> warnings;
};

/// (1/2 pi i) closed integral of f(z) (z - A)^{-1} dz with one LU factorization per node.
/// Nodes are processed in parallel; contributions are summed in node order.
ContourResult matrix_filter_contour(const Eigen::MatrixXcd& a, const FilterSpec& f, FilterPart which,
                                    double lambda, const ContourPath& path);

/// Single-threaded reference for matrix_filter_contour.
ContourResult matrix_filter_contour_serial(const Eigen::MatrixXcd& a, const FilterSpec& f,
                                           FilterPart which, double lambda, const ContourPath& path);

/// max over spectrum points t of |t + lambda| / |t - z| per node: the norm of
/// (A+lambda)^{1/2} (A-z)^{-1} (A+lambda)^{1/2} for diagonal A with that spectrum.
struct ResolventBound {
    double wedge_max = 0.0;
    double arc_max = 0.0;
    std::vector<double> per_node;
};

ResolventBound resolvent_bound(const ContourPath& path, const std::vector<double>& spectrum);

/// B B^H for a complex Gaussian B, rescaled so the largest eigenvalue is `spectral_max`.
Eigen::MatrixXcd random_hermitian_psd(int n, double spectral_max, std::uint64_t seed);

} // namespace speclab
