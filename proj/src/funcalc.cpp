#include "speclab/funcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

#include "speclab/linalg.hpp"

namespace speclab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// s in [0,1] -> v in [0,1] with v'(0) = v'(1) = 0.
double sine_substitution(double s) { return s - std::sin(kTwoPi * s) / kTwoPi; }
double sine_substitution_rate(double s) { return 1.0 - std::cos(kTwoPi * s); }

cplx filter_value(const FilterSpec& f, FilterPart which, double lambda, cplx z) {
    return which == FilterPart::phi ? f.phi(lambda, z) : f.psi(lambda, z);
}

double filter_value(const FilterSpec& f, FilterPart which, double lambda, double z) {
    return which == FilterPart::phi ? f.phi(lambda, z) : f.psi(lambda, z);
}

// Real interval containing the spectrum of a Hermitian matrix.
std::pair<double, double> gershgorin_hull(const Eigen::MatrixXcd& a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double r = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j != i) {
                r += std::abs(a(i, j));
            }
        }
        lo = std::min(lo, a(i, i).real() - r);
        hi = std::max(hi, a(i, i).real() + r);
    }
    return {lo, hi};
}

double distance_to_interval(cplx z, double lo, double hi) {
    const double x = std::clamp(z.real(), lo, hi);
    return std::abs(z - cplx(x, 0.0));
}

ContourResult contour_prologue(const Eigen::MatrixXcd& a, const ContourPath& path) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("matrix_filter_contour: matrix must be square");
    }
    ContourResult res;
    const auto [lo, hi] = gershgorin_hull(a);
    res.min_node_distance = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path.weights[k] == cplx(0.0)) {
            continue;
        }
        res.min_node_distance =
            std::min(res.min_node_distance, distance_to_interval(path.nodes[k], lo, hi));
    }
    if (res.min_node_distance < 1e-8) {
        std::ostringstream os;
        os << "contour node within " << res.min_node_distance << " of the spectral hull";
        res.warnings.push_back(os.str());
    }
    return res;
}

Eigen::MatrixXcd node_term(const Eigen::MatrixXcd& a, const FilterSpec& f, FilterPart which,
                           double lambda, cplx z, cplx w) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXcd shifted = -a;
    shifted.diagonal().array() += z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    return (w * filter_value(f, which, lambda, z)) * lu.solve(Eigen::MatrixXcd::Identity(n, n));
}

} // namespace

ContourPath build_contour(double lambda, double kappa_sq, int nodes_per_segment) {
    if (!(lambda > 0.0) || !(lambda < 1.0)) {
        throw std::invalid_argument("build_contour: lambda must lie in (0, 1)");
    }
    if (!(kappa_sq > 0.0)) {
        throw std::invalid_argument("build_contour: kappa_sq must be positive");
    }
    if (nodes_per_segment < 16) {
        throw std::invalid_argument("build_contour: need at least 16 nodes per segment");
    }
    ContourPath p;
    p.lambda = lambda;
    p.kappa_sq = kappa_sq;
    p.nodes_per_segment = nodes_per_segment;
    const double eta = 0.5 * lambda;
    const double radius = kappa_sq + eta;
    const double w_min = 1e-10 * lambda;
    const double log_span = std::log(radius / w_min);
    const int nn = nodes_per_segment;
    const double h = 1.0 / (nn - 1);
    const cplx down(1.0, -1.0);
    const cplx up(1.0, 1.0);

    auto push = [&](cplx z, cplx w, ContourSegment seg) {
        p.nodes.push_back(z);
        p.weights.push_back(w);
        p.segment.push_back(seg);
    };

    push(cplx(-eta, 0.0), 0.0, ContourSegment::lower_wedge);
    // lower wedge: w = x + eta grows from w_min to radius
    for (int k = 0; k < nn; ++k) {
        const double s = k * h;
        const double w = w_min * std::exp(log_span * sine_substitution(s));
        const double dw = w * log_span * sine_substitution_rate(s);
        push(cplx(w - eta, -w), h * down * dw, ContourSegment::lower_wedge);
    }
    // arc from angle -pi/2 to pi/2
    for (int k = 0; k < nn; ++k) {
        const double s = k * h;
        const double th = -0.5 * std::numbers::pi + std::numbers::pi * sine_substitution(s);
        const cplx e = std::polar(1.0, th);
        const cplx dz = cplx(0.0, 1.0) * radius * e * std::numbers::pi * sine_substitution_rate(s);
        push(kappa_sq + radius * e, h * dz, ContourSegment::arc);
    }
    // upper wedge: w shrinks from radius back to w_min
    for (int k = 0; k < nn; ++k) {
        const double s = k * h;
        const double w = radius * std::exp(-log_span * sine_substitution(s));
        const double dw = -w * log_span * sine_substitution_rate(s);
        push(cplx(w - eta, w), h * up * dw, ContourSegment::upper_wedge);
    }
    push(cplx(-eta, 0.0), 0.0, ContourSegment::upper_wedge);
    return p;
}

double winding_number(const ContourPath& path, cplx a) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path.weights[k] != cplx(0.0)) {
            acc += path.weights[k] / (path.nodes[k] - a);
        }
    }
    return (acc / cplx(0.0, kTwoPi)).real();
}

double inverse_distance_length(const ContourPath& path) {
    double acc = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        acc += std::abs(path.weights[k]) / std::abs(path.nodes[k] + path.lambda);
    }
    return acc;
}

AnalyticAuditReport audit_analytic_conditions(const FilterSpec& f,
                                              const std::vector<double>& lambda_grid,
                                              double kappa_sq, int nodes_per_segment) {
    AnalyticAuditReport rep;
    rep.filter = f.name();
    for (double lam : lambda_grid) {
        const ContourPath path = build_contour(lam, kappa_sq, nodes_per_segment);
        AnalyticLambdaRow row;
        row.lambda = lam;
        for (cplx z : path.nodes) {
            const cplx ph = f.phi(lam, z);
            const cplx ps = f.psi(lam, z);
            const double e = std::abs((z + lam) * ph);
            const double fv = std::abs((z + lam) * ps) / lam;
            if (!std::isfinite(e) || !std::isfinite(fv)) {
                ++rep.nonfinite_nodes;
                continue;
            }
            if (e > row.E_tilde) {
                row.E_tilde = e;
                row.worst_E_node = z;
            }
            if (fv > row.F_tilde) {
                row.F_tilde = fv;
                row.worst_F_node = z;
            }
            if (z.real() <= 0.0) {
                row.F_tilde_left = std::max(row.F_tilde_left, fv);
            }
        }
        rep.E_tilde = std::max(rep.E_tilde, row.E_tilde);
        rep.F_tilde = std::max(rep.F_tilde, row.F_tilde);
        rep.F_tilde_left = std::max(rep.F_tilde_left, row.F_tilde_left);
        rep.rows.push_back(row);
    }
    return rep;
}

Eigen::MatrixXcd matrix_filter_eig(const Eigen::MatrixXcd& a, const FilterSpec& f, FilterPart which,
                                   double lambda, double kappa_sq) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("matrix_filter_eig: matrix must be square");
    }
    const HermEig eig = eigh(a);
    Eigen::VectorXd fv(eig.values.size());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        double t = eig.values[i];
        if (t > kappa_sq + 1e-8) {
            throw std::invalid_argument("matrix_filter_eig: eigenvalue exceeds kappa^2");
        }
        if (t < 0.0) {
            if (t < -1e-10 * std::max(kappa_sq, 1.0)) {
                throw std::invalid_argument("matrix_filter_eig: matrix is not positive semidefinite");
            }
            t = 0.0;
        }
        fv[i] = filter_value(f, which, lambda, t);
    }
    Eigen::MatrixXcd out = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
    // restore exact Hermitian symmetry lost to rounding
    return 0.5 * (out + out.adjoint());
}

ContourResult matrix_filter_contour(const Eigen::MatrixXcd& a, const FilterSpec& f, FilterPart which,
                                    double lambda, const ContourPath& path) {
    ContourResult res = contour_prologue(a, path);
    const Eigen::Index n = a.rows();
    const auto total = static_cast<std::ptrdiff_t>(path.size());
    // bounded scratch: chunks of nodes are solved in parallel, then summed in node order
    constexpr std::ptrdiff_t kChunk = 64;
    std::vector<Eigen::MatrixXcd> terms(static_cast<std::size_t>(std::min(kChunk, total)));
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    for (std::ptrdiff_t base = 0; base < total; base += kChunk) {
        const std::ptrdiff_t len = std::min(kChunk, total - base);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < len; ++k) {
            const auto idx = static_cast<std::size_t>(base + k);
            if (path.weights[idx] == cplx(0.0)) {
                terms[static_cast<std::size_t>(k)] = Eigen::MatrixXcd::Zero(n, n);
            } else {
                terms[static_cast<std::size_t>(k)] =
                    node_term(a, f, which, lambda, path.nodes[idx], path.weights[idx]);
            }
        }
        for (std::ptrdiff_t k = 0; k < len; ++k) {
            acc += terms[static_cast<std::size_t>(k)];
        }
    }
    res.value = acc / cplx(0.0, kTwoPi);
    return res;
}

ContourResult matrix_filter_contour_serial(const Eigen::MatrixXcd& a, const FilterSpec& f,
                                           FilterPart which, double lambda, const ContourPath& path) {
    ContourResult res = contour_prologue(a, path);
    const Eigen::Index n = a.rows();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path.weights[k] == cplx(0.0)) {
            continue;
        }
        acc += node_term(a, f, which, lambda, path.nodes[k], path.weights[k]);
    }
    res.value = acc / cplx(0.0, kTwoPi);
    return res;
}

ResolventBound resolvent_bound(const ContourPath& path, const std::vector<double>& spectrum) {
    ResolventBound rb;
    rb.per_node.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        const cplx z = path.nodes[k];
        double m = 0.0;
        for (double t : spectrum) {
            m = std::max(m, std::abs(t + path.lambda) / std::abs(t - z));
        }
        rb.per_node.push_back(m);
        if (path.segment[k] == ContourSegment::arc) {
            rb.arc_max = std::max(rb.arc_max, m);
        } else {
            rb.wedge_max = std::max(rb.wedge_max, m);
        }
    }
    return rb;
}

Eigen::MatrixXcd random_hermitian_psd(int n, double spectral_max, std::uint64_t seed) {
    if (n < 1 || !(spectral_max > 0.0)) {
        throw std::invalid_argument("random_hermitian_psd: need n >= 1 and a positive bound");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXcd b(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            b(i, j) = cplx(g(rng), g(rng));
        }
    }
    Eigen::MatrixXcd a = b * b.adjoint();
    a = 0.5 * (a + a.adjoint());
    const double top = eigh(a).values.maxCoeff();
    return a * (spectral_max / top);
}

} // namespace speclab
