#pragma once

#include <span>
#include <vector>

#include "speclab/spectrum.hpp"

namespace speclab {

enum class SourceStyle { exact_powerlaw, gapped };

struct SourceSpec {
    SourceStyle style = SourceStyle::exact_powerlaw;
    double s = 1.0;   // source exponent
    double q = 1.0;   // gap exponent for SourceStyle::gapped
    int blocks = 0;   // represented blocks; 0 means the system's M_max
};

/// Regression function f* = sum f_{m,l} e_{m,l}, stored by block L2 masses and, where the
/// system allows it, a point-evaluable representation:
///  - torus: explicit coefficients f_{m,l} against the Fourier basis;
///  - sphere: a zonal function sum_m c_m Z_{m-1}(<x, pole>) carrying the same block masses.
class SourceFunction {
public:
    double s() const { return s_; }
    int blocks() const { return static_cast<int>(fbar_sq_.size()); }
    std::span<const double> fbar_sq() const { return fbar_sq_; }
    /// ||f*||^2_{L2} over represented blocks.
    double norm_sq() const;
    /// Estimated L2 mass of the ideal source beyond the represented blocks.
    double tail_mass() const { return tail_mass_; }

    bool has_point_eval() const { return point_eval_; }
    /// Coefficients of block m (torus only).
    std::span<const cplx> coeff_block(int m) const;

    /// f*(x).
    cplx evaluate(const EigenSystem& sys, std::span<const double> x) const;
    /// (T f*)(x) = sum_m mu_m sum_l f_{m,l} e_{m,l}(x).
    cplx apply_T(const EigenSystem& sys, std::span<const double> x) const;

    friend SourceFunction make_source(const EigenSystem&, const SourceSpec&);
    friend SourceFunction make_block_source(const EigenSystem&, std::vector<double>, double);

private:
    void fill_representation(const EigenSystem& sys, const std::vector<std::vector<cplx>>& blocks);
    cplx weighted_series(const EigenSystem& sys, std::span<const double> x, bool times_mu) const;

    double s_ = 0.0;
    std::vector<double> fbar_sq_;
    std::vector<cplx> coeffs_;            // torus: flattened blocks
    std::vector<std::size_t> offsets_;    // torus: coeffs_ offset of block m at offsets_[m-1]
    std::vector<double> pole_;            // sphere
    std::vector<double> zonal_c_;         // sphere: per-degree weight
    double tail_mass_ = 0.0;
    bool point_eval_ = false;
};

SourceFunction make_source(const EigenSystem& sys, const SourceSpec& spec);

/// Source with prescribed block masses, spread evenly inside each block.
SourceFunction make_block_source(const EigenSystem& sys, std::vector<double> fbar_sq, double s);

/// ||f||^2_{[H]^t} = sum_m mu_m^{-t} fbar_m^2 over represented blocks.
double interp_norm_sq(const EigenSystem& sys, const SourceFunction& f, double t);

} // namespace speclab
