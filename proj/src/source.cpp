#include "speclab/source.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "speclab/special.hpp"

namespace speclab {

double SourceFunction::norm_sq() const {
    return std::accumulate(fbar_sq_.begin(), fbar_sq_.end(), 0.0);
}

std::span<const cplx> SourceFunction::coeff_block(int m) const {
    if (offsets_.empty()) {
        throw std::invalid_argument("coeff_block: source has no explicit coefficients");
    }
    const auto b = offsets_[static_cast<std::size_t>(m - 1)];
    const auto e = offsets_[static_cast<std::size_t>(m)];
    return std::span<const cplx>(coeffs_).subspan(b, e - b);
}

cplx SourceFunction::weighted_series(const EigenSystem& sys, std::span<const double> x,
                                     bool times_mu) const {
    if (!point_eval_) {
        throw std::invalid_argument("source has no point-evaluable representation");
    }
    const auto mu = sys.mu();
    if (sys.family() == SystemFamily::torus) {
        const auto c0 = coeff_block(1);
        cplx acc = (times_mu ? mu[0] : 1.0) * c0[0];
        // e^{ikx} by rotation, re-anchored periodically to keep the phase error at rounding level
        const cplx step = std::polar(1.0, x[0]);
        cplx e = 1.0;
        for (int m = 2; m <= blocks(); ++m) {
            const int k = m - 1;
            e = (k % 256 == 0) ? std::polar(1.0, k * x[0]) : e * step;
            const auto c = coeff_block(m);
            const double w = times_mu ? mu[static_cast<std::size_t>(m - 1)] : 1.0;
            acc += w * (c[0] * e + c[1] * std::conj(e));
        }
        return acc;
    }
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        t += x[i] * pole_[i];
    }
    t = std::clamp(t, -1.0, 1.0);
    const int d = sys.descriptor().sphere_dim;
    const double alpha = 0.5 * (d - 1);
    double c_prev = 1.0;
    double c = 2.0 * alpha * t;
    double acc = zonal_c_[0] * (times_mu ? mu[0] : 1.0);
    for (int deg = 1; deg < blocks(); ++deg) {
        if (deg >= 2) {
            const double next =
                (2.0 * t * (deg + alpha - 1.0) * c - (deg + 2.0 * alpha - 2.0) * c_prev) / deg;
            c_prev = c;
            c = next;
        }
        const double w = times_mu ? mu[static_cast<std::size_t>(deg)] : 1.0;
        acc += w * zonal_c_[static_cast<std::size_t>(deg)] * (deg + alpha) / alpha * c;
    }
    return acc;
}

cplx SourceFunction::evaluate(const EigenSystem& sys, std::span<const double> x) const {
    return weighted_series(sys, x, false);
}

cplx SourceFunction::apply_T(const EigenSystem& sys, std::span<const double> x) const {
    return weighted_series(sys, x, true);
}

SourceFunction make_block_source(const EigenSystem& sys, std::vector<double> fbar_sq, double s) {
    if (fbar_sq.empty() || static_cast<int>(fbar_sq.size()) > sys.m_max()) {
        throw std::invalid_argument("make_block_source: block count outside the represented range");
    }
    SourceFunction f;
    f.s_ = s;
    std::vector<std::vector<cplx>> blocks(fbar_sq.size());
    for (std::size_t i = 0; i < fbar_sq.size(); ++i) {
        const auto d = static_cast<std::size_t>(sys.mult()[i]);
        const double each = std::sqrt(fbar_sq[i] / static_cast<double>(d));
        if (sys.family() == SystemFamily::torus) {
            blocks[i].assign(d, cplx(each, 0.0));
        }
    }
    f.fbar_sq_ = std::move(fbar_sq);
    f.fill_representation(sys, blocks);
    return f;
}

SourceFunction make_source(const EigenSystem& sys, const SourceSpec& spec) {
    if (!(spec.s > 0.0)) {
        throw std::invalid_argument("make_source: source exponent must be positive");
    }
    const int nb = spec.blocks == 0 ? sys.m_max() : spec.blocks;
    if (nb < 1 || nb > sys.m_max()) {
        throw std::invalid_argument("make_source: block count outside the represented range");
    }
    const double gamma = sys.cumulative_growth();
    const double beta = sys.beta();
    SourceFunction f;
    f.s_ = spec.s;

    if (spec.style == SourceStyle::exact_powerlaw) {
        const double p = spec.s * beta;
        const double e = gamma * p + 1.0;
        std::vector<double> fbar(static_cast<std::size_t>(nb));
        for (int m = 1; m <= nb; ++m) {
            fbar[static_cast<std::size_t>(m - 1)] = std::pow(static_cast<double>(m), -e);
        }
        f = make_block_source(sys, std::move(fbar), spec.s);
        f.tail_mass_ = special::hurwitz_zeta(e, nb + 1.0);
        return f;
    }

    if (!(spec.q >= 1.0)) {
        throw std::invalid_argument("make_source: gap exponent must be >= 1");
    }
    const double p = spec.s * spec.q * beta;
    const std::int64_t jmax = sys.cumulative(nb);
    std::vector<double> fbar(static_cast<std::size_t>(nb), 0.0);
    std::vector<std::vector<cplx>> blocks(static_cast<std::size_t>(nb));
    for (int m = 1; m <= nb; ++m) {
        blocks[static_cast<std::size_t>(m - 1)].assign(
            static_cast<std::size_t>(sys.mult()[static_cast<std::size_t>(m - 1)]), 0.0);
    }
    std::int64_t l = 1;
    for (;; ++l) {
        const auto j = static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(l), spec.q) - 1e-9));
        if (j > jmax) {
            break;
        }
        const double a = std::pow(static_cast<double>(l), -(p + 1.0) / 2.0);
        const auto [m, slot] = sys.block_of(j);
        blocks[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(slot)] = a;
        fbar[static_cast<std::size_t>(m - 1)] += a * a;
    }
    f.fbar_sq_ = std::move(fbar);
    f.fill_representation(sys, blocks);
    f.tail_mass_ = special::hurwitz_zeta(p + 1.0, static_cast<double>(l));
    return f;
}

void SourceFunction::fill_representation(const EigenSystem& sys,
                                         const std::vector<std::vector<cplx>>& blocks) {
    auto& f = *this;
    f.coeffs_.clear();
    f.offsets_.clear();
    f.pole_.clear();
    f.zonal_c_.clear();
    f.point_eval_ = false;
    if (sys.family() == SystemFamily::torus) {
        f.offsets_.push_back(0);
        for (const auto& b : blocks) {
            f.coeffs_.insert(f.coeffs_.end(), b.begin(), b.end());
            f.offsets_.push_back(f.coeffs_.size());
        }
        f.point_eval_ = true;
    } else if (sys.family() == SystemFamily::sphere) {
        const int dim = sys.point_dim();
        f.pole_.assign(static_cast<std::size_t>(dim), 0.0);
        f.pole_.back() = 1.0;
        const auto fb = f.fbar_sq();
        f.zonal_c_.resize(fb.size());
        for (std::size_t i = 0; i < fb.size(); ++i) {
            f.zonal_c_[i] = std::sqrt(fb[i] / static_cast<double>(sys.mult()[i]));
        }
        f.point_eval_ = true;
    }
}

double interp_norm_sq(const EigenSystem& sys, const SourceFunction& f, double t) {
    if (t < 0.0) {
        throw std::invalid_argument("interp_norm_sq: t must be >= 0");
    }
    const auto mu = sys.mu();
    const auto fb = f.fbar_sq();
    double acc = 0.0;
    for (std::size_t i = fb.size(); i-- > 0;) {
        acc += std::pow(mu[i], -t) * fb[i];
    }
    return acc;
}

} // namespace speclab
