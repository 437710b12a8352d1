#pragma once
// Cumulative incidence, subdistribution hazard and cause-specific hazard
// recovered from fitted quantile curves.
//   F(t) = inf{u : phi(u) >= t},  h(t) = F'(t) / (1 - F(t)),
//   lambda(t) = F'(t) / (1 - F^1(t) - F^2(t)).

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "data_model.hpp"
#include "estimator.hpp"

namespace ivcr {

/// Pool-adjacent-violators fit of a non-decreasing sequence (equal weights).
inline std::vector<double> isotonic_increasing(const std::vector<double>& y) {
    std::vector<double> level;
    std::vector<std::size_t> width;
    for (double v : y) {
        level.push_back(v);
        width.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const std::size_t w = width[width.size() - 2] + width.back();
            const double m = (level[level.size() - 2] * static_cast<double>(width[width.size() - 2]) +
                              level.back() * static_cast<double>(width.back())) /
                             static_cast<double>(w);
            level.pop_back();
            width.pop_back();
            level.back() = m;
            width.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (std::size_t i = 0; i < level.size(); ++i) out.insert(out.end(), width[i], level[i]);
    return out;
}

/// Monotone piecewise-linear quantile curve through (0, 0) and (u_m, phi_m),
/// with its left-continuous inverse.
class IncidenceCurve {
public:
    IncidenceCurve() = default;
    IncidenceCurve(std::vector<double> u, std::vector<double> phi) : u_(std::move(u)) {
        if (u_.size() != phi.size()) throw std::invalid_argument("IncidenceCurve: size mismatch");
        phi_ = isotonic_increasing(phi);
        for (std::size_t i = 0; i < phi.size(); ++i)
            if (phi_[i] != phi[i]) adjusted_ = true;
        for (double& v : phi_) v = std::max(v, 0.0);
    }

    bool empty() const noexcept { return u_.empty(); }
    bool adjusted() const noexcept { return adjusted_; }
    const std::vector<double>& u() const noexcept { return u_; }
    const std::vector<double>& phi() const noexcept { return phi_; }
    /// Largest t at which F is known.
    double covered_end() const { return u_.empty() ? 0.0 : phi_.back(); }

    double quantile(double u) const {
        if (u_.empty()) return std::numeric_limits<double>::quiet_NaN();
        if (u <= 0.0) return 0.0;
        if (u > u_.back()) return std::numeric_limits<double>::quiet_NaN();
        double u0 = 0.0, p0 = 0.0;
        for (std::size_t i = 0; i < u_.size(); ++i) {
            if (u <= u_[i]) return p0 + (phi_[i] - p0) * (u - u0) / (u_[i] - u0);
            u0 = u_[i];
            p0 = phi_[i];
        }
        return phi_.back();
    }

    /// F(t); NaN beyond the covered range.
    double incidence(double t) const {
        if (u_.empty() || t > covered_end()) return std::numeric_limits<double>::quiet_NaN();
        if (t <= 0.0) return 0.0;
        double u0 = 0.0, p0 = 0.0;
        for (std::size_t i = 0; i < u_.size(); ++i) {
            if (t <= phi_[i]) {
                if (phi_[i] == p0) return u0;
                return u0 + (u_[i] - u0) * (t - p0) / (phi_[i] - p0);
            }
            u0 = u_[i];
            p0 = phi_[i];
        }
        return u_.back();
    }

private:
    std::vector<double> u_, phi_;
    bool adjusted_ = false;
};

struct LevelQuantities {
    IncidenceCurve curve;
    std::vector<double> t;        // phi at the reported grid points
    std::vector<double> u;        // F(t) at those points
    std::vector<double> density;  // F'(t)
    std::vector<double> subdistribution_hazard;
    std::vector<double> cause_specific_hazard;  // NaN where F^2 is unavailable
};

struct DerivedQuantities {
    std::vector<LevelQuantities> levels;
    std::vector<std::string> warnings;
};

/// Uses the reported grid points of each level; F^2 comes from `cause2`
/// (a fit on data with swapped cause labels) when provided.
inline DerivedQuantities derived_quantities(const QuantileCurveFit& fit, const QuantileCurveFit* cause2 = nullptr) {
    auto curve_of = [](const QuantileCurveFit& f, std::size_t l) {
        std::vector<double> u, phi;
        for (std::size_t m = 0; m < f.grid.size(); ++m)
            if (f.reported[m]) {
                u.push_back(f.grid[m]);
                phi.push_back(f.theta[m][l]);
            }
        return IncidenceCurve(std::move(u), std::move(phi));
    };

    DerivedQuantities out;
    const std::size_t L = fit.num_levels();
    out.levels.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        auto& q = out.levels[l];
        q.curve = curve_of(fit, l);
        if (q.curve.adjusted())
            out.warnings.push_back("level " + std::to_string(l) + ": fitted quantiles not monotone, isotonic projection applied");
        IncidenceCurve other;
        if (cause2 != nullptr && l < cause2->num_levels()) other = curve_of(*cause2, l);

        const auto& us = q.curve.u();
        const auto& ph = q.curve.phi();
        const std::size_t n = us.size();
        for (std::size_t i = 0; i < n; ++i) {
            double slope = std::numeric_limits<double>::quiet_NaN();
            if (n >= 2) {
                const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
                slope = (ph[b] - ph[a]) / (us[b] - us[a]);
            }
            const double dens = slope > 0.0 ? 1.0 / slope : std::numeric_limits<double>::infinity();
            const double F = us[i];
            q.t.push_back(ph[i]);
            q.u.push_back(F);
            q.density.push_back(n >= 2 ? dens : std::numeric_limits<double>::quiet_NaN());
            q.subdistribution_hazard.push_back(q.density.back() / (1.0 - F));
            const double F2 = other.incidence(ph[i]);
            q.cause_specific_hazard.push_back(q.density.back() / (1.0 - F - F2));
        }
    }
    return out;
}

/// Fits cause 1, refits with swapped cause labels for F^2, and combines.
inline DerivedQuantities derived_quantities(const Dataset& data, const FitConfig& cfg = {}) {
    const auto fit1 = fit_curve(data, cfg);
    const auto fit2 = fit_curve(swap_causes(data), cfg);
    return derived_quantities(fit1, &fit2);
}

}  // namespace ivcr
