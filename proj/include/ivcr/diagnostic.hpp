#pragma once
// Rank diagnostic for binary treatment and instrument: the sign of
//   det G(t) = f(t0, 0|0) f(t1, 1|1) - f(t1, 1|0) f(t0, 0|1)
// should not change over [0, y_0) x [0, y_1), with f = -d/dt S^1(t, z|w).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ivcr {

struct DiagnosticConfig {
    std::size_t points = 20;    // t-values per dimension
    double step = 1e-3;         // differentiation step, relative to the frontier
    double det_tolerance = 1e-9;
};

struct DiagnosticReport {
    bool applicable = false;
    std::size_t total = 0;
    std::size_t skipped = 0;   // some density <= 0
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::size_t zero = 0;
    int majority_sign = 0;
    double agreement = 0.0;    // share of evaluated points with the majority sign
    bool passes = false;
};

template <class Surface>
double density(const Surface& s, double t, std::size_t z, std::size_t w, double h) {
    if (s.is_structural_zero(z, w)) return 0.0;
    const double lo = std::max(0.0, t - h);
    return (s.value(lo, z, w) - s.value(t + h, z, w)) / (t + h - lo);
}

template <class Surface>
DiagnosticReport gprime_diagnostic(const Surface& s, const std::vector<double>& y_hat, const DiagnosticConfig& cfg = {}) {
    DiagnosticReport rep;
    if (s.num_treatments() != 2 || s.num_instruments() != 2 || y_hat.size() != 2) return rep;
    if (cfg.points == 0) throw std::invalid_argument("gprime_diagnostic: points must be positive");
    rep.applicable = true;

    std::vector<double> t0(cfg.points), t1(cfg.points);
    for (std::size_t i = 0; i < cfg.points; ++i) {
        const double frac = static_cast<double>(i + 1) / static_cast<double>(cfg.points + 1);
        t0[i] = frac * y_hat[0];
        t1[i] = frac * y_hat[1];
    }
    const double h0 = cfg.step * y_hat[0], h1 = cfg.step * y_hat[1];

    for (double a : t0) {
        const double f00 = density(s, a, 0, 0, h0), f01 = density(s, a, 0, 1, h0);
        for (double b : t1) {
            const double f10 = density(s, b, 1, 0, h1), f11 = density(s, b, 1, 1, h1);
            ++rep.total;
            const bool bad = (f00 <= 0.0 && !s.is_structural_zero(0, 0)) || (f01 <= 0.0 && !s.is_structural_zero(0, 1)) ||
                             (f10 <= 0.0 && !s.is_structural_zero(1, 0)) || (f11 <= 0.0 && !s.is_structural_zero(1, 1));
            if (bad) {
                ++rep.skipped;
                continue;
            }
            const double det = f00 * f11 - f10 * f01;
            const double scale = std::abs(f00 * f11) + std::abs(f10 * f01);
            if (std::abs(det) <= cfg.det_tolerance * scale) ++rep.zero;
            else if (det > 0.0) ++rep.positive;
            else ++rep.negative;
        }
    }
    const std::size_t evaluated = rep.positive + rep.negative + rep.zero;
    if (evaluated == 0) return rep;
    rep.majority_sign = rep.positive >= rep.negative ? 1 : -1;
    const std::size_t agree = rep.majority_sign > 0 ? rep.positive : rep.negative;
    rep.agreement = static_cast<double>(agree) / static_cast<double>(evaluated);
    rep.passes = agree == evaluated && agree > 0;
    return rep;
}

}  // namespace ivcr
