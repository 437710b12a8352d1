#pragma once
// Outer sets for quantiles beyond the identification frontier:
//   { theta in [0, inf]^L : theta not in prod [0, y_l), min_k R_k(theta) >= 0 },
//   R_k(theta) = sum_l S^1(theta_l ^ c_l, z_l | w_k) - (1 - u),
// represented as a finite union of interval products.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimator.hpp"

namespace ivcr {

struct IntervalProduct {
    std::vector<double> lo, hi;  // hi may be +inf

    bool contains(const std::vector<double>& theta) const {
        for (std::size_t l = 0; l < lo.size(); ++l)
            if (theta[l] < lo[l] || theta[l] > hi[l]) return false;
        return true;
    }
    bool operator==(const IntervalProduct&) const = default;
};

enum class OuterCase { i, ii, iii, iv, empty, general };

inline const char* to_string(OuterCase c) {
    switch (c) {
        case OuterCase::i: return "i";
        case OuterCase::ii: return "ii";
        case OuterCase::iii: return "iii";
        case OuterCase::iv: return "iv";
        case OuterCase::empty: return "empty";
        case OuterCase::general: return "general";
    }
    return "?";
}

struct OuterSet {
    double u = 0.0;
    std::vector<IntervalProduct> pieces;
    OuterCase tag = OuterCase::empty;

    bool contains(const std::vector<double>& theta) const {
        return std::any_of(pieces.begin(), pieces.end(), [&](const IntervalProduct& p) { return p.contains(theta); });
    }
    bool empty() const noexcept { return pieces.empty(); }
};

/// Frontier inputs: y^1 per level, censoring caps c per level, and the
/// point-identification limit u_hat (outer sets are for u > u_hat).
struct BoundsFrontiers {
    std::vector<double> y1;
    std::vector<double> caps;
    double u_hat = 0.0;

    double effective_cap(std::size_t l) const { return std::min(caps[l], y1[l]); }
};

struct OuterSetConfig {
    double tolerance = 1e-6;      // bisection tolerance, relative to the frontier
    std::size_t resolution = 512; // strips per free dimension in three or more levels
};

template <class Surface>
std::vector<double> capped_residual(const std::vector<double>& theta, double u, const Surface& s,
                                    const std::vector<double>& caps) {
    const std::size_t L = s.num_treatments(), K = s.num_instruments();
    if (theta.size() != L || caps.size() != L) throw std::invalid_argument("capped_residual: dimension mismatch");
    std::vector<double> r(K, -(1.0 - u));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) r[k] += s.value(std::min(theta[l], caps[l]), l, k);
    return r;
}

namespace detail {

template <class Surface>
double min_capped(const std::vector<double>& theta, double u, const Surface& s, const BoundsFrontiers& f) {
    const std::size_t L = s.num_treatments(), K = s.num_instruments();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
        double r = -(1.0 - u);
        for (std::size_t l = 0; l < L; ++l) r += s.value(std::min(theta[l], f.effective_cap(l)), l, k);
        best = std::min(best, r);
    }
    return best;
}

inline void check_frontiers(std::size_t L, const BoundsFrontiers& f) {
    if (f.y1.size() != L || f.caps.size() != L) throw std::invalid_argument("outer set: frontier dimension mismatch");
    for (std::size_t l = 0; l < L; ++l)
        if (!(f.y1[l] > 0.0) || !(f.caps[l] > 0.0)) throw std::invalid_argument("outer set: frontiers must be positive");
}

inline void check_u(double u, const BoundsFrontiers& f) {
    if (!(u <= 1.0)) throw std::invalid_argument("outer set: u must not exceed 1");
    if (!(u > f.u_hat))
        throw std::invalid_argument("u = " + std::to_string(u) +
                                    " is inside the point-identified range; use the quantile estimate instead");
}

/// Down-set {x : g(x) >= 0} over the coordinates in `free` with the others
/// held at `theta`; g is non-increasing in each coordinate and flat above
/// the frontier. Returns boxes over all L coordinates (fixed ones left at
/// [theta, theta]); a coordinate that reaches its frontier extends to +inf.
template <class G>
void down_set(G& g, std::vector<double>& theta, std::vector<std::size_t> free, const BoundsFrontiers& f,
              const OuterSetConfig& cfg, std::vector<IntervalProduct>& out) {
    const std::size_t L = theta.size();
    auto emit = [&](std::size_t l, double hi) {
        IntervalProduct p;
        p.lo.assign(L, 0.0);
        p.hi = theta;
        p.lo = theta;
        p.lo[l] = 0.0;
        p.hi[l] = hi;
        out.push_back(std::move(p));
    };
    const std::size_t l = free.front();
    const double y = f.y1[l];

    if (free.size() == 1) {
        theta[l] = y;
        if (g(theta) >= 0.0) {
            emit(l, std::numeric_limits<double>::infinity());
            return;
        }
        theta[l] = 0.0;
        if (g(theta) < 0.0) return;
        double lo = 0.0, hi = y;
        while (hi - lo > cfg.tolerance * y) {
            theta[l] = 0.5 * (lo + hi);
            (g(theta) >= 0.0 ? lo : hi) = theta[l];
        }
        emit(l, hi);
        return;
    }

    // Strips along l, each taking the cross-section at its lower knot.
    std::vector<std::size_t> rest(free.begin() + 1, free.end());
    const std::size_t R = std::max<std::size_t>(cfg.resolution, 1);
    std::vector<IntervalProduct> prev;
    double prev_lo = 0.0;
    auto flush = [&](double strip_hi) {
        for (auto p : prev) {
            p.lo[l] = prev_lo;
            p.hi[l] = strip_hi;
            out.push_back(std::move(p));
        }
    };
    for (std::size_t i = 0; i <= R; ++i) {
        const double a = i == R ? y : y * static_cast<double>(i) / static_cast<double>(R);
        theta[l] = a;
        std::vector<IntervalProduct> cur;
        down_set(g, theta, rest, f, cfg, cur);
        const bool same = cur == prev && i > 0 && i < R;
        if (same) continue;
        if (i > 0) flush(a);
        if (cur.empty()) {
            prev.clear();
            theta[l] = 0.0;
            return;
        }
        prev = std::move(cur);
        prev_lo = a;
    }
    flush(std::numeric_limits<double>::infinity());
    theta[l] = 0.0;
}

}  // namespace detail

/// Direct evaluation of the two membership conditions.
template <class Surface>
bool verify_membership(const std::vector<double>& theta, double u, const Surface& s, const BoundsFrontiers& f) {
    const std::size_t L = s.num_treatments();
    detail::check_frontiers(L, f);
    if (theta.size() != L) throw std::invalid_argument("verify_membership: theta has the wrong dimension");
    bool outside = false;
    for (std::size_t l = 0; l < L; ++l)
        if (theta[l] >= f.y1[l]) outside = true;
    return outside && detail::min_capped(theta, u, s, f) >= 0.0;
}

/// Union over l of [y_l, inf] x (down-set of the remaining coordinates with
/// theta_l at its frontier).
template <class Surface>
OuterSet outer_set(double u, const Surface& s, const BoundsFrontiers& f, const OuterSetConfig& cfg = {}) {
    const std::size_t L = s.num_treatments();
    detail::check_frontiers(L, f);
    detail::check_u(u, f);
    if (L < 2) throw std::invalid_argument("outer set: at least two treatment levels required");

    auto g = [&](const std::vector<double>& th) { return detail::min_capped(th, u, s, f); };
    OuterSet set;
    set.u = u;
    std::vector<bool> face(L, false);
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> theta(L, 0.0);
        theta[l] = f.y1[l];
        std::vector<std::size_t> free;
        for (std::size_t j = 0; j < L; ++j)
            if (j != l) free.push_back(j);
        std::vector<IntervalProduct> pieces;
        detail::down_set(g, theta, free, f, cfg, pieces);
        for (auto& p : pieces) {
            p.lo[l] = f.y1[l];
            p.hi[l] = std::numeric_limits<double>::infinity();
            set.pieces.push_back(std::move(p));
        }
        face[l] = !pieces.empty();
    }

    if (L == 2) {
        std::vector<double> corner = f.y1;
        if (!set.pieces.empty() && g(corner) >= 0.0) set.tag = OuterCase::i;
        else if (face[0] && face[1]) set.tag = OuterCase::ii;
        else if (face[0]) set.tag = OuterCase::iii;
        else if (face[1]) set.tag = OuterCase::iv;
        else set.tag = OuterCase::empty;
    } else {
        set.tag = set.pieces.empty() ? OuterCase::empty : OuterCase::general;
    }
    return set;
}

template <class Surface>
OuterSet outer_set_2d(double u, const Surface& s, const BoundsFrontiers& f, const OuterSetConfig& cfg = {}) {
    if (s.num_treatments() != 2) throw std::invalid_argument("outer_set_2d: exactly two treatment levels required");
    return outer_set(u, s, f, cfg);
}

template <class Surface>
OuterSet outer_set_recursive(double u, const Surface& s, const BoundsFrontiers& f, const OuterSetConfig& cfg = {}) {
    return outer_set(u, s, f, cfg);
}

/// Frontiers from a fitted curve: y^1 from the fit, caps as the largest
/// observed time per treatment level.
inline BoundsFrontiers bounds_frontiers(const Dataset& data, const QuantileCurveFit& fit) {
    BoundsFrontiers f;
    f.y1 = fit.frontiers.y_hat;
    f.u_hat = fit.frontiers.u_hat;
    f.caps.assign(data.num_treatments(), 0.0);
    for (const auto& r : data.records()) f.caps[r.z] = std::max(f.caps[r.z], r.y);
    return f;
}

}  // namespace ivcr
