#pragma once
// Kernel smoothing of step functions with the Epanechnikov kernel
// K(s) = 3/4 (1 - s^2) on [-1, 1]. All integrals against the step function
// are evaluated in closed form piece by piece.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "step_function.hpp"

namespace ivcr {

enum class SmootherKind { local_linear, convolution };

inline const char* to_string(SmootherKind k) {
    return k == SmootherKind::local_linear ? "local_linear" : "convolution";
}

inline SmootherKind smoother_from_string(const std::string& s) {
    if (s == "local_linear" || s == "local-linear") return SmootherKind::local_linear;
    if (s == "convolution") return SmootherKind::convolution;
    throw std::invalid_argument("unknown smoother kind '" + s + "'");
}

namespace epanechnikov {

inline double cdf(double s) {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return 0.5 + 0.75 * (s - s * s * s / 3.0);
}

// Primitives of K(s) s^j, j = 0, 1, 2.
inline double p0(double s) { return 0.75 * (s - s * s * s / 3.0); }
inline double p1(double s) {
    const double s2 = s * s;
    return 0.75 * (s2 / 2.0 - s2 * s2 / 4.0);
}
inline double p2(double s) {
    const double s3 = s * s * s;
    return 0.75 * (s3 / 3.0 - s3 * s * s / 5.0);
}

}  // namespace epanechnikov

/// Normal-reference bandwidth for the Epanechnikov kernel:
/// 2.34 * min(sd, IQR / 1.349) * n^(-1/5). Falls back to sd when the IQR is 0.
inline double default_bandwidth(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw std::invalid_argument("default_bandwidth: at least two observations required; pass an explicit bandwidth");
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : sample) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw std::invalid_argument("default_bandwidth: degenerate sample (all values equal); pass an explicit bandwidth");

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double scale = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
    return 2.34 * scale * std::pow(static_cast<double>(n), -0.2);
}

struct SmootherConfig {
    SmootherKind kind = SmootherKind::local_linear;
    double bandwidth = 0.0;
    /// Right end of the design domain for the local-linear fit. NaN means
    /// the last jump time of the input.
    double support_end = std::numeric_limits<double>::quiet_NaN();
    /// Output node spacing as a fraction of the bandwidth.
    double node_spacing = 0.125;
};

/// Continuous, clipped, non-increasing smooth of a step function. The value
/// at t = 0 is anchored to the step function's value_at_zero and the curve is
/// flat beyond its last node.
class SmoothedCurve {
public:
    SmoothedCurve() = default;

    double operator()(double t) const {
        if (t <= 0.0) return anchor_;
        if (exact_) {
            if (t < ramp_end_) return anchor_ + (ramp_value_ - anchor_) * (t / ramp_end_);
            return std::clamp(convolve(t), 0.0, 1.0);
        }
        const double x = t / spacing_;
        if (x >= static_cast<double>(values_.size() - 1)) return values_.back();
        const auto i = static_cast<std::size_t>(x);
        const double f = x - static_cast<double>(i);
        return values_[i] + f * (values_[i + 1] - values_[i]);
    }

    SmootherKind kind() const noexcept { return kind_; }
    double bandwidth() const noexcept { return bandwidth_; }
    /// Point past which the curve is constant.
    double horizon() const noexcept {
        return exact_ ? (step_.empty() ? 0.0 : step_.jump_times().back() + bandwidth_)
                      : spacing_ * static_cast<double>(values_.size() - 1);
    }
    /// Tabulated nodes (empty for the exact convolution representation).
    const std::vector<double>& node_values() const noexcept { return values_; }
    double node_spacing() const noexcept { return spacing_; }

    /// Pre-processing values at the nodes, before clipping and the running minimum.
    const std::vector<double>& raw_node_values() const noexcept { return raw_; }

    friend SmoothedCurve smooth(const StepFunction& step, const SmootherConfig& cfg);

private:
    double convolve(double t) const {
        const double eps = bandwidth_;
        const auto& tau = step_.jump_times();
        const auto& v = step_.values();
        double acc = step_(t - eps);
        auto it = std::upper_bound(tau.begin(), tau.end(), t - eps);
        for (; it != tau.end() && *it < t + eps; ++it) {
            const auto i = static_cast<std::size_t>(it - tau.begin());
            const double prev = i == 0 ? step_.value_at_zero() : v[i - 1];
            acc += (v[i] - prev) * epanechnikov::cdf((t - *it) / eps);
        }
        return acc;
    }

    double local_linear(double t, double end) const {
        const double eps = bandwidth_;
        const double s_lo = std::max(-1.0, -t / eps);
        const double s_hi = std::min(1.0, (end - t) / eps);
        if (!(s_hi > s_lo)) return step_(t);
        using namespace epanechnikov;
        const double m0 = p0(s_hi) - p0(s_lo), m1 = p1(s_hi) - p1(s_lo), m2 = p2(s_hi) - p2(s_lo);
        const double x_lo = t + eps * s_lo, x_hi = t + eps * s_hi;
        const double base = step_(x_lo);
        double n0 = base * m0, n1 = base * m1;
        const auto& tau = step_.jump_times();
        const auto& v = step_.values();
        for (auto it = std::upper_bound(tau.begin(), tau.end(), x_lo); it != tau.end() && *it <= x_hi; ++it) {
            const auto i = static_cast<std::size_t>(it - tau.begin());
            const double delta = v[i] - (i == 0 ? step_.value_at_zero() : v[i - 1]);
            const double sigma = (*it - t) / eps;
            n0 += delta * (p0(s_hi) - p0(sigma));
            n1 += delta * (p1(s_hi) - p1(sigma));
        }
        const double det = m0 * m2 - m1 * m1;
        if (std::abs(det) <= 1e-14 * m0 * m2) return n0 / m0;
        return (m2 * n0 - m1 * n1) / det;
    }

    SmootherKind kind_ = SmootherKind::local_linear;
    double bandwidth_ = 0.0;
    double anchor_ = 1.0;
    bool exact_ = false;
    StepFunction step_;
    double ramp_end_ = 0.0, ramp_value_ = 0.0;
    double spacing_ = 1.0;
    std::vector<double> values_;
    std::vector<double> raw_;
};

inline SmoothedCurve smooth(const StepFunction& step, const SmootherConfig& cfg) {
    if (!(cfg.bandwidth > 0.0) || !std::isfinite(cfg.bandwidth))
        throw std::invalid_argument("smooth: bandwidth must be positive and finite");
    if (!(cfg.node_spacing > 0.0)) throw std::invalid_argument("smooth: node spacing must be positive");

    SmoothedCurve c;
    c.kind_ = cfg.kind;
    c.bandwidth_ = cfg.bandwidth;
    c.anchor_ = std::clamp(step.value_at_zero(), 0.0, 1.0);
    c.step_ = step;

    const double last_jump = step.empty() ? 0.0 : step.jump_times().back();
    double end = std::isnan(cfg.support_end) ? last_jump : std::max(cfg.support_end, last_jump);

    auto tabulate = [&](double domain_end, auto&& eval) {
        std::size_t intervals = static_cast<std::size_t>(std::ceil(domain_end / (cfg.node_spacing * cfg.bandwidth)));
        intervals = std::clamp<std::size_t>(intervals, 64, 8192);
        c.spacing_ = domain_end > 0.0 ? domain_end / static_cast<double>(intervals) : cfg.bandwidth;
        c.raw_.resize(intervals + 1);
        c.values_.resize(intervals + 1);
        c.raw_[0] = c.values_[0] = c.anchor_;
        double running = c.anchor_;
        for (std::size_t i = 1; i <= intervals; ++i) {
            const double raw = eval(c.spacing_ * static_cast<double>(i));
            c.raw_[i] = raw;
            running = std::min(running, std::clamp(raw, 0.0, 1.0));
            c.values_[i] = running;
        }
    };

    if (cfg.kind == SmootherKind::convolution) {
        if (step.is_non_increasing() && step.value_at_zero() <= 1.0 && step.final_value() >= 0.0) {
            c.exact_ = true;
            c.ramp_end_ = cfg.node_spacing * cfg.bandwidth;
            c.ramp_value_ = std::clamp(c.convolve(c.ramp_end_), 0.0, 1.0);
            c.ramp_value_ = std::min(c.ramp_value_, c.anchor_);
        } else {
            tabulate(last_jump + cfg.bandwidth, [&](double t) { return c.convolve(t); });
        }
    } else {
        if (end <= 0.0) end = cfg.bandwidth;
        tabulate(end, [&](double t) { return c.local_linear(t, end); });
    }
    return c;
}

}  // namespace ivcr
