#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ivcr {

/// Right-continuous piecewise-constant function on [0, inf).
/// f(t) = values[i] for the largest i with jump_times[i] <= t, else value_at_zero.
class StepFunction {
public:
    StepFunction() = default;

    StepFunction(std::vector<double> jump_times, std::vector<double> values, double value_at_zero)
        : jump_times_(std::move(jump_times)), values_(std::move(values)), value_at_zero_(value_at_zero) {
        if (jump_times_.size() != values_.size())
            throw std::invalid_argument("StepFunction: jump_times and values differ in length");
        for (std::size_t i = 0; i < jump_times_.size(); ++i) {
            if (jump_times_[i] < 0.0) throw std::invalid_argument("StepFunction: negative jump time");
            if (i > 0 && !(jump_times_[i] > jump_times_[i - 1]))
                throw std::invalid_argument("StepFunction: jump times must be strictly increasing");
        }
    }

    static StepFunction constant(double v) { return StepFunction({}, {}, v); }

    double operator()(double t) const {
        auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
        if (it == jump_times_.begin()) return value_at_zero_;
        return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
    }

    /// Left limit f(t-).
    double left_limit(double t) const {
        auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
        if (it == jump_times_.begin()) return value_at_zero_;
        return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
    }

    const std::vector<double>& jump_times() const noexcept { return jump_times_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double value_at_zero() const noexcept { return value_at_zero_; }
    std::size_t size() const noexcept { return jump_times_.size(); }
    bool empty() const noexcept { return jump_times_.empty(); }

    double final_value() const noexcept { return values_.empty() ? value_at_zero_ : values_.back(); }

    bool is_non_increasing() const noexcept {
        double prev = value_at_zero_;
        for (double v : values_) {
            if (v > prev) return false;
            prev = v;
        }
        return true;
    }

private:
    std::vector<double> jump_times_;
    std::vector<double> values_;
    double value_at_zero_ = 0.0;
};

}  // namespace ivcr
