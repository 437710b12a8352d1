#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "data_model.hpp"
#include "smoothing.hpp"
#include "survival.hpp"

namespace ivcr {

struct BandwidthPolicy {
    /// Global bandwidth; unset means the rule of thumb on each cell's times.
    std::optional<double> fixed;
    std::map<CellIndex, double> per_cell;
};

struct SurfaceConfig {
    SmootherKind kind = SmootherKind::local_linear;
    BandwidthPolicy bandwidth;
    double node_spacing = 0.125;
};

/// Smoothed estimate of S^1(t, z | w) = P(T^1 >= t, Z = z | W = w) over all cells.
class SmoothedSurvivalSurface {
public:
    struct Cell {
        SmoothedCurve curve;
        double p_hat = 0.0;
        double bandwidth = 0.0;
        double max_time = 0.0;
        bool structural_zero = false;
    };

    SmoothedSurvivalSurface(std::size_t num_treatments, std::size_t num_instruments, std::vector<Cell> cells)
        : L_(num_treatments), K_(num_instruments), cells_(std::move(cells)) {
        if (cells_.size() != L_ * K_) throw std::invalid_argument("surface: cell count mismatch");
    }

    double value(double t, std::size_t z, std::size_t w) const {
        const Cell& c = cells_[z * K_ + w];
        if (c.structural_zero) return 0.0;
        return c.p_hat * c.curve(t);
    }
    double operator()(double t, std::size_t z, std::size_t w) const { return value(t, z, w); }

    /// S~^1(t | z, w) without the p_hat factor.
    double conditional(double t, std::size_t z, std::size_t w) const {
        const Cell& c = cells_[z * K_ + w];
        return c.structural_zero ? 0.0 : c.curve(t);
    }

    const Cell& cell(std::size_t z, std::size_t w) const { return cells_[z * K_ + w]; }
    double p_hat(std::size_t z, std::size_t w) const { return cells_[z * K_ + w].p_hat; }
    bool is_structural_zero(std::size_t z, std::size_t w) const { return cells_[z * K_ + w].structural_zero; }
    std::size_t num_treatments() const noexcept { return L_; }
    std::size_t num_instruments() const noexcept { return K_; }

private:
    std::size_t L_ = 0, K_ = 0;
    std::vector<Cell> cells_;
};

inline SmoothedSurvivalSurface assemble_surface(const Dataset& data, const SurfaceConfig& cfg = {}) {
    const std::size_t L = data.num_treatments(), K = data.num_instruments();
    const auto cp = build_counting_processes(data);

    std::vector<std::vector<double>> times(L * K);
    for (const auto& r : data.records()) times[r.z * K + r.w].push_back(r.y);

    std::vector<SmoothedSurvivalSurface::Cell> cells(L * K);
    for (std::size_t z = 0; z < L; ++z) {
        for (std::size_t w = 0; w < K; ++w) {
            auto& cell = cells[z * K + w];
            const auto& proc = cp.cell({z, w});
            if (proc.empty()) {
                cell.structural_zero = true;
                continue;
            }
            cell.p_hat = static_cast<double>(proc.size) / static_cast<double>(cp.instrument_sizes[w]);
            cell.max_time = proc.max_time;
            if (auto it = cfg.bandwidth.per_cell.find({z, w}); it != cfg.bandwidth.per_cell.end())
                cell.bandwidth = it->second;
            else if (cfg.bandwidth.fixed)
                cell.bandwidth = *cfg.bandwidth.fixed;
            else
                cell.bandwidth = default_bandwidth(times[z * K + w]);

            SmootherConfig sc;
            sc.kind = cfg.kind;
            sc.bandwidth = cell.bandwidth;
            sc.support_end = proc.max_time;
            sc.node_spacing = cfg.node_spacing;
            cell.curve = smooth(aalen_johansen_cause1(proc), sc);
        }
    }
    return SmoothedSurvivalSurface(L, K, std::move(cells));
}

}  // namespace ivcr
