#pragma once
// Per-cell counting processes and the nonparametric estimators built on
// them: the product-limit survival of T and the Aalen-Johansen estimate of
// the cause-specific subdistribution survival P(T^j >= t | z, w).

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "data_model.hpp"
#include "step_function.hpp"

namespace ivcr {

/// Processes for one (z, w) cell at its ordered distinct observed times.
struct CellProcesses {
    std::vector<double> times;          // distinct observed times, increasing
    std::vector<std::size_t> at_risk;   // Y_{z,w}(t) = #{y_i >= t}
    std::vector<std::size_t> d_all;     // dN_{z,w}(t), failures from any cause
    std::vector<std::size_t> d_cause1;  // dN^1_{z,w}(t)
    std::vector<std::size_t> d_cause2;
    std::vector<std::size_t> d_censored;
    std::size_t size = 0;               // Y_{z,w}
    double max_time = 0.0;

    bool empty() const noexcept { return size == 0; }
};

struct CountingProcesses {
    std::size_t num_treatments = 0;
    std::size_t num_instruments = 0;
    std::vector<CellProcesses> cells;             // row-major (z, w)
    std::vector<std::size_t> instrument_sizes;    // Y_w

    const CellProcesses& cell(CellIndex c) const { return cells[c.z * num_instruments + c.w]; }
};

namespace detail {

/// Builds processes from records already sorted by (y asc, event desc, input order).
inline CellProcesses processes_from_sorted(const std::vector<ObservationRecord>& sorted) {
    CellProcesses p;
    p.size = sorted.size();
    if (sorted.empty()) return p;
    p.max_time = sorted.back().y;
    std::size_t remaining = sorted.size();
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].y;
        std::size_t d1 = 0, d2 = 0, dc = 0, j = i;
        for (; j < sorted.size() && sorted[j].y == t; ++j) {
            switch (sorted[j].event) {
                case Event::cause1: ++d1; break;
                case Event::cause2: ++d2; break;
                case Event::censored: ++dc; break;
            }
        }
        p.times.push_back(t);
        p.at_risk.push_back(remaining);
        p.d_cause1.push_back(d1);
        p.d_cause2.push_back(d2);
        p.d_all.push_back(d1 + d2);
        p.d_censored.push_back(dc);
        remaining -= (j - i);
        i = j;
    }
    return p;
}

inline void sort_for_survival(std::vector<ObservationRecord>& recs) {
    std::stable_sort(recs.begin(), recs.end(), [](const ObservationRecord& a, const ObservationRecord& b) {
        if (a.y != b.y) return a.y < b.y;
        return static_cast<int>(a.event) > static_cast<int>(b.event);
    });
}

}  // namespace detail

inline CountingProcesses build_counting_processes(const Dataset& data) {
    const std::size_t L = data.num_treatments(), K = data.num_instruments();
    std::vector<std::vector<ObservationRecord>> by_cell(L * K);
    for (const auto& r : data.records()) by_cell[r.z * K + r.w].push_back(r);

    CountingProcesses cp{L, K, {}, std::vector<std::size_t>(K, 0)};
    cp.cells.reserve(L * K);
    for (auto& recs : by_cell) {
        detail::sort_for_survival(recs);
        cp.cells.push_back(detail::processes_from_sorted(recs));
    }
    for (std::size_t z = 0; z < L; ++z)
        for (std::size_t w = 0; w < K; ++w) cp.instrument_sizes[w] += cp.cells[z * K + w].size;
    return cp;
}

/// Processes for an arbitrary subsample (e.g. pooled over instrument levels).
inline CellProcesses build_processes(std::vector<ObservationRecord> recs) {
    detail::sort_for_survival(recs);
    return detail::processes_from_sorted(recs);
}

/// Product-limit estimate of the overall survival of T, right-continuous:
/// value on [t_i, t_{i+1}) is prod_{s <= t_i} (1 - dN(s)/Y(s)).
inline StepFunction product_limit_survival(const CellProcesses& p) {
    std::vector<double> t, v;
    double s = 1.0;
    for (std::size_t i = 0; i < p.times.size(); ++i) {
        if (p.d_all[i] == 0) continue;
        s *= 1.0 - static_cast<double>(p.d_all[i]) / static_cast<double>(p.at_risk[i]);
        t.push_back(p.times[i]);
        v.push_back(s);
    }
    return StepFunction(std::move(t), std::move(v), 1.0);
}

inline StepFunction product_limit_survival(const CountingProcesses& cp, CellIndex cell) {
    return product_limit_survival(cp.cell(cell));
}

/// Aalen-Johansen cumulative incidence of `cause` (1 or 2):
/// F(t) = sum_{s <= t} S(s-) dN^j(s) / Y(s), with S(s-) the left limit of the
/// product-limit survival.
inline StepFunction aalen_johansen_incidence(const CellProcesses& p, Event cause) {
    std::vector<double> t, v;
    double surv_left = 1.0, F = 0.0;
    for (std::size_t i = 0; i < p.times.size(); ++i) {
        const std::size_t dj = cause == Event::cause1 ? p.d_cause1[i] : p.d_cause2[i];
        if (dj > 0) {
            F += surv_left * static_cast<double>(dj) / static_cast<double>(p.at_risk[i]);
            t.push_back(p.times[i]);
            v.push_back(F);
        }
        if (p.d_all[i] > 0)
            surv_left *= 1.0 - static_cast<double>(p.d_all[i]) / static_cast<double>(p.at_risk[i]);
    }
    return StepFunction(std::move(t), std::move(v), 0.0);
}

/// Subdistribution survival of cause 1, 1 - F^1(t).
inline StepFunction aalen_johansen_cause1(const CellProcesses& p) {
    const auto F = aalen_johansen_incidence(p, Event::cause1);
    std::vector<double> v(F.values().size());
    std::transform(F.values().begin(), F.values().end(), v.begin(), [](double f) { return 1.0 - f; });
    return StepFunction(F.jump_times(), std::move(v), 1.0);
}

inline StepFunction aalen_johansen_cause1(const CountingProcesses& cp, CellIndex cell) {
    return aalen_johansen_cause1(cp.cell(cell));
}

}  // namespace ivcr
