#pragma once
// Box-constrained Nelder-Mead with restarts and a multi-start driver.
// Points leaving the box are projected back onto it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ivcr {

struct SolverConfig {
    double ftol = 1e-15;          // objective improvement per restart cycle counted as converged
    double xtol = 1e-10;          // simplex extent, relative to the box width
    std::size_t max_evals = 4000; // per Nelder-Mead run
    std::size_t max_restarts = 8;
    double initial_step = 0.05;   // relative to the box width
    double zero_objective = 1e-18; // an objective this small ends the multi-start early
};

struct SolverResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
};

namespace detail {

inline void project(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

template <class F>
SolverResult nelder_mead_once(F&& f, std::vector<double> x0, const std::vector<double>& lo,
                              const std::vector<double>& hi, const SolverConfig& cfg) {
    const std::size_t d = x0.size();
    SolverResult res;
    project(x0, lo, hi);

    std::vector<std::vector<double>> simplex(d + 1, x0);
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i < d; ++i) {
        const double width = hi[i] - lo[i];
        double step = cfg.initial_step * (width > 0 ? width : 1.0);
        if (x0[i] + step > hi[i]) step = -step;
        simplex[i + 1][i] = std::clamp(x0[i] + step, lo[i], hi[i]);
    }
    for (std::size_t i = 0; i <= d; ++i) fv[i] = f(simplex[i]);
    res.evaluations = d + 1;

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    auto eval = [&](std::vector<double>& x) {
        project(x, lo, hi);
        ++res.evaluations;
        return f(x);
    };

    while (res.evaluations < cfg.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

        double extent = 0.0;
        for (std::size_t i = 0; i <= d; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                const double width = hi[k] - lo[k] > 0 ? hi[k] - lo[k] : 1.0;
                extent = std::max(extent, std::abs(simplex[i][k] - simplex[best][k]) / width);
            }
        if (extent <= cfg.xtol || fv[worst] - fv[best] <= 0.1 * cfg.ftol) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i)
            if (i != worst)
                for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k] / static_cast<double>(d);

        for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        for (std::size_t k = 0; k < d; ++k)
            xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k])
                            : centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= d; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < d; ++k)
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            fv[i] = eval(simplex[i]);
        }
    }
    const auto it = std::min_element(fv.begin(), fv.end());
    res.x = simplex[static_cast<std::size_t>(it - fv.begin())];
    res.value = *it;
    return res;
}

}  // namespace detail

/// Restarted Nelder-Mead: each cycle restarts from the incumbent with a fresh
/// simplex; converged once a full cycle improves the objective by less than ftol.
template <class F>
SolverResult minimize_box(F&& f, std::vector<double> x0, const std::vector<double>& lo, const std::vector<double>& hi,
                          const SolverConfig& cfg = {}) {
    if (x0.size() != lo.size() || lo.size() != hi.size() || x0.empty())
        throw std::invalid_argument("minimize_box: dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i])) throw std::invalid_argument("minimize_box: empty box");

    SolverResult best = detail::nelder_mead_once(f, std::move(x0), lo, hi, cfg);
    std::size_t total = best.evaluations;
    bool cycle_converged = best.value <= cfg.zero_objective;
    for (std::size_t r = 0; r < cfg.max_restarts && !cycle_converged; ++r) {
        auto next = detail::nelder_mead_once(f, best.x, lo, hi, cfg);
        total += next.evaluations;
        const double improvement = best.value - next.value;
        if (next.value < best.value) best = std::move(next);
        cycle_converged = improvement < cfg.ftol || best.value <= cfg.zero_objective;
    }
    best.evaluations = total;
    best.converged = cycle_converged;
    return best;
}

/// Runs minimize_box from each start in order and keeps the first best result.
/// Stops early once a start reaches cfg.zero_objective (objectives are >= 0).
template <class F>
SolverResult minimize_multistart(F&& f, const std::vector<std::vector<double>>& starts, const std::vector<double>& lo,
                                 const std::vector<double>& hi, const SolverConfig& cfg = {}) {
    if (starts.empty()) throw std::invalid_argument("minimize_multistart: no starts");
    SolverResult best;
    std::size_t total = 0;
    for (const auto& s : starts) {
        auto r = minimize_box(f, s, lo, hi, cfg);
        total += r.evaluations;
        if (r.value < best.value) best = std::move(r);
        if (best.value <= cfg.zero_objective) break;
    }
    best.evaluations = total;
    return best;
}

/// Centre/corner lattice with 3 points per coordinate: {lo, mid, hi}^d.
inline std::vector<std::vector<double>> lattice_starts(const std::vector<double>& lo, const std::vector<double>& hi) {
    const std::size_t d = lo.size();
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) count *= 3;
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::vector<double> p(d);
        std::size_t rem = idx;
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t digit = rem % 3;
            rem /= 3;
            p[i] = digit == 0 ? lo[i] : digit == 1 ? 0.5 * (lo[i] + hi[i]) : hi[i];
        }
        out.push_back(std::move(p));
    }
    // centre first
    std::stable_partition(out.begin(), out.end(), [&](const std::vector<double>& p) {
        for (std::size_t i = 0; i < d; ++i)
            if (p[i] != 0.5 * (lo[i] + hi[i])) return false;
        return true;
    });
    return out;
}

}  // namespace ivcr
