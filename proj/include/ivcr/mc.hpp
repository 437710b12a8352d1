#pragma once
// Monte Carlo replication of the simulation designs.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "data_model.hpp"
#include "estimator.hpp"
#include "parallel.hpp"
#include "simulation.hpp"

namespace ivcr {

struct McConfig {
    int design = 1;
    std::size_t n = 10000;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool naive = true;
    /// Called once per replicate, possibly from several threads at once.
    std::function<void(std::size_t rep, const Dataset&, const QuantileCurveFit&)> on_replicate;
};

struct McReplicate {
    double u_hat = 0.0;
    std::size_t m_hat = 0;
    std::vector<double> y_hat;
    std::vector<double> qte;        // theta_1 - theta_0, NaN where not reported
    std::vector<double> qte_computed;  // same, before truncation at u_hat
    std::vector<double> naive_qte;  // NaN where not attained
    std::vector<std::vector<double>> theta;  // [m][l], NaN where not reported
};

struct McRow {
    double u = 0.0;
    double truth = 0.0;
    std::vector<double> mean_theta;
    double mean_qte = std::numeric_limits<double>::quiet_NaN();
    double mean_abs_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_reported = 0;
    /// Over every replicate that computed the point, reported or not.
    double computed_mean_abs_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_computed = 0;
    double naive_mean_qte = std::numeric_limits<double>::quiet_NaN();
    std::size_t naive_n = 0;
};

struct McResult {
    McConfig config;
    QuantileGrid grid = QuantileGrid::uniform(2);
    std::vector<McReplicate> replicates;
    std::vector<McRow> rows;

    double mean_u_hat() const {
        double s = 0.0;
        for (const auto& r : replicates) s += r.u_hat;
        return s / static_cast<double>(replicates.size());
    }
};

inline McResult mc_study(const McConfig& mc, const FitConfig& cfg = {}) {
    if (mc.reps == 0) throw std::invalid_argument("mc_study: reps must be positive");
    check_design(mc.design);
    const auto truth = ground_truth(mc.design);
    const std::size_t M = cfg.grid.size();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    McResult res;
    res.config = mc;
    res.grid = cfg.grid;
    res.replicates.resize(mc.reps);
    parallel_for(mc.reps, mc.threads, [&](std::size_t r) {
        const auto sample = generate({mc.design, mc.n, mc.seed, r});
        const auto fit = fit_curve(sample.data, cfg);
        auto& rep = res.replicates[r];
        rep.u_hat = fit.frontiers.u_hat;
        rep.m_hat = fit.frontiers.m_hat;
        rep.y_hat = fit.frontiers.y_hat;
        rep.qte.assign(M, nan);
        rep.qte_computed.assign(M, nan);
        rep.theta.assign(M, std::vector<double>(fit.num_levels(), nan));
        for (std::size_t m = 0; m < M; ++m) {
            if (fit.computed[m]) rep.qte_computed[m] = fit.contrast(m, 1, 0);
            if (fit.reported[m]) {
                rep.qte[m] = fit.contrast(m, 1, 0);
                rep.theta[m] = fit.theta[m];
            }
        }
        rep.naive_qte.assign(M, nan);
        if (mc.naive) {
            const auto nv = naive_curve(sample.data, cfg.grid);
            for (std::size_t m = 0; m < M; ++m) {
                const double d = nv.theta[m][1] - nv.theta[m][0];
                if (std::isfinite(d)) rep.naive_qte[m] = d;
            }
        }
        if (mc.on_replicate) mc.on_replicate(r, sample.data, fit);
    });

    const std::size_t L = res.replicates.front().y_hat.size();
    for (std::size_t m = 0; m < M; ++m) {
        McRow row;
        row.u = cfg.grid[m];
        row.truth = truth.qte(row.u);
        row.mean_theta.assign(L, 0.0);
        double sq = 0.0, sa = 0.0, sn = 0.0, sc = 0.0;
        for (const auto& rep : res.replicates) {
            if (!std::isnan(rep.qte_computed[m])) {
                ++row.n_computed;
                sc += std::abs(rep.qte_computed[m] - row.truth);
            }
            if (!std::isnan(rep.qte[m])) {
                ++row.n_reported;
                sq += rep.qte[m];
                sa += std::abs(rep.qte[m] - row.truth);
                for (std::size_t l = 0; l < L; ++l) row.mean_theta[l] += rep.theta[m][l];
            }
            if (!std::isnan(rep.naive_qte[m])) {
                ++row.naive_n;
                sn += rep.naive_qte[m];
            }
        }
        if (row.n_reported > 0) {
            const double k = static_cast<double>(row.n_reported);
            row.mean_qte = sq / k;
            row.mean_abs_error = std::isfinite(row.truth) ? sa / k : nan;
            for (double& t : row.mean_theta) t /= k;
        } else {
            for (double& t : row.mean_theta) t = nan;
        }
        if (row.n_computed > 0 && std::isfinite(row.truth))
            row.computed_mean_abs_error = sc / static_cast<double>(row.n_computed);
        if (row.naive_n > 0) row.naive_mean_qte = sn / static_cast<double>(row.naive_n);
        res.rows.push_back(std::move(row));
    }
    return res;
}

/// Counts of u_hat per grid point.
inline std::vector<std::size_t> u_hat_histogram(const McResult& res) {
    std::vector<std::size_t> counts(res.grid.size(), 0);
    for (const auto& r : res.replicates) ++counts[r.m_hat];
    return counts;
}

}  // namespace ivcr
