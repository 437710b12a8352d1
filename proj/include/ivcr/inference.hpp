#pragma once
// Pairs bootstrap with percentile intervals for quantile contrasts, and a
// coverage study on the simulation designs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "estimator.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulation.hpp"

namespace ivcr {

struct BootstrapConfig {
    std::size_t draws = 200;
    std::uint64_t seed = 1;
    double level = 0.95;
    double report_threshold = 0.5;  // share of replicates that must report a point
    std::size_t threads = 1;

    void validate() const {
        if (draws < 2) throw std::invalid_argument("bootstrap: at least two draws required");
        if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must lie in (0, 1)");
        if (!(report_threshold >= 0.0 && report_threshold <= 1.0))
            throw std::invalid_argument("bootstrap: report threshold must lie in [0, 1]");
    }
};

/// theta_a - theta_b.
struct Contrast {
    std::size_t a = 1, b = 0;
};

inline std::vector<Contrast> default_contrasts(std::size_t L) {
    std::vector<Contrast> c;
    for (std::size_t l = 1; l < L; ++l) c.push_back({l, 0});
    return c;
}

/// Replicate contrast values, NaN where the replicate does not report the point.
struct BootstrapDraws {
    QuantileGrid grid = QuantileGrid::uniform(2);
    std::vector<Contrast> contrasts;
    std::vector<std::vector<std::vector<double>>> values;  // [c][m][b]
    std::size_t failed = 0;  // replicates whose resample could not be fitted
};

struct BandRow {
    double lower = std::numeric_limits<double>::quiet_NaN();
    double point = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_reported = 0;
    bool valid = false;
};

struct ConfidenceBand {
    QuantileGrid grid = QuantileGrid::uniform(2);
    std::vector<Contrast> contrasts;
    double level = 0.95;
    std::size_t draws = 0;
    std::vector<std::vector<BandRow>> rows;  // [c][m]
};

/// Order statistics at ranks ceil(alpha/2 B) and ceil((1 - alpha/2) B).
inline std::pair<double, double> percentile_interval(std::vector<double> values, double level) {
    if (values.empty()) throw std::invalid_argument("percentile_interval: no values");
    std::sort(values.begin(), values.end());
    const double B = static_cast<double>(values.size());
    const double alpha = 1.0 - level;
    auto rank = [&](double q) {
        const double r = std::ceil(q * B - 1e-9);
        return static_cast<std::size_t>(std::clamp(r, 1.0, B)) - 1;
    };
    return {values[rank(alpha / 2.0)], values[rank(1.0 - alpha / 2.0)]};
}

inline Dataset resample(const Dataset& data, std::uint64_t seed, std::uint64_t replicate) {
    CounterRng rng(seed, replicate, StreamRole::resample);
    const auto& src = data.records();
    std::vector<ObservationRecord> recs(src.size());
    for (auto& r : recs) r = src[rng.below(src.size())];
    return data.with_records(std::move(recs));
}

inline BootstrapDraws bootstrap_draws(const Dataset& data, const FitConfig& cfg, const BootstrapConfig& boot,
                                      const std::vector<Contrast>& contrasts) {
    boot.validate();
    const std::size_t M = cfg.grid.size(), B = boot.draws;
    BootstrapDraws out;
    out.grid = cfg.grid;
    out.contrasts = contrasts;
    out.values.assign(contrasts.size(),
                      std::vector<std::vector<double>>(M, std::vector<double>(B, std::numeric_limits<double>::quiet_NaN())));
    std::vector<char> failed(B, 0);

    FitConfig rcfg = cfg;
    rcfg.stop_at_frontier = true;
    parallel_for(B, boot.threads, [&](std::size_t b) {
        QuantileCurveFit fit;
        try {
            fit = fit_curve(resample(data, boot.seed, b), rcfg);
        } catch (const std::exception&) {
            failed[b] = 1;
            return;
        }
        for (std::size_t c = 0; c < contrasts.size(); ++c)
            for (std::size_t m = 0; m < M; ++m)
                if (fit.reported[m]) out.values[c][m][b] = fit.contrast(m, contrasts[c].a, contrasts[c].b);
    });
    for (char f : failed) out.failed += f != 0;
    return out;
}

inline ConfidenceBand band_from_draws(const BootstrapDraws& draws, const QuantileCurveFit& point, double level,
                                      double report_threshold = 0.5) {
    ConfidenceBand band;
    band.grid = draws.grid;
    band.contrasts = draws.contrasts;
    band.level = level;
    const std::size_t M = draws.grid.size();
    band.draws = draws.values.empty() || draws.values[0].empty() ? 0 : draws.values[0][0].size();
    band.rows.assign(draws.contrasts.size(), std::vector<BandRow>(M));
    for (std::size_t c = 0; c < draws.contrasts.size(); ++c) {
        for (std::size_t m = 0; m < M; ++m) {
            auto& row = band.rows[c][m];
            if (point.reported[m]) row.point = point.contrast(m, draws.contrasts[c].a, draws.contrasts[c].b);
            std::vector<double> v;
            for (double x : draws.values[c][m])
                if (!std::isnan(x)) v.push_back(x);
            row.n_reported = v.size();
            if (v.empty() || static_cast<double>(v.size()) < report_threshold * static_cast<double>(band.draws)) continue;
            std::tie(row.lower, row.upper) = percentile_interval(std::move(v), level);
            row.valid = point.reported[m];
        }
    }
    return band;
}

inline ConfidenceBand bootstrap_band(const Dataset& data, const FitConfig& cfg, const BootstrapConfig& boot,
                                     const QuantileCurveFit& point, std::vector<Contrast> contrasts = {}) {
    if (contrasts.empty()) contrasts = default_contrasts(data.num_treatments());
    for (const auto& c : contrasts)
        if (c.a >= data.num_treatments() || c.b >= data.num_treatments())
            throw std::invalid_argument("bootstrap: contrast level out of range");
    return band_from_draws(bootstrap_draws(data, cfg, boot, contrasts), point, boot.level, boot.report_threshold);
}

inline ConfidenceBand bootstrap_band(const Dataset& data, const FitConfig& cfg, const BootstrapConfig& boot) {
    return bootstrap_band(data, cfg, boot, fit_curve(data, cfg));
}

struct CoverageRow {
    double u = 0.0;
    double truth = 0.0;
    std::size_t covered = 0;
    std::size_t valid = 0;  // replicates with a valid band at u
    double rate() const { return valid == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(covered) / static_cast<double>(valid); }
};

struct CoverageResult {
    std::size_t reps = 0;
    std::vector<CoverageRow> rows;  // one per grid point
};

/// Coverage of the contrast theta_1 - theta_0 against the analytic QTE.
/// `band_fn`, when set, replaces the bootstrap (harness self-tests).
struct CoverageConfig {
    int design = 2;
    std::size_t n = 10000;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::function<ConfidenceBand(const Dataset&, const QuantileCurveFit&, std::size_t rep)> band_fn;
};

inline CoverageResult coverage_from_bands(const std::vector<ConfidenceBand>& bands, int design) {
    const auto truth = ground_truth(design);
    if (bands.empty()) throw std::invalid_argument("coverage: no replicates");
    CoverageResult res;
    res.reps = bands.size();
    const auto& grid = bands.front().grid;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        CoverageRow row;
        row.u = grid[m];
        row.truth = truth.qte(grid[m]);
        for (const auto& b : bands) {
            const auto& r = b.rows.at(0).at(m);
            if (!r.valid) continue;
            ++row.valid;
            if (r.lower <= row.truth && row.truth <= r.upper) ++row.covered;
        }
        res.rows.push_back(row);
    }
    return res;
}

inline CoverageResult coverage_study(const CoverageConfig& cc, const FitConfig& cfg, const BootstrapConfig& boot) {
    if (cc.reps == 0) throw std::invalid_argument("coverage_study: reps must be positive");
    boot.validate();
    std::vector<ConfidenceBand> bands(cc.reps);
    BootstrapConfig inner = boot;
    inner.threads = 1;
    parallel_for(cc.reps, cc.threads, [&](std::size_t r) {
        const auto sample = generate({cc.design, cc.n, cc.seed, r});
        const auto fit = fit_curve(sample.data, cfg);
        if (cc.band_fn) {
            bands[r] = cc.band_fn(sample.data, fit, r);
            return;
        }
        BootstrapConfig b = inner;
        b.seed = CounterRng(cc.seed, r, StreamRole::bootstrap_seed).at(0);
        bands[r] = bootstrap_band(sample.data, cfg, b, fit, {Contrast{1, 0}});
    });
    return coverage_from_bands(bands, cc.design);
}

}  // namespace ivcr
