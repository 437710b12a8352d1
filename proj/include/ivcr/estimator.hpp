#pragma once
// Instrumental quantile estimator for the cause-1 structural quantile
// functions phi^1_z. For each grid point u the estimate minimises
//   || ( sum_l S^1(theta_l, z_l | w_k) - (1 - u) )_k ||^2_{V(u)}
// over the box prod_l [0, y^1_{z_l}), and results are reported only below
// the estimated identification frontier u_Y.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "data_model.hpp"
#include "optimize.hpp"
#include "smoothing.hpp"
#include "surface.hpp"
#include "survival.hpp"

namespace ivcr {

class QuantileGrid {
public:
    explicit QuantileGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw std::invalid_argument("QuantileGrid: at least two points required");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!(points_[i] > 0.0 && points_[i] <= 1.0))
                throw std::invalid_argument("QuantileGrid: points must lie in (0, 1]");
            if (i > 0 && !(points_[i] > points_[i - 1]))
                throw std::invalid_argument("QuantileGrid: points must be strictly increasing");
        }
    }

    /// {1/M, 2/M, ..., 1}.
    static QuantileGrid uniform(std::size_t M) {
        if (M < 2) throw std::invalid_argument("QuantileGrid: M >= 2 required");
        std::vector<double> p(M);
        for (std::size_t m = 0; m < M; ++m) p[m] = static_cast<double>(m + 1) / static_cast<double>(M);
        return QuantileGrid(std::move(p));
    }

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t m) const { return points_[m]; }

private:
    std::vector<double> points_;
};

/// Symmetric positive-definite K x K weighting matrix as a function of u.
class WeightingPolicy {
public:
    static WeightingPolicy identity() { return WeightingPolicy(); }

    static WeightingPolicy constant(Eigen::MatrixXd V) {
        check(V);
        WeightingPolicy p;
        p.identity_ = false;
        p.fn_ = [V = std::move(V)](double) { return V; };
        return p;
    }

    /// One matrix per grid point, matched by exact u value.
    static WeightingPolicy per_point(const QuantileGrid& grid, std::vector<Eigen::MatrixXd> mats) {
        if (mats.size() != grid.size()) throw std::invalid_argument("WeightingPolicy: one matrix per grid point required");
        for (const auto& m : mats) check(m);
        WeightingPolicy p;
        p.identity_ = false;
        p.fn_ = [pts = grid.points(), mats = std::move(mats)](double u) {
            auto it = std::lower_bound(pts.begin(), pts.end(), u);
            if (it == pts.end() || *it != u) throw std::out_of_range("WeightingPolicy: u not on the grid");
            return mats[static_cast<std::size_t>(it - pts.begin())];
        };
        return p;
    }

    bool is_identity() const noexcept { return identity_; }
    Eigen::MatrixXd at(double u, std::size_t K) const {
        if (identity_) return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
        return fn_(u);
    }

    static void check(const Eigen::MatrixXd& V) {
        if (V.rows() != V.cols() || V.rows() == 0) throw std::invalid_argument("weighting matrix must be square");
        if (!V.isApprox(V.transpose(), 1e-12)) throw std::invalid_argument("weighting matrix must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(V);
        if (llt.info() != Eigen::Success) throw std::invalid_argument("weighting matrix must be positive definite");
    }

private:
    bool identity_ = true;
    std::function<Eigen::MatrixXd(double)> fn_;
};

/// Surface-like types expose value(t, z, w), num_treatments() and num_instruments().
template <class Surface>
std::vector<double> residual_vector(std::span<const double> theta, double u, const Surface& surface) {
    const std::size_t L = surface.num_treatments(), K = surface.num_instruments();
    if (theta.size() != L) throw std::invalid_argument("residual_vector: theta has the wrong dimension");
    std::vector<double> r(K, -(1.0 - u));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < L; ++l) r[k] += surface.value(theta[l], l, k);
    return r;
}

/// r^T V r.
inline double weighted_norm2(std::span<const double> r, const Eigen::MatrixXd* V) {
    if (V == nullptr) {
        double s = 0.0;
        for (double x : r) s += x * x;
        return s;
    }
    const Eigen::Map<const Eigen::VectorXd> v(r.data(), static_cast<Eigen::Index>(r.size()));
    return v.dot(*V * v);
}

template <class Surface>
double objective(std::span<const double> theta, double u, const Surface& surface, const WeightingPolicy& V) {
    const auto r = residual_vector(theta, u, surface);
    if (V.is_identity()) return weighted_norm2(r, nullptr);
    const auto M = V.at(u, surface.num_instruments());
    return weighted_norm2(r, &M);
}

/// yhat^1_z = max{ y_i : z_i = z, event_i = 1 } for each treatment level.
inline std::vector<double> estimate_y1(const Dataset& data) {
    std::vector<double> y(data.num_treatments(), -1.0);
    for (const auto& r : data.records())
        if (r.event == Event::cause1) y[r.z] = std::max(y[r.z], r.y);
    for (std::size_t z = 0; z < y.size(); ++z)
        if (y[z] < 0.0)
            throw DataError("treatment level '" + data.registry().treatment_levels[z] +
                            "' has no uncensored cause-1 failures; its frontier is undefined");
    return y;
}

/// Cushion Delta for the frontier rule: normal-reference Epanechnikov
/// bandwidth of the uncensored cause-1 times at the given level.
inline double default_delta(const Dataset& data, std::size_t level) {
    std::vector<double> sample;
    for (const auto& r : data.records())
        if (r.z == level && r.event == Event::cause1) sample.push_back(r.y);
    try {
        return default_bandwidth(sample);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("default_delta for treatment level '" + data.registry().treatment_levels.at(level) +
                                    "': " + e.what() + " (use an explicit delta)");
    }
}

struct FrontierEstimates {
    std::vector<double> y_hat;
    std::vector<double> delta;
    double u_hat = 1.0;
    std::size_t m_hat = 0;   // 0-based grid index realising u_hat
    bool triggered = false;  // false: no grid point met the rule, u_hat = u_M
};

struct FitConfig {
    QuantileGrid grid = QuantileGrid::uniform(100);
    WeightingPolicy weighting = WeightingPolicy::identity();
    SurfaceConfig surface;
    std::vector<std::optional<double>> delta;          // per-level override
    std::optional<std::vector<double>> y_hat_override; // inject known frontiers
    SolverConfig solver;
    double clamp = 1e-9;             // box is [0, y_hat (1 - clamp)]
    bool stop_at_frontier = false;   // skip grid points after m_hat
};

struct QuantileCurveFit {
    QuantileGrid grid = QuantileGrid::uniform(2);
    std::vector<std::vector<double>> theta;  // [m][l]
    std::vector<double> objective;
    std::vector<bool> converged;
    std::vector<bool> computed;
    std::vector<bool> reported;
    FrontierEstimates frontiers;
    std::vector<std::string> warnings;
    std::size_t evaluations = 0;

    std::size_t num_levels() const { return frontiers.y_hat.size(); }
    double contrast(std::size_t m, std::size_t a, std::size_t b) const { return theta[m][a] - theta[m][b]; }
};

/// Solves the grid sweep on a prepared surface.
template <class Surface>
QuantileCurveFit fit_curve(const Surface& surface, const std::vector<double>& y_hat, const std::vector<double>& delta,
                           const FitConfig& cfg) {
    const std::size_t L = surface.num_treatments(), K = surface.num_instruments();
    const std::size_t M = cfg.grid.size();
    if (y_hat.size() != L || delta.size() != L) throw std::invalid_argument("fit_curve: frontier dimension mismatch");
    for (double d : delta)
        if (!(d > 0.0)) throw std::invalid_argument("fit_curve: Delta must be positive");

    QuantileCurveFit fit;
    fit.grid = cfg.grid;
    fit.theta.assign(M, std::vector<double>(L, std::numeric_limits<double>::quiet_NaN()));
    fit.objective.assign(M, std::numeric_limits<double>::quiet_NaN());
    fit.converged.assign(M, false);
    fit.computed.assign(M, false);
    fit.reported.assign(M, false);
    fit.frontiers.y_hat = y_hat;
    fit.frontiers.delta = delta;

    std::vector<double> lo(L, 0.0), hi(L);
    for (std::size_t l = 0; l < L; ++l) hi[l] = y_hat[l] * (1.0 - cfg.clamp);
    const auto lattice = lattice_starts(lo, hi);

    std::vector<double> r(K);
    std::optional<std::vector<double>> warm;
    std::optional<std::size_t> trigger;
    for (std::size_t m = 0; m < M; ++m) {
        const double u = cfg.grid[m];
        std::optional<Eigen::MatrixXd> V;
        if (!cfg.weighting.is_identity()) V = cfg.weighting.at(u, K);
        auto f = [&](const std::vector<double>& th) {
            for (std::size_t k = 0; k < K; ++k) {
                double s = -(1.0 - u);
                for (std::size_t l = 0; l < L; ++l) s += surface.value(th[l], l, k);
                r[k] = s;
            }
            return weighted_norm2(r, V ? &*V : nullptr);
        };
        std::vector<std::vector<double>> starts;
        starts.reserve(lattice.size() + 1);
        if (warm) starts.push_back(*warm);
        starts.insert(starts.end(), lattice.begin(), lattice.end());

        const auto res = minimize_multistart(f, starts, lo, hi, cfg.solver);
        fit.evaluations += res.evaluations;
        fit.theta[m] = res.x;
        fit.objective[m] = res.value;
        fit.converged[m] = res.converged;
        fit.computed[m] = true;
        if (!res.converged)
            fit.warnings.push_back("solver did not converge at u = " + detail::format_double(u));
        warm = res.x;

        if (!trigger) {
            for (std::size_t l = 0; l < L; ++l)
                if (res.x[l] >= y_hat[l] - delta[l]) {
                    trigger = m;
                    break;
                }
            if (trigger && cfg.stop_at_frontier) break;
        }
    }

    auto& fr = fit.frontiers;
    if (trigger) {
        fr.triggered = true;
        fr.m_hat = *trigger;
        fr.u_hat = cfg.grid[*trigger];
        for (std::size_t m = 0; m < M; ++m) fit.reported[m] = fit.computed[m] && fit.converged[m] && cfg.grid[m] < fr.u_hat;
    } else {
        fr.triggered = false;
        fr.m_hat = M - 1;
        fr.u_hat = cfg.grid[M - 1];
        fit.warnings.push_back("no grid point reached the frontier rule; u_hat set to the last grid point and all points reported");
        for (std::size_t m = 0; m < M; ++m) fit.reported[m] = fit.computed[m] && fit.converged[m];
    }
    return fit;
}

inline std::vector<double> resolve_delta(const Dataset& data, const FitConfig& cfg) {
    std::vector<double> delta(data.num_treatments());
    for (std::size_t l = 0; l < delta.size(); ++l)
        delta[l] = (l < cfg.delta.size() && cfg.delta[l]) ? *cfg.delta[l] : default_delta(data, l);
    return delta;
}

inline QuantileCurveFit fit_curve(const Dataset& data, const FitConfig& cfg = {}) {
    const auto surface = assemble_surface(data, cfg.surface);
    const auto y_hat = cfg.y_hat_override ? *cfg.y_hat_override : estimate_y1(data);
    return fit_curve(surface, y_hat, resolve_delta(data, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Naive comparator: conditions on Z only.
// ---------------------------------------------------------------------------

/// Generalised u-quantile inf{t : F(t) >= u} of a right-continuous
/// incidence step function; +inf when u exceeds the attained incidence.
inline double incidence_quantile(const StepFunction& F, double u) {
    if (u <= 0.0) return 0.0;
    constexpr double slack = 1e-12;
    const auto& v = F.values();
    auto it = std::find_if(v.begin(), v.end(), [&](double f) { return f >= u - slack; });
    if (it == v.end()) return std::numeric_limits<double>::infinity();
    return F.jump_times()[static_cast<std::size_t>(it - v.begin())];
}

struct NaiveCurve {
    QuantileGrid grid = QuantileGrid::uniform(2);
    std::vector<std::vector<double>> theta;  // [m][l], +inf where not attained
};

inline NaiveCurve naive_curve(const Dataset& data, const QuantileGrid& grid) {
    const std::size_t L = data.num_treatments();
    std::vector<std::vector<ObservationRecord>> by_level(L);
    for (const auto& r : data.records()) by_level[r.z].push_back(r);
    NaiveCurve out{grid, std::vector<std::vector<double>>(grid.size(), std::vector<double>(L))};
    for (std::size_t l = 0; l < L; ++l) {
        const auto F = aalen_johansen_incidence(build_processes(by_level[l]), Event::cause1);
        for (std::size_t m = 0; m < grid.size(); ++m) out.theta[m][l] = incidence_quantile(F, grid[m]);
    }
    return out;
}

}  // namespace ivcr
