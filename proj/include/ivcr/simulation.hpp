#pragma once
// Structural data-generating processes for the two censoring designs:
//   U ~ U[0,1], W ~ Bernoulli(2/3), eps ~ N(0,1),
//   Z = 1{4U + eps - 1 >= 0} * W,  E = 1{U > p_Z} + 1 with p = (1/2, 3/4),
//   T = phi_1(Z, U) for E = 1, phi_2(Z, U) for E = 2,
//   C ~ U[1/3, 2/3] (design 1) or U[1/3, 3/2] (design 2).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "data_model.hpp"
#include "rng.hpp"

namespace ivcr {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct DgpSpec {
    int design = 1;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    std::uint64_t replicate = 0;
};

/// Unobserved quantities, kept for tests only.
struct LatentTrace {
    std::vector<double> u, t, c;
    std::vector<int> e;
};

struct SimulatedSample {
    Dataset data;
    LatentTrace latent;
};

struct GroundTruth {
    int design = 1;
    double p[2] = {0.5, 0.75};
    double t1[2] = {1.0, 0.75};
    double censor_lo = 1.0 / 3.0;
    double censor_hi = 2.0 / 3.0;
    double u_E = 0.5;
    double u_C = 1.0 / 3.0;
    double u_Y = 1.0 / 3.0;

    /// y^1_z = t^1_z ^ c_z.
    double y1(std::size_t z) const { return std::min(t1[z], censor_hi); }
    double qte(double u) const;
};

inline void check_design(int design) {
    if (design != 1 && design != 2) throw std::invalid_argument("design must be 1 or 2");
}

/// phi^1_z(u): 2u for z = 0 up to 1/2, u for z = 1 up to 3/4, +inf beyond.
inline double true_phi(int design, std::size_t z, double u) {
    check_design(design);
    if (z == 0) return u <= 0.5 ? 2.0 * u : kInfinity;
    if (z == 1) return u <= 0.75 ? u : kInfinity;
    throw std::invalid_argument("true_phi: treatment level must be 0 or 1");
}

inline double GroundTruth::qte(double u) const { return true_phi(design, 1, u) - true_phi(design, 0, u); }

inline GroundTruth ground_truth(int design) {
    check_design(design);
    GroundTruth g;
    g.design = design;
    if (design == 2) {
        g.censor_hi = 1.5;
        g.u_C = 1.0;
    }
    g.u_Y = std::min(g.u_E, g.u_C);
    return g;
}

inline LevelRegistry simulation_registry() {
    LevelRegistry reg;
    reg.treatment_levels = {"0", "1"};
    reg.instrument_levels = {"0", "1"};
    reg.unreachable = {CellIndex{1, 0}};
    return reg;
}

inline SimulatedSample generate(const DgpSpec& spec) {
    check_design(spec.design);
    if (spec.n < 1) throw std::invalid_argument("generate: n must be at least 1");
    const auto truth = ground_truth(spec.design);
    const CounterRng rank(spec.seed, spec.replicate, StreamRole::latent_rank);
    const CounterRng inst(spec.seed, spec.replicate, StreamRole::instrument);
    const CounterRng noise(spec.seed, spec.replicate, StreamRole::selection_noise);
    const CounterRng cens(spec.seed, spec.replicate, StreamRole::censoring);

    SimulatedSample out;
    auto& lat = out.latent;
    lat.u.resize(spec.n);
    lat.t.resize(spec.n);
    lat.c.resize(spec.n);
    lat.e.resize(spec.n);
    std::vector<ObservationRecord> records(spec.n);

    for (std::size_t i = 0; i < spec.n; ++i) {
        const double u = rank.uniform_at(i);
        const std::size_t w = inst.uniform_at(i) < 2.0 / 3.0 ? 1 : 0;
        const std::size_t z = (w == 1 && 4.0 * u + noise.normal_at(i) - 1.0 >= 0.0) ? 1 : 0;
        // U == p_Z has probability zero; it goes to cause 2.
        const int e = u < truth.p[z] ? 1 : 2;
        double t = 0.0;
        if (e == 1) t = z == 0 ? 2.0 * u : u;
        else t = z == 0 ? u - truth.p[0] : 2.0 * (u - truth.p[1]);
        const double c = truth.censor_lo + (truth.censor_hi - truth.censor_lo) * cens.uniform_at(i);

        lat.u[i] = u;
        lat.t[i] = t;
        lat.c[i] = c;
        lat.e[i] = e;
        auto& r = records[i];
        r.y = std::min(t, c);
        r.event = t <= c ? static_cast<Event>(e) : Event::censored;
        r.z = z;
        r.w = w;
    }
    out.data = Dataset::create(std::move(records), simulation_registry());
    return out;
}

}  // namespace ivcr
