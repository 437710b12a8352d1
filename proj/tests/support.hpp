#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <ivcr/rng.hpp>
#include <ivcr/simulation.hpp>

namespace ivcr::oracle {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); }

/// Closed-form S^1(t, z | w) = P(T^1 >= t, Z = z | W = w) for the simulation
/// DGP (censoring does not enter).
class PopulationSurface {
public:
    double value(double t, std::size_t z, std::size_t w) const {
        t = std::max(t, 0.0);
        if (w == 0) {
            if (z == 1) return 0.0;
            return 1.0 - std::min(t / 2.0, 0.5);
        }
        if (z == 0) {
            const double a = std::min(t / 2.0, 0.5);
            return (1.0 - a) - (treated_mass(1.0) - treated_mass(a));
        }
        const double a = std::min(t, 0.75);
        return treated_mass(1.0) - treated_mass(a);
    }
    std::size_t num_treatments() const { return 2; }
    std::size_t num_instruments() const { return 2; }
    bool is_structural_zero(std::size_t z, std::size_t w) const { return z == 1 && w == 0; }

private:
    // integral_0^u Phi(4s - 1) ds
    static double treated_mass(double u) {
        auto prim = [](double s) {
            const double x = 4.0 * s - 1.0;
            return (x * norm_cdf(x) + norm_pdf(x)) / 4.0;
        };
        return prim(u) - prim(0.0);
    }
};

/// Random surfaces S(t, l | k) = p_{lk} (1 - a_{lk} G_{lk}(min(t, y_l) / y_l)),
/// G increasing from 0 to 1; sum_l p_{lk} = 1.
class SyntheticSurface {
public:
    SyntheticSurface(std::size_t L, std::size_t K, std::uint64_t seed) : L_(L), K_(K) {
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        y_.resize(L);
        for (auto& y : y_) y = 0.5 + unif(gen);
        p_.assign(L * K, 0.0);
        a_.assign(L * K, 0.0);
        b_.assign(L * K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t l = 0; l < L; ++l) s += (p_[l * K + k] = 0.2 + unif(gen));
            for (std::size_t l = 0; l < L; ++l) p_[l * K + k] /= s;
        }
        for (std::size_t i = 0; i < L * K; ++i) {
            a_[i] = 0.3 + 0.7 * unif(gen);
            b_[i] = 0.5 + 2.0 * unif(gen);
        }
    }

    double value(double t, std::size_t l, std::size_t k) const {
        const double x = std::clamp(t, 0.0, y_[l]) / y_[l];
        const std::size_t i = l * K_ + k;
        return p_[i] * (1.0 - a_[i] * std::pow(x, b_[i]));
    }
    std::size_t num_treatments() const { return L_; }
    std::size_t num_instruments() const { return K_; }
    bool is_structural_zero(std::size_t, std::size_t) const { return false; }
    const std::vector<double>& frontier() const { return y_; }

private:
    std::size_t L_, K_;
    std::vector<double> y_, p_, a_, b_;
};

/// Asymptotic Kolmogorov p-value for statistic d at sample size n.
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

inline double ks_uniform_statistic(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = std::clamp(x[i], 0.0, 1.0);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Monte Carlo estimate of P(T^1 >= t, Z = z | W = w) with its standard error.
struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

inline McEstimate mc_surface_sum(int design, std::size_t draws, std::uint64_t seed, std::size_t w,
                                 const std::function<bool(std::size_t z, double t1)>& event) {
    const auto sample = generate({design, draws, seed, 0});
    std::size_t n = 0, hits = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto& r = sample.data.records()[i];
        if (r.w != w) continue;
        ++n;
        const double t1 = sample.latent.e[i] == 1 ? sample.latent.t[i] : kInfinity;
        hits += event(r.z, t1) ? 1 : 0;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

}  // namespace ivcr::oracle
