#pragma once
// JSON and CSV export of fits, bands, outer sets and study summaries.
// Non-finite numbers are written as the strings "inf", "-inf" and "nan".

#include <cmath>
#include <limits>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "data_model.hpp"
#include "derived.hpp"
#include "diagnostic.hpp"
#include "estimator.hpp"
#include "inference.hpp"
#include "mc.hpp"
#include "partial_id.hpp"

namespace ivcr {

inline nlohmann::json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return detail::format_double(v);
}

inline nlohmann::json to_json(const QuantileCurveFit& fit, const LevelRegistry& reg) {
    nlohmann::json j;
    j["grid"] = fit.grid.points();
    j["treatment_levels"] = reg.treatment_levels;
    j["instrument_levels"] = reg.instrument_levels;
    auto& fr = j["frontiers"];
    fr["y_hat"] = fit.frontiers.y_hat;
    fr["delta"] = fit.frontiers.delta;
    fr["u_hat"] = fit.frontiers.u_hat;
    fr["m_hat"] = fit.frontiers.m_hat + 1;
    fr["triggered"] = fit.frontiers.triggered;
    nlohmann::json theta = nlohmann::json::array();
    for (std::size_t l = 0; l < fit.num_levels(); ++l) {
        nlohmann::json col = nlohmann::json::array();
        for (std::size_t m = 0; m < fit.grid.size(); ++m) col.push_back(number_json(fit.theta[m][l]));
        theta.push_back(col);
    }
    j["theta"] = theta;
    nlohmann::json obj = nlohmann::json::array();
    for (double v : fit.objective) obj.push_back(number_json(v));
    j["objective"] = obj;
    j["converged"] = std::vector<bool>(fit.converged.begin(), fit.converged.end());
    j["reported"] = std::vector<bool>(fit.reported.begin(), fit.reported.end());
    j["warnings"] = fit.warnings;
    return j;
}

inline nlohmann::json to_json(const DiagnosticReport& r) {
    return {{"applicable", r.applicable}, {"total", r.total},       {"skipped", r.skipped},
            {"positive", r.positive},     {"negative", r.negative}, {"zero", r.zero},
            {"majority_sign", r.majority_sign}, {"agreement", r.agreement}, {"passes", r.passes}};
}

inline nlohmann::json to_json(const OuterSet& s) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& p : s.pieces) {
        nlohmann::json box = nlohmann::json::array();
        for (std::size_t l = 0; l < p.lo.size(); ++l) box.push_back({number_json(p.lo[l]), number_json(p.hi[l])});
        pieces.push_back(box);
    }
    return {{"u", s.u}, {"case", to_string(s.tag)}, {"pieces", pieces}};
}

/// u, then theta per level, then qte (theta_1 - theta_0) for reported points.
inline void write_curve_csv(std::ostream& out, const QuantileCurveFit& fit, const LevelRegistry& reg,
                            const NaiveCurve* naive = nullptr) {
    out << "u";
    for (const auto& lab : reg.treatment_levels) out << ',' << detail::csv_quote("theta_" + lab);
    out << ",qte";
    if (naive != nullptr) out << ",naive_qte";
    out << '\n';
    for (std::size_t m = 0; m < fit.grid.size(); ++m) {
        if (!fit.reported[m]) continue;
        out << csv_number(fit.grid[m]);
        for (std::size_t l = 0; l < fit.num_levels(); ++l) out << ',' << csv_number(fit.theta[m][l]);
        out << ',' << csv_number(fit.contrast(m, 1, 0));
        if (naive != nullptr) out << ',' << csv_number(naive->theta[m][1] - naive->theta[m][0]);
        out << '\n';
    }
}

inline void write_band_csv(std::ostream& out, const ConfidenceBand& band) {
    out << "contrast,u,lower,point,upper,n_reported\n";
    for (std::size_t c = 0; c < band.contrasts.size(); ++c)
        for (std::size_t m = 0; m < band.grid.size(); ++m) {
            const auto& r = band.rows[c][m];
            if (!r.valid) continue;
            out << band.contrasts[c].a << '-' << band.contrasts[c].b << ',' << csv_number(band.grid[m]) << ','
                << csv_number(r.lower) << ',' << csv_number(r.point) << ',' << csv_number(r.upper) << ','
                << r.n_reported << '\n';
        }
}

inline void write_derived_csv(std::ostream& out, const DerivedQuantities& d) {
    out << "level,t,incidence,density,subdistribution_hazard,cause_specific_hazard\n";
    for (std::size_t l = 0; l < d.levels.size(); ++l) {
        const auto& q = d.levels[l];
        for (std::size_t i = 0; i < q.t.size(); ++i)
            out << l << ',' << csv_number(q.t[i]) << ',' << csv_number(q.u[i]) << ',' << csv_number(q.density[i]) << ','
                << csv_number(q.subdistribution_hazard[i]) << ',' << csv_number(q.cause_specific_hazard[i]) << '\n';
    }
}

/// Membership of a regular lattice over [0, scale * y]^2 (two levels only).
template <class Surface>
void write_lattice_csv(std::ostream& out, const OuterSet& set, const Surface& s, const BoundsFrontiers& f,
                       std::size_t points = 60, double scale = 1.5) {
    out << "theta0,theta1,in_set,member\n";
    for (std::size_t i = 0; i < points; ++i)
        for (std::size_t j = 0; j < points; ++j) {
            const std::vector<double> th{scale * f.y1[0] * static_cast<double>(i) / static_cast<double>(points - 1),
                                         scale * f.y1[1] * static_cast<double>(j) / static_cast<double>(points - 1)};
            out << csv_number(th[0]) << ',' << csv_number(th[1]) << ',' << set.contains(th) << ','
                << verify_membership(th, set.u, s, f) << '\n';
        }
}

inline void write_mc_summary_csv(std::ostream& out, const McResult& r) {
    out << "u,truth_qte,mean_qte,mean_abs_error,n_reported,computed_mean_abs_error,n_computed,naive_mean_qte,naive_n";
    for (std::size_t l = 0; l < (r.rows.empty() ? 0 : r.rows[0].mean_theta.size()); ++l) out << ",mean_theta_" << l;
    out << '\n';
    for (const auto& row : r.rows) {
        out << csv_number(row.u) << ',' << csv_number(row.truth) << ',' << csv_number(row.mean_qte) << ','
            << csv_number(row.mean_abs_error) << ',' << row.n_reported << ',' << csv_number(row.computed_mean_abs_error)
            << ',' << row.n_computed << ',' << csv_number(row.naive_mean_qte) << ',' << row.naive_n;
        for (double t : row.mean_theta) out << ',' << csv_number(t);
        out << '\n';
    }
}

inline void write_mc_replicates_csv(std::ostream& out, const McResult& r) {
    out << "rep,u_hat";
    const std::size_t L = r.replicates.empty() ? 0 : r.replicates[0].y_hat.size();
    for (std::size_t l = 0; l < L; ++l) out << ",y_hat_" << l;
    out << '\n';
    for (std::size_t i = 0; i < r.replicates.size(); ++i) {
        out << i << ',' << csv_number(r.replicates[i].u_hat);
        for (double y : r.replicates[i].y_hat) out << ',' << csv_number(y);
        out << '\n';
    }
}

inline void write_histogram_csv(std::ostream& out, const McResult& r) {
    out << "bin,count\n";
    const auto h = u_hat_histogram(r);
    for (std::size_t m = 0; m < h.size(); ++m)
        if (h[m] > 0) out << csv_number(r.grid[m]) << ',' << h[m] << '\n';
}

inline void write_coverage_csv(std::ostream& out, const CoverageResult& c) {
    out << "u,truth,covered,valid,coverage\n";
    for (const auto& row : c.rows)
        out << csv_number(row.u) << ',' << csv_number(row.truth) << ',' << row.covered << ',' << row.valid << ','
            << csv_number(row.rate()) << '\n';
}

}  // namespace ivcr
