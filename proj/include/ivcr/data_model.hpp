#pragma once
// Observational data schema: one record per subject carrying the follow-up
// time, the combined censoring/cause code, and categorical treatment and
// instrument levels. A Dataset is validated once and immutable afterwards.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ivcr {

/// Error raised for malformed or degenerate input data. `row()` is the
/// 1-based data row (header excluded) when the problem is row-specific.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : std::runtime_error(row ? "row " + std::to_string(*row) + ": " + what : what), row_(row) {}

    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

/// Event code: 0 censored, 1 failure from cause 1, 2 failure from cause 2.
enum class Event : int { censored = 0, cause1 = 1, cause2 = 2 };

struct ObservationRecord {
    double y = 0.0;
    Event event = Event::censored;
    std::size_t z = 0;
    std::size_t w = 0;
};

struct CellIndex {
    std::size_t z = 0;
    std::size_t w = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Ordered level labels plus the (treatment, instrument) cells declared
/// structurally unreachable (one-sided noncompliance).
struct LevelRegistry {
    std::vector<std::string> treatment_levels;
    std::vector<std::string> instrument_levels;
    std::vector<CellIndex> unreachable;

    std::size_t num_treatments() const noexcept { return treatment_levels.size(); }
    std::size_t num_instruments() const noexcept { return instrument_levels.size(); }

    bool is_unreachable(CellIndex c) const {
        return std::find(unreachable.begin(), unreachable.end(), c) != unreachable.end();
    }
};

inline bool is_valid_event_code(int code) noexcept { return code >= 0 && code <= 2; }

class Dataset {
public:
    Dataset() = default;

    /// Validates and takes ownership. Throws DataError on any violation.
    static Dataset create(std::vector<ObservationRecord> records, LevelRegistry registry) {
        Dataset d;
        d.records_ = std::move(records);
        d.registry_ = std::move(registry);
        d.validate();
        return d;
    }

    const std::vector<ObservationRecord>& records() const noexcept { return records_; }
    const LevelRegistry& registry() const noexcept { return registry_; }
    std::size_t size() const noexcept { return records_.size(); }
    std::size_t num_treatments() const noexcept { return registry_.num_treatments(); }
    std::size_t num_instruments() const noexcept { return registry_.num_instruments(); }
    bool is_unreachable(CellIndex c) const { return registry_.is_unreachable(c); }

    /// Same registry, different records (bootstrap resamples, relabelings).
    Dataset with_records(std::vector<ObservationRecord> records) const {
        return create(std::move(records), registry_);
    }

private:
    void validate() const {
        const auto& reg = registry_;
        if (reg.num_instruments() < 2)
            throw DataError("K >= 2 required: the instrument needs at least two levels");
        if (reg.num_treatments() < 2)
            throw DataError("L >= 2 required: the treatment needs at least two levels");
        auto distinct = [](std::vector<std::string> v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) == v.end();
        };
        if (!distinct(reg.treatment_levels)) throw DataError("duplicate treatment level label");
        if (!distinct(reg.instrument_levels)) throw DataError("duplicate instrument level label");
        for (const auto& c : reg.unreachable)
            if (c.z >= reg.num_treatments() || c.w >= reg.num_instruments())
                throw DataError("unreachable cell declaration out of range");

        std::vector<std::size_t> counts(reg.num_treatments() * reg.num_instruments(), 0);
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (!std::isfinite(r.y) || r.y < 0.0)
                throw DataError("follow-up time must be finite and nonnegative", i + 1);
            if (!is_valid_event_code(static_cast<int>(r.event)))
                throw DataError("event code must be 0, 1 or 2", i + 1);
            if (r.z >= reg.num_treatments()) throw DataError("treatment index out of range", i + 1);
            if (r.w >= reg.num_instruments()) throw DataError("instrument index out of range", i + 1);
            ++counts[r.z * reg.num_instruments() + r.w];
        }
        for (std::size_t z = 0; z < reg.num_treatments(); ++z) {
            for (std::size_t w = 0; w < reg.num_instruments(); ++w) {
                const std::size_t c = counts[z * reg.num_instruments() + w];
                const bool declared = reg.is_unreachable({z, w});
                if (c == 0 && !declared)
                    throw DataError("empty cell (treatment '" + reg.treatment_levels[z] +
                                    "', instrument '" + reg.instrument_levels[w] +
                                    "'); declare it unreachable if treatment is structurally "
                                    "unavailable under that instrument level");
                if (c > 0 && declared)
                    throw DataError("cell (treatment '" + reg.treatment_levels[z] + "', instrument '" +
                                    reg.instrument_levels[w] + "') declared unreachable but has " +
                                    std::to_string(c) + " records");
            }
        }
    }

    std::vector<ObservationRecord> records_;
    LevelRegistry registry_;
};

/// Row-major L x K table of record counts.
struct CellCounts {
    std::size_t num_treatments = 0;
    std::size_t num_instruments = 0;
    std::vector<std::size_t> counts;

    std::size_t operator()(std::size_t z, std::size_t w) const { return counts[z * num_instruments + w]; }

    std::size_t instrument_total(std::size_t w) const {
        std::size_t s = 0;
        for (std::size_t z = 0; z < num_treatments; ++z) s += (*this)(z, w);
        return s;
    }

    std::size_t total() const {
        std::size_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
};

inline CellCounts cell_counts(const Dataset& data) {
    CellCounts t{data.num_treatments(), data.num_instruments(),
                 std::vector<std::size_t>(data.num_treatments() * data.num_instruments(), 0)};
    for (const auto& r : data.records()) ++t.counts[r.z * t.num_instruments + r.w];
    return t;
}

/// Copy with causes 1 and 2 exchanged, so cause-2 quantities can be
/// estimated through the cause-1 code path.
inline Dataset swap_causes(const Dataset& data) {
    auto recs = data.records();
    for (auto& r : recs) {
        if (r.event == Event::cause1) r.event = Event::cause2;
        else if (r.event == Event::cause2) r.event = Event::cause1;
    }
    return data.with_records(std::move(recs));
}

// ---------------------------------------------------------------------------
// CSV ingestion and serialization
// ---------------------------------------------------------------------------

struct CsvSchema {
    std::string time_column = "time";
    std::string event_column = "event";
    std::string treatment_column = "treatment";
    std::string instrument_column = "instrument";
    /// Optional mapping from raw event labels to codes {0,1,2}. Empty means
    /// the column already holds the numeric codes.
    std::map<std::string, int> event_labels;
    /// Explicit level orderings; empty means order of first appearance.
    std::vector<std::string> treatment_order;
    std::vector<std::string> instrument_order;
    /// (treatment label, instrument label) pairs declared unreachable.
    std::vector<std::pair<std::string, std::string>> unreachable;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

inline std::size_t level_index(std::vector<std::string>& levels, const std::string& label, bool fixed,
                               const char* what, std::size_t row) {
    auto it = std::find(levels.begin(), levels.end(), label);
    if (it != levels.end()) return static_cast<std::size_t>(it - levels.begin());
    if (fixed) throw DataError(std::string(what) + " label '" + label + "' not in the declared ordering", row);
    levels.push_back(label);
    return levels.size() - 1;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, const CsvSchema& schema = {}) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (detail::trim(header[i]) == name) return i;
        throw DataError("missing column '" + name + "'");
    };
    const std::size_t ct = column(schema.time_column);
    const std::size_t ce = column(schema.event_column);
    const std::size_t cz = column(schema.treatment_column);
    const std::size_t cw = column(schema.instrument_column);
    const std::size_t needed = std::max({ct, ce, cz, cw}) + 1;

    LevelRegistry reg;
    reg.treatment_levels = schema.treatment_order;
    reg.instrument_levels = schema.instrument_order;
    const bool fixed_z = !schema.treatment_order.empty();
    const bool fixed_w = !schema.instrument_order.empty();

    std::vector<ObservationRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto f = detail::split_csv_line(line);
        if (f.size() < needed) throw DataError("too few fields", row);

        ObservationRecord r;
        const auto y = detail::parse_double(f[ct]);
        if (!y) throw DataError("non-numeric time '" + f[ct] + "'", row);
        if (!std::isfinite(*y) || *y < 0.0) throw DataError("negative or non-finite time", row);
        r.y = *y;

        const std::string ev{detail::trim(f[ce])};
        int code = -1;
        if (!schema.event_labels.empty()) {
            auto it = schema.event_labels.find(ev);
            if (it == schema.event_labels.end()) throw DataError("unknown event label '" + ev + "'", row);
            code = it->second;
        } else {
            auto [p, e] = std::from_chars(ev.data(), ev.data() + ev.size(), code);
            if (e != std::errc{} || p != ev.data() + ev.size()) code = -1;
        }
        if (!is_valid_event_code(code)) throw DataError("event code '" + ev + "' outside {0,1,2}", row);
        r.event = static_cast<Event>(code);

        r.z = detail::level_index(reg.treatment_levels, std::string(detail::trim(f[cz])), fixed_z, "treatment", row);
        r.w = detail::level_index(reg.instrument_levels, std::string(detail::trim(f[cw])), fixed_w, "instrument", row);
        records.push_back(r);
    }
    if (records.empty()) throw DataError("no data rows");

    for (const auto& [zl, wl] : schema.unreachable) {
        auto zi = std::find(reg.treatment_levels.begin(), reg.treatment_levels.end(), zl);
        auto wi = std::find(reg.instrument_levels.begin(), reg.instrument_levels.end(), wl);
        if (zi == reg.treatment_levels.end() || wi == reg.instrument_levels.end())
            throw DataError("unreachable declaration (" + zl + ", " + wl + ") names an unknown level");
        reg.unreachable.push_back({static_cast<std::size_t>(zi - reg.treatment_levels.begin()),
                                   static_cast<std::size_t>(wi - reg.instrument_levels.begin())});
    }
    return Dataset::create(std::move(records), std::move(reg));
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), path);
    return parse_csv(in, schema);
}

inline void write_csv(std::ostream& out, const Dataset& data, const CsvSchema& schema = {}) {
    const auto& reg = data.registry();
    out << schema.time_column << ',' << schema.event_column << ',' << schema.treatment_column << ','
        << schema.instrument_column << '\n';
    for (const auto& r : data.records()) {
        out << detail::format_double(r.y) << ',' << static_cast<int>(r.event) << ','
            << detail::csv_quote(reg.treatment_levels[r.z]) << ',' << detail::csv_quote(reg.instrument_levels[r.w])
            << '\n';
    }
}

inline void save_csv(const std::string& path, const Dataset& data, const CsvSchema& schema = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::system_error(std::make_error_code(std::errc::permission_denied), path);
    write_csv(out, data, schema);
}

// Level-registry sidecar.

inline nlohmann::json registry_to_json(const LevelRegistry& reg) {
    nlohmann::json j;
    j["treatment_levels"] = reg.treatment_levels;
    j["instrument_levels"] = reg.instrument_levels;
    auto cells = nlohmann::json::array();
    for (const auto& c : reg.unreachable)
        cells.push_back({{"treatment", reg.treatment_levels[c.z]}, {"instrument", reg.instrument_levels[c.w]}});
    j["unreachable_cells"] = cells;
    return j;
}

/// Applies a sidecar (as written by registry_to_json) to a schema.
inline void apply_registry_json(const nlohmann::json& j, CsvSchema& schema) {
    if (j.contains("treatment_levels")) schema.treatment_order = j.at("treatment_levels").get<std::vector<std::string>>();
    if (j.contains("instrument_levels"))
        schema.instrument_order = j.at("instrument_levels").get<std::vector<std::string>>();
    if (j.contains("unreachable_cells"))
        for (const auto& c : j.at("unreachable_cells"))
            schema.unreachable.emplace_back(c.at("treatment").get<std::string>(), c.at("instrument").get<std::string>());
}

}  // namespace ivcr
