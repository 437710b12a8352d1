// ivcr: simulate, estimate, bounds and mc from the command line.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <ivcr/ivcr.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { ok = 0, usage = 2, data_error = 3, estimation_error = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string command;
    int design = 2;
    std::size_t n = 10000;
    std::uint64_t seed = 1;
    std::uint64_t replicate = 0;
    std::size_t grid = 100;
    std::optional<double> bandwidth;
    std::vector<double> delta;
    std::string smoother = "local_linear";
    std::size_t boot_draws = 0;
    double level = 0.95;
    std::size_t threads = 0;
    std::string out = ".";
    std::string data;
    std::string levels;
    std::vector<std::string> unreachable;
    bool naive = false;
    std::vector<double> u;
    std::size_t lattice = 0;
    std::size_t reps = 100;
};

json to_json(const Options& o) {
    json j{{"design", o.design}, {"n", o.n},           {"seed", o.seed},       {"replicate", o.replicate},
           {"grid", o.grid},     {"delta", o.delta},   {"smoother", o.smoother}, {"boot_draws", o.boot_draws},
           {"level", o.level},   {"threads", o.threads}, {"out", o.out},       {"data", o.data},
           {"levels", o.levels}, {"unreachable", o.unreachable}, {"naive", o.naive}, {"u", o.u},
           {"lattice", o.lattice}, {"reps", o.reps}};
    j["bandwidth"] = o.bandwidth ? json(*o.bandwidth) : json(nullptr);
    return j;
}

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

// A run manifest is accepted as a config file too.
void apply_config(const std::string& path, Options& o) {
    std::ifstream in(path);
    if (!in) throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
    if (j.contains("config")) j = j.at("config");
    try {
        take(j, "design", o.design);
        take(j, "n", o.n);
        take(j, "seed", o.seed);
        take(j, "replicate", o.replicate);
        take(j, "grid", o.grid);
        take(j, "delta", o.delta);
        take(j, "smoother", o.smoother);
        take(j, "boot_draws", o.boot_draws);
        take(j, "level", o.level);
        take(j, "threads", o.threads);
        take(j, "out", o.out);
        take(j, "data", o.data);
        take(j, "levels", o.levels);
        take(j, "unreachable", o.unreachable);
        take(j, "naive", o.naive);
        take(j, "u", o.u);
        take(j, "lattice", o.lattice);
        take(j, "reps", o.reps);
        if (j.contains("bandwidth")) {
            if (j["bandwidth"].is_null()) o.bandwidth.reset();
            else o.bandwidth = j["bandwidth"].get<double>();
        }
    } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
}

void validate(Options& o) {
    if (o.design != 1 && o.design != 2) throw UsageError("--design must be 1 or 2");
    if (o.n < 1) throw UsageError("--n must be positive");
    if (o.grid < 2) throw UsageError("--grid must be at least 2");
    if (!(o.level > 0.0 && o.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
    if (o.boot_draws == 1) throw UsageError("--boot-draws must be 0 or at least 2");
    if (o.bandwidth && !(*o.bandwidth > 0.0)) throw UsageError("--bandwidth must be positive");
    for (double d : o.delta)
        if (!(d > 0.0)) throw UsageError("--delta values must be positive");
    if (o.command == "mc" && o.reps < 1) throw UsageError("--reps must be at least 1");
    if (o.command == "bounds" && o.u.empty()) throw UsageError("bounds needs at least one --u");
    if ((o.command == "estimate" || o.command == "bounds") && o.data.empty()) throw UsageError("--data is required");
    try {
        ivcr::smoother_from_string(o.smoother);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (o.threads == 0) o.threads = ivcr::default_threads();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

class Outputs {
public:
    explicit Outputs(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    template <class Fn>
    void write(const std::string& name, Fn&& fn) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::system_error(std::make_error_code(std::errc::permission_denied), path.string());
        fn(out);
        out.flush();
        if (!out) throw std::system_error(std::make_error_code(std::errc::io_error), path.string());
        names_.push_back(name);
    }

    void json_file(const std::string& name, const json& j) {
        write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

void write_manifest(Outputs& out, const Options& o, const std::string& started, std::optional<std::string> hash) {
    json m;
    m["command"] = o.command;
    m["config"] = to_json(o);
    m["seed"] = o.seed;
    m["version"] = IVCR_VERSION;
    m["input_hash"] = hash ? json("fnv1a64:" + *hash) : json(nullptr);
    m["outputs"] = out.names();
    m["timestamps"] = {{"started", started}, {"finished", utc_now()}};
    out.json_file("manifest.json", m);
}

ivcr::Dataset load(const Options& o) {
    ivcr::CsvSchema schema;
    fs::path sidecar = o.levels;
    if (sidecar.empty()) {
        sidecar = fs::path(o.data).replace_extension(".levels.json");
        if (!fs::exists(sidecar)) sidecar.clear();
    }
    if (!sidecar.empty()) {
        std::ifstream in(sidecar);
        if (!in) throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory), sidecar.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ivcr::DataError(sidecar.string() + ": " + e.what());
        }
        ivcr::apply_registry_json(j, schema);
    }
    for (const auto& cell : o.unreachable) {
        const auto colon = cell.find(':');
        if (colon == std::string::npos) throw UsageError("--unreachable expects TREATMENT:INSTRUMENT, got '" + cell + "'");
        schema.unreachable.emplace_back(cell.substr(0, colon), cell.substr(colon + 1));
    }
    return ivcr::load_csv(o.data, schema);
}

ivcr::FitConfig fit_config(const Options& o, std::size_t levels) {
    ivcr::FitConfig cfg;
    cfg.grid = ivcr::QuantileGrid::uniform(o.grid);
    cfg.surface.kind = ivcr::smoother_from_string(o.smoother);
    cfg.surface.bandwidth.fixed = o.bandwidth;
    if (o.delta.size() == 1) cfg.delta.assign(levels, o.delta[0]);
    else if (!o.delta.empty()) {
        if (o.delta.size() != levels)
            throw UsageError("--delta needs 1 or " + std::to_string(levels) + " values, got " +
                             std::to_string(o.delta.size()));
        cfg.delta.assign(o.delta.begin(), o.delta.end());
    }
    return cfg;
}

int cmd_simulate(const Options& o) {
    const auto started = utc_now();
    const auto sample = ivcr::generate({o.design, o.n, o.seed, o.replicate});
    Outputs out(o.out);
    out.write("data.csv", [&](std::ostream& s) { ivcr::write_csv(s, sample.data); });
    out.json_file("data.levels.json", ivcr::registry_to_json(sample.data.registry()));
    write_manifest(out, o, started, std::nullopt);
    std::cout << "wrote " << sample.data.size() << " rows to " << (fs::path(o.out) / "data.csv").string() << '\n';
    return ok;
}

int cmd_estimate(const Options& o) {
    const auto started = utc_now();
    const auto hash = fnv1a_file(o.data);
    const auto data = load(o);
    const auto cfg = fit_config(o, data.num_treatments());
    const auto surface = ivcr::assemble_surface(data, cfg.surface);
    const auto fit = ivcr::fit_curve(surface, ivcr::estimate_y1(data), ivcr::resolve_delta(data, cfg), cfg);

    json doc;
    doc["n"] = data.size();
    doc["fit"] = ivcr::to_json(fit, data.registry());

    std::optional<ivcr::NaiveCurve> naive;
    if (o.naive) naive = ivcr::naive_curve(data, cfg.grid);

    ivcr::DerivedQuantities derived;
    try {
        const auto cause2 = ivcr::fit_curve(ivcr::swap_causes(data), cfg);
        derived = ivcr::derived_quantities(fit, &cause2);
    } catch (const ivcr::DataError& e) {
        derived = ivcr::derived_quantities(fit);
        derived.warnings.push_back(std::string("cause-specific hazard unavailable: ") + e.what());
    }
    doc["derived_warnings"] = derived.warnings;

    if (data.num_treatments() == 2 && data.num_instruments() == 2)
        doc["diagnostic"] = ivcr::to_json(ivcr::gprime_diagnostic(surface, fit.frontiers.y_hat));

    std::optional<ivcr::ConfidenceBand> band;
    if (o.boot_draws > 0) {
        ivcr::BootstrapConfig boot;
        boot.draws = o.boot_draws;
        boot.seed = o.seed;
        boot.level = o.level;
        boot.threads = o.threads;
        band = ivcr::bootstrap_band(data, cfg, boot, fit);
        doc["bootstrap"] = {{"draws", boot.draws}, {"level", boot.level}, {"seed", boot.seed}};
    }

    Outputs out(o.out);
    out.json_file("fit.json", doc);
    out.write("curve.csv", [&](std::ostream& s) {
        ivcr::write_curve_csv(s, fit, data.registry(), naive ? &*naive : nullptr);
    });
    out.write("derived.csv", [&](std::ostream& s) { ivcr::write_derived_csv(s, derived); });
    if (band) out.write("band.csv", [&](std::ostream& s) { ivcr::write_band_csv(s, *band); });
    write_manifest(out, o, started, hash);

    std::cout << "u_hat = " << fit.frontiers.u_hat << " (grid point " << fit.frontiers.m_hat + 1 << ")\n";
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    return ok;
}

int cmd_bounds(const Options& o) {
    const auto started = utc_now();
    const auto hash = fnv1a_file(o.data);
    const auto data = load(o);
    auto cfg = fit_config(o, data.num_treatments());
    cfg.stop_at_frontier = true;
    const auto surface = ivcr::assemble_surface(data, cfg.surface);
    const auto fit = ivcr::fit_curve(surface, ivcr::estimate_y1(data), ivcr::resolve_delta(data, cfg), cfg);
    const auto f = ivcr::bounds_frontiers(data, fit);
    for (double u : o.u) {
        if (!(u <= 1.0)) throw UsageError("--u values must not exceed 1");
        if (u <= f.u_hat) {
            std::ostringstream msg;
            msg << "u = " << u << " lies in the point-identified range (u_hat = " << f.u_hat
                << "); use `ivcr estimate` for it";
            throw UsageError(msg.str());
        }
    }

    json doc;
    doc["u_hat"] = f.u_hat;
    doc["y_hat"] = f.y1;
    doc["caps"] = f.caps;
    doc["treatment_levels"] = data.registry().treatment_levels;
    doc["sets"] = json::array();
    Outputs out(o.out);
    for (std::size_t i = 0; i < o.u.size(); ++i) {
        const auto set = ivcr::outer_set(o.u[i], surface, f);
        doc["sets"].push_back(ivcr::to_json(set));
        if (o.lattice > 1 && data.num_treatments() == 2)
            out.write("lattice_" + std::to_string(i) + ".csv",
                      [&](std::ostream& s) { ivcr::write_lattice_csv(s, set, surface, f, o.lattice); });
    }
    out.json_file("bounds.json", doc);
    write_manifest(out, o, started, hash);
    return ok;
}

int cmd_mc(const Options& o) {
    const auto started = utc_now();
    const auto cfg = fit_config(o, 2);
    ivcr::McConfig mc;
    mc.design = o.design;
    mc.n = o.n;
    mc.reps = o.reps;
    mc.seed = o.seed;
    mc.threads = o.threads;
    const auto res = ivcr::mc_study(mc, cfg);

    Outputs out(o.out);
    out.write("mc_summary.csv", [&](std::ostream& s) { ivcr::write_mc_summary_csv(s, res); });
    out.write("mc_replicates.csv", [&](std::ostream& s) { ivcr::write_mc_replicates_csv(s, res); });
    out.write("u_hat_histogram.csv", [&](std::ostream& s) { ivcr::write_histogram_csv(s, res); });
    if (o.boot_draws > 0) {
        ivcr::CoverageConfig cc;
        cc.design = o.design;
        cc.n = o.n;
        cc.reps = o.reps;
        cc.seed = o.seed;
        cc.threads = o.threads;
        ivcr::BootstrapConfig boot;
        boot.draws = o.boot_draws;
        boot.level = o.level;
        const auto cov = ivcr::coverage_study(cc, cfg, boot);
        out.write("coverage.csv", [&](std::ostream& s) { ivcr::write_coverage_csv(s, cov); });
    }
    write_manifest(out, o, started, std::nullopt);
    std::cout << "mean u_hat = " << res.mean_u_hat() << " over " << o.reps << " replications\n";
    return ok;
}

void common_flags(CLI::App* app, Options& o, std::string& config) {
    app->add_option("--seed", o.seed, "Random seed");
    app->add_option("--grid", o.grid, "Number of quantile grid points M");
    app->add_option("--bandwidth", o.bandwidth, "Fixed smoothing bandwidth for every cell");
    app->add_option("--delta", o.delta, "Frontier tolerance, one value or one per treatment level");
    app->add_option("--smoother", o.smoother, "local_linear or convolution");
    app->add_option("--boot-draws", o.boot_draws, "Bootstrap draws (0 disables)");
    app->add_option("--level", o.level, "Confidence level");
    app->add_option("--threads", o.threads, "Worker threads (default IVCR_THREADS or all cores)");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--config", config, "JSON config or manifest; overrides flags");
}

void data_flags(CLI::App* app, Options& o) {
    app->add_option("--data", o.data, "Input CSV (time,event,treatment,instrument)");
    app->add_option("--levels", o.levels, "Level sidecar JSON (default: <data>.levels.json if present)");
    app->add_option("--unreachable", o.unreachable, "Structurally empty cell TREATMENT:INSTRUMENT");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instrumental-variable quantile estimation for competing-risks durations"};
    app.set_version_flag("--version", std::string(IVCR_VERSION));
    app.require_subcommand(1);

    Options o;
    std::string config;

    auto* sim = app.add_subcommand("simulate", "Draw a sample from a simulation design");
    sim->add_option("--design", o.design, "Design 1 or 2");
    sim->add_option("--n", o.n, "Sample size");
    sim->add_option("--replicate", o.replicate, "Replicate index within the seed");
    common_flags(sim, o, config);

    auto* est = app.add_subcommand("estimate", "Fit the structural quantile curves");
    data_flags(est, o);
    est->add_flag("--naive", o.naive, "Add the naive comparator column");
    common_flags(est, o, config);

    auto* bnd = app.add_subcommand("bounds", "Outer sets beyond the point-identified range");
    data_flags(bnd, o);
    bnd->add_option("--u", o.u, "Quantile levels above u_hat");
    bnd->add_option("--lattice", o.lattice, "Write a membership lattice with this many points per axis");
    common_flags(bnd, o, config);

    auto* mc = app.add_subcommand("mc", "Monte Carlo study on a simulation design");
    mc->add_option("--design", o.design, "Design 1 or 2");
    mc->add_option("--n", o.n, "Sample size per replication");
    mc->add_option("--reps", o.reps, "Replications");
    common_flags(mc, o, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        o.command = app.get_subcommands().front()->get_name();
        if (!config.empty()) apply_config(config, o);
        validate(o);
        if (o.command == "simulate") return cmd_simulate(o);
        if (o.command == "estimate") return cmd_estimate(o);
        if (o.command == "bounds") return cmd_bounds(o);
        return cmd_mc(o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::system_error& e) {
        std::cerr << "error: cannot open " << e.what() << '\n';
        return usage;
    } catch (const ivcr::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return estimation_error;
    }
}
