// Acceptance run: one PASS/FAIL line per criterion.
//   ivcr_acceptance [--full]
// --full runs the coverage study at n = 10,000 with 100 x 100 draws; the
// default is the n = 2,000, 50-replication smoke version.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <ivcr/ivcr.hpp>

#include "support.hpp"

using namespace ivcr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& run) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = run();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("C%-2d %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::size_t grid_index(const QuantileGrid& g, double u) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < g.size(); ++m)
        if (std::abs(g[m] - u) < std::abs(g[best] - u)) best = m;
    return best;
}

std::vector<ObservationRecord> records(const std::vector<double>& y, const std::vector<int>& e) {
    std::vector<ObservationRecord> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = {y[i], static_cast<Event>(e[i]), 0, 0};
    return r;
}

Outcome c1() {
    const auto p = build_processes(records({1, 2, 3, 4}, {1, 2, 0, 1}));
    const auto aj = aalen_johansen_cause1(p);
    const auto pl = product_limit_survival(p);
    const std::vector<std::pair<double, double>> aj_expect{{0.0, 1.0}, {1.0, 0.75}, {3.5, 0.75}, {4.0, 0.25}};
    const std::vector<std::pair<double, double>> pl_expect{{0.5, 1.0}, {1.0, 0.75}, {2.0, 0.5}, {3.0, 0.5}, {4.0, 0.0}};
    double err = 0.0;
    for (auto [t, v] : aj_expect) err = std::max(err, std::abs(aj(t) - v));
    for (auto [t, v] : pl_expect) err = std::max(err, std::abs(pl(t) - v));
    return {err <= 1e-12, "AJ 1 -> 3/4 -> 1/4, PL 1 -> 3/4 -> 1/2 -> 0, max error " + fmt("%.1e", err)};
}

Outcome c2() {
    std::mt19937_64 gen(20240601);
    std::uniform_real_distribution<double> unif(0.0, 10.0);
    double err = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + gen() % 60;
        std::vector<double> y(n);
        for (auto& v : y) v = std::round(unif(gen) * 8.0) / 8.0;
        const auto S = aalen_johansen_cause1(build_processes(records(y, std::vector<int>(n, 1))));
        auto pts = y;
        for (double v : y) pts.push_back(v + 1.0 / 16.0);
        pts.push_back(0.0);
        for (double t : pts) {
            double below = 0.0;
            for (double v : y) below += v <= t;
            err = std::max(err, std::abs(S(t) - (1.0 - below / static_cast<double>(n))));
        }
    }
    return {err <= 1e-12, "1000 uncensored datasets, max error " + fmt("%.1e", err)};
}

Outcome c3() {
    bool pass = true;
    std::ostringstream os;
    for (int design : {1, 2}) {
        const auto s = generate({design, 1000000, 3, 0});
        std::size_t w1 = 0, z1 = 0, cens = 0;
        for (const auto& r : s.data.records()) {
            w1 += r.w == 1;
            z1 += r.w == 1 && r.z == 1;
            cens += r.event == Event::censored;
        }
        const double pz = static_cast<double>(z1) / static_cast<double>(w1);
        const double pc = static_cast<double>(cens) / static_cast<double>(s.data.size());
        const double target = design == 1 ? 0.30 : 0.10;
        pass = pass && std::abs(pz - 0.73) <= 0.01 && std::abs(pc - target) <= 0.01;
        os << "design " << design << ": P(Z=1|W=1) " << fmt("%.4f", pz) << ", censored " << fmt("%.4f", pc) << "; ";
    }
    return {pass, os.str()};
}

Outcome c4() {
    const auto s = generate({1, 100000, 4, 0});
    std::vector<double> u(s.data.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto z = s.data.records()[i].z;
        const double t = s.latent.t[i];
        u[i] = s.latent.e[i] == 1 ? (z == 0 ? t / 2.0 : t) : (z == 0 ? t + 0.5 : t / 2.0 + 0.75);
    }
    const double d = oracle::ks_uniform_statistic(u);
    const double p = oracle::ks_pvalue(d, u.size());
    return {p > 0.01, "U rebuilt from (T, E, Z): KS D " + fmt("%.5f", d) + ", p " + fmt("%.3f", p)};
}

struct DesignRun {
    McResult mc;
    std::size_t contained = 0;
    std::size_t containment_checked = 0;
    std::vector<std::string> containment_errors;
};

DesignRun run_design(int design) {
    DesignRun out;
    std::mutex mu;
    McConfig cfg;
    cfg.design = design;
    cfg.n = 10000;
    cfg.reps = 100;
    cfg.seed = 2024;
    cfg.threads = default_threads();
    if (design == 1) {
        cfg.on_replicate = [&](std::size_t, const Dataset& data, const QuantileCurveFit& fit) {
            std::string err;
            bool inside = false;
            try {
                const auto f = bounds_frontiers(data, fit);
                const auto set = outer_set(0.4, assemble_surface(data), f);
                inside = set.contains({0.8, 0.4});
            } catch (const std::exception& e) {
                err = e.what();
            }
            std::lock_guard lock(mu);
            ++out.containment_checked;
            out.contained += inside;
            if (!err.empty()) out.containment_errors.push_back(err);
        };
    }
    out.mc = mc_study(cfg);
    return out;
}

Outcome c5(const std::map<int, DesignRun>& runs) {
    bool pass = true;
    std::ostringstream os;
    for (const auto& [design, run] : runs) {
        const auto truth = ground_truth(design);
        const auto& res = run.mc;
        std::size_t below = 0, before = 0;
        for (const auto& r : res.replicates) {
            below += r.y_hat[0] <= truth.y1(0) && r.y_hat[1] <= truth.y1(1);
            before += r.m_hat == 0 || res.grid[r.m_hat - 1] <= truth.u_Y;
        }
        const double mean = res.mean_u_hat();
        const std::size_t reps = res.replicates.size();
        const bool ok = below == reps && before * 100 >= 95 * reps && mean >= truth.u_Y - 0.08 && mean <= truth.u_Y;
        pass = pass && ok;
        os << "design " << design << ": y_hat <= y " << below << "/" << reps << ", u_{m-1} <= u_Y " << before << "/"
           << reps << ", mean u_hat " << fmt("%.4f", mean) << " (u_Y " << fmt("%.4f", truth.u_Y) << "); ";
    }
    return {pass, os.str()};
}

Outcome c6(const std::map<int, DesignRun>& runs) {
    bool pass = true;
    std::ostringstream os;
    const std::map<int, std::vector<double>> points{{1, {0.1, 0.2, 0.3}}, {2, {0.1, 0.2, 0.3, 0.4}}};
    for (const auto& [design, us] : points) {
        const auto& res = runs.at(design).mc;
        os << "design " << design << " mean|err| all reps (reported only):";
        for (double u : us) {
            const auto& row = res.rows[grid_index(res.grid, u)];
            const bool ok = row.n_computed == res.replicates.size() && row.computed_mean_abs_error <= 0.03;
            pass = pass && ok;
            os << " u=" << u << " " << fmt("%.4f", row.computed_mean_abs_error) << " (" << fmt("%.4f", row.mean_abs_error)
               << ", n=" << row.n_reported << ")";
        }
        os << "; ";
    }
    return {pass, os.str()};
}

Outcome c7(bool full) {
    CoverageConfig cc;
    cc.design = 2;
    cc.n = full ? 10000 : 2000;
    cc.reps = full ? 100 : 50;
    cc.seed = 77;
    cc.threads = default_threads();
    BootstrapConfig boot;
    boot.draws = 100;
    boot.level = 0.95;
    const double lo = full ? 0.90 : 0.85, hi = full ? 0.99 : 1.0;
    const auto res = coverage_study(cc, FitConfig{}, boot);
    bool pass = true;
    std::ostringstream os;
    os << (full ? "full" : "smoke") << " n=" << cc.n << " reps=" << cc.reps << " draws=" << boot.draws << ", band ["
       << lo << ", " << hi << "]:";
    for (double u : {0.1, 0.2, 0.3, 0.4}) {
        const auto& row = res.rows[grid_index(QuantileGrid::uniform(100), u)];
        const double rate = row.rate();
        const bool ok = row.valid > 0 && rate >= lo && rate <= hi;
        pass = pass && ok;
        os << " u=" << u << " " << fmt("%.2f", rate) << " (" << row.valid << ")";
    }
    return {pass, os.str()};
}

Outcome c8(const std::map<int, DesignRun>& runs) {
    bool pass = false;
    std::ostringstream os;
    for (const auto& [design, run] : runs) {
        const auto& res = run.mc;
        for (double u : {0.2, 0.3}) {
            const auto& row = res.rows[grid_index(res.grid, u)];
            const double naive_dev = std::abs(row.naive_mean_qte - row.truth);
            const double iv_dev = std::abs(row.mean_qte - row.truth);
            pass = pass || (naive_dev > 0.02 && iv_dev <= 0.03);
            os << "d" << design << " u=" << u << " naive " << fmt("%.3f", naive_dev) << " iv " << fmt("%.3f", iv_dev)
               << "; ";
        }
    }
    return {pass, os.str()};
}

template <class S>
bool near_boundary(const std::vector<double>& th, double u, const S& s, const BoundsFrontiers& f, double r) {
    const bool here = verify_membership(th, u, s, f);
    const std::size_t L = th.size();
    std::size_t count = 1;
    for (std::size_t l = 0; l < L; ++l) count *= 3;
    for (std::size_t i = 0; i < count; ++i) {
        auto p = th;
        std::size_t rem = i;
        for (std::size_t l = 0; l < L; ++l) {
            p[l] = std::max(0.0, p[l] + r * (static_cast<double>(rem % 3) - 1.0));
            rem /= 3;
        }
        if (verify_membership(p, u, s, f) != here) return true;
    }
    return false;
}

struct LatticeCheck {
    std::size_t points = 0;
    std::size_t disagreements = 0;
    std::size_t beyond_tolerance = 0;
    std::size_t false_negatives = 0;  // verifier accepts, constructed set rejects
    double worst_radius = 0.0;  // smallest L-inf radius reaching the boundary, worst case
};

LatticeCheck lattice_check(std::size_t L, std::size_t surfaces, std::uint64_t seed0) {
    LatticeCheck out;
    std::mt19937_64 gen(seed0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const OuterSetConfig cfg;
    const std::size_t per_dim = 30;
    for (std::size_t k = 0; k < surfaces; ++k) {
        const oracle::SyntheticSurface s(L, 2 + k % 3, seed0 + k);
        const auto& y = s.frontier();
        const BoundsFrontiers f{y, y, 0.0};
        const double u = 0.05 + 0.95 * unif(gen);
        const auto set = outer_set(u, s, f, cfg);
        const double ymax = *std::max_element(y.begin(), y.end());
        const double tol_radius = 2.0 * cfg.tolerance * ymax;
        std::size_t count = 1;
        for (std::size_t l = 0; l < L; ++l) count *= per_dim;
        std::vector<double> p(L);
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t rem = i;
            for (std::size_t l = 0; l < L; ++l) {
                p[l] = 1.5 * y[l] * static_cast<double>(rem % per_dim) / static_cast<double>(per_dim - 1);
                rem /= per_dim;
            }
            ++out.points;
            const bool member = verify_membership(p, u, s, f);
            if (set.contains(p) == member) continue;
            ++out.disagreements;
            out.false_negatives += member;
            if (near_boundary(p, u, s, f, tol_radius)) continue;
            ++out.beyond_tolerance;
            double r = tol_radius;
            while (!near_boundary(p, u, s, f, r) && r < ymax) r *= 2.0;
            out.worst_radius = std::max(out.worst_radius, r / ymax);
        }
    }
    return out;
}

Outcome c9(const DesignRun& design1) {
    const auto two = lattice_check(2, 50, 1000);
    const auto three = lattice_check(3, 10, 5000);
    const bool contain = design1.containment_checked == 100 && design1.contained == 100;
    std::ostringstream os;
    os << "L=2: " << two.beyond_tolerance << " of " << two.points << " lattice points disagree beyond tolerance; L=3: "
       << three.beyond_tolerance << " of " << three.points;
    if (three.beyond_tolerance > 0)
        os << " (" << three.false_negatives << " false negatives, all within " << fmt("%.2e", three.worst_radius)
           << " x frontier of the boundary)";
    os << "; truth (0.8, 0.4) contained at u=0.4 in " << design1.contained << "/" << design1.containment_checked;
    if (!design1.containment_errors.empty()) os << " (" << design1.containment_errors.front() << ")";
    return {two.beyond_tolerance == 0 && three.beyond_tolerance == 0 && contain, os.str()};
}

Outcome c10() {
    bool pass = true;
    std::ostringstream os;
    for (double u : {0.1, 0.25, 0.4})
        for (std::size_t w : {0u, 1u}) {
            const auto est = oracle::mc_surface_sum(2, 2000000, 10 + w, w, [u](std::size_t z, double t1) {
                return t1 >= true_phi(2, z, u);
            });
            const double z = (est.mean - (1.0 - u)) / est.se;
            pass = pass && std::abs(z) <= 3.0;
            os << "u=" << u << " w=" << w << " " << fmt("%.4f", est.mean) << " (" << fmt("%+.2f", z) << " se); ";
        }
    return {pass, os.str()};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        files[e.path().filename().string()] = std::string(std::istreambuf_iterator<char>(in), {});
    }
    return files;
}

std::string without_timestamps(const std::string& manifest) {
    auto j = nlohmann::json::parse(manifest);
    j.erase("timestamps");
    return j.dump();
}

Outcome c11(const std::string& cli) {
    const fs::path root = fs::temp_directory_path() / ("ivcr_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) throw std::runtime_error("command failed: " + args);
    };
    const std::string data = (root / "sim" / "data.csv").string();
    run("simulate --design 1 --n 3000 --seed 5 --out " + (root / "sim").string());
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate --design 2 --n 2000 --seed 9"},
        {"estimate", "estimate --data " + data + " --naive --boot-draws 20 --seed 3"},
        {"bounds", "bounds --data " + data + " --u 0.5 --u 0.9 --lattice 20"},
        {"mc", "mc --design 2 --n 1000 --reps 6 --boot-draws 10 --seed 4"},
    };
    std::size_t identical = 0;
    std::ostringstream problems;
    for (const auto& [name, args] : commands) {
        const auto a = root / (name + "_t1"), b = root / (name + "_t3");
        run(args + " --threads 1 --out " + a.string());
        run(args + " --threads 3 --out " + b.string());
        const auto first = read_dir(a), other = read_dir(b);
        run(name + " --config " + (a / "manifest.json").string());
        const auto again = read_dir(a);
        bool same = first.size() == other.size() && first.size() == again.size();
        for (const auto& [file, bytes] : first) {
            if (!same) break;
            if (file == "manifest.json") {
                same = without_timestamps(bytes) == without_timestamps(again.at(file));
                continue;
            }
            same = other.count(file) && bytes == other.at(file) && bytes == again.at(file);
            if (!same) problems << name << "/" << file << " differs; ";
        }
        identical += same;
    }
    fs::remove_all(root);
    std::ostringstream os;
    os << identical << "/" << commands.size()
       << " commands byte-identical across re-runs from the manifest and across 1 vs 3 threads; " << problems.str();
    return {identical == commands.size(), os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    bool full = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--full") full = true;
        else {
            std::fprintf(stderr, "usage: %s [--full]\n", argv[0]);
            return 2;
        }
    }

    report(1, c1);
    report(2, c2);
    report(3, c3);
    report(4, c4);

    std::map<int, DesignRun> runs;
    const auto t0 = std::chrono::steady_clock::now();
    runs[1] = run_design(1);
    runs[2] = run_design(2);
    std::printf("    (Monte Carlo, 2 x 100 replications at n = 10,000: %.1fs)\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

    report(5, [&] { return c5(runs); });
    report(6, [&] { return c6(runs); });
    report(7, [&] { return c7(full); });
    report(8, [&] { return c8(runs); });
    report(9, [&] { return c9(runs.at(1)); });
    report(10, c10);
    report(11, [] { return c11(IVCR_CLI_PATH); });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
