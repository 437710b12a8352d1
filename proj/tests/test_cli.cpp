#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("ivcr_cli_" + std::to_string(::getpid()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    int run(const std::string& args) const {
        const std::string cmd = "\"" IVCR_CLI_PATH "\" " + args + " > /dev/null 2> \"" + (root_ / "stderr").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }

    static std::size_t lines(const fs::path& p) {
        const auto s = slurp(p);
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }

    fs::path root_;
};

}  // namespace

TEST_F(Cli, SimulateIsDeterministic) {
    ASSERT_EQ(run("simulate --design 1 --n 100 --seed 7 --out " + path("a")), 0);
    ASSERT_EQ(run("simulate --design 1 --n 100 --seed 7 --out " + path("b")), 0);
    EXPECT_EQ(lines(root_ / "a" / "data.csv"), 101u);
    EXPECT_EQ(slurp(root_ / "a" / "data.csv"), slurp(root_ / "b" / "data.csv"));
    EXPECT_TRUE(fs::exists(root_ / "a" / "data.levels.json"));
    const auto manifest = json::parse(slurp(root_ / "a" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "simulate");
    EXPECT_EQ(manifest["config"]["seed"], 7);
    EXPECT_TRUE(manifest.contains("timestamps"));
    EXPECT_TRUE(manifest.contains("version"));
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("simulate --design 3 --out " + path("x")), 2);
    EXPECT_EQ(run("estimate --data " + path("missing.csv")), 2);
    EXPECT_EQ(run("mc --reps 0"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("estimate"), 2);
}

TEST_F(Cli, MalformedDataIsADataError) {
    std::ofstream(path("bad.csv")) << "time,event,treatment,instrument\n1.0,7,a,b\n";
    EXPECT_EQ(run("estimate --data " + path("bad.csv") + " --out " + path("o")), 3);
    EXPECT_NE(slurp(root_ / "stderr").find("row"), std::string::npos);
}

TEST_F(Cli, EstimateDesign2) {
    ASSERT_EQ(run("simulate --design 2 --n 10000 --seed 11 --out " + path("sim")), 0);
    ASSERT_EQ(run("estimate --data " + path("sim/data.csv") + " --naive --boot-draws 20 --threads 2 --out " + path("est")),
              0);
    const auto fit = json::parse(slurp(root_ / "est" / "fit.json"));
    const double u_hat = fit["fit"]["frontiers"]["u_hat"];
    EXPECT_GT(u_hat, 0.4);
    EXPECT_LE(u_hat, 0.5);
    EXPECT_TRUE(fit["diagnostic"]["passes"].get<bool>());
    EXPECT_TRUE(fs::exists(root_ / "est" / "curve.csv"));
    EXPECT_TRUE(fs::exists(root_ / "est" / "derived.csv"));

    std::istringstream band(slurp(root_ / "est" / "band.csv"));
    std::string line;
    std::getline(band, line);
    EXPECT_EQ(line, "contrast,u,lower,point,upper,n_reported");
    std::size_t rows = 0;
    while (std::getline(band, line)) {
        double u, lo, pt, hi;
        char c;
        std::string contrast;
        std::istringstream row(line);
        std::getline(row, contrast, ',');
        row >> u >> c >> lo >> c >> pt >> c >> hi;
        EXPECT_LE(lo, hi) << line;
        EXPECT_LT(u, u_hat) << line;
        ++rows;
    }
    EXPECT_GT(rows, 30u);
}

TEST_F(Cli, Bounds) {
    ASSERT_EQ(run("simulate --design 1 --n 10000 --seed 5 --out " + path("sim")), 0);
    const std::string data = " --data " + path("sim/data.csv");
    ASSERT_EQ(run("bounds" + data + " --u 1.0 --u 0.4 --lattice 10 --out " + path("b")), 0);
    const auto doc = json::parse(slurp(root_ / "b" / "bounds.json"));
    EXPECT_EQ(doc["sets"][0]["case"], "i");
    bool contains = false;
    for (const auto& piece : doc["sets"][1]["pieces"]) {
        auto hi = [](const json& v) { return v.is_string() ? 1e300 : v.get<double>(); };
        contains = contains || (piece[0][0].get<double>() <= 0.8 && 0.8 <= hi(piece[0][1]) &&
                                piece[1][0].get<double>() <= 0.4 && 0.4 <= hi(piece[1][1]));
    }
    EXPECT_TRUE(contains);
    EXPECT_EQ(lines(root_ / "b" / "lattice_0.csv"), 101u);

    EXPECT_EQ(run("bounds" + data + " --u 0.1 --out " + path("c")), 2);
    EXPECT_NE(slurp(root_ / "stderr").find("estimate"), std::string::npos);
}

TEST_F(Cli, MonteCarloWithCoverage) {
    ASSERT_EQ(run("mc --design 1 --n 2000 --reps 50 --boot-draws 10 --threads 2 --out " + path("mc")), 0);
    for (const char* f : {"mc_summary.csv", "mc_replicates.csv", "u_hat_histogram.csv", "coverage.csv"})
        EXPECT_TRUE(fs::exists(root_ / "mc" / f)) << f;
    EXPECT_EQ(lines(root_ / "mc" / "mc_replicates.csv"), 51u);
}

TEST_F(Cli, ConfigOverridesFlags) {
    std::ofstream(path("cfg.json")) << R"({"design": 1, "n": 50, "seed": 3})";
    ASSERT_EQ(run("simulate --design 2 --n 999 --config " + path("cfg.json") + " --out " + path("s")), 0);
    EXPECT_EQ(lines(root_ / "s" / "data.csv"), 51u);
    const auto manifest = json::parse(slurp(root_ / "s" / "manifest.json"));
    EXPECT_EQ(manifest["config"]["design"], 1);
}
