#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "wqed/io.hpp"

namespace fs = std::filesystem;
using namespace wqed;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("wqed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args, const std::string& sub = "out") const
    {
        const auto out = dir_ / sub;
        fs::create_directories(out);
        const std::string cmd = std::string(WQED_CLI_PATH) + " " + args + " --out-dir " + out.string() +
                                " > " + (dir_ / "stdout.txt").string() + " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const fs::path& p) const
    {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string stderr_text() const { return read(dir_ / "stderr.txt"); }
    fs::path path(const std::string& rel) const { return dir_ / rel; }

    void write(const std::string& rel, const std::string& text) const
    {
        std::ofstream out(dir_ / rel);
        out << text;
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, SimulateWritesTracesAndManifest)
{
    ASSERT_EQ(run("simulate --t_end_ns 200"), 0) << stderr_text();
    const auto bloch = read_csv(path("out/bloch.csv"));
    EXPECT_EQ(bloch.rows.size(), 2001u);
    const auto field = field_from_csv(read_csv(path("out/field.csv")));
    EXPECT_EQ(field.size(), 2001u);
    const auto m = nlohmann::json::parse(read(path("out/manifest.json")));
    EXPECT_EQ(m.at("command"), "simulate");
    EXPECT_EQ(m.at("parameters").at("t_end_ns"), "200");
    bool found = false;
    for (const auto& o : m.at("outputs"))
        if (o.at("file") == "field.csv") {
            found = true;
            EXPECT_EQ(o.at("sha256"), sha256_file(path("out/field.csv")));
        }
    EXPECT_TRUE(found);
}

TEST_F(Cli, OutputsIndependentOfThreadCount)
{
    ASSERT_EQ(run("scan --detuning_points 5 --detuning_range -10,10 --threads 1", "a"), 0) << stderr_text();
    ASSERT_EQ(run("scan --detuning_points 5 --detuning_range -10,10 --threads 3", "b"), 0) << stderr_text();
    for (const char* f : {"scan_time.csv", "scan_spec.csv", "dressed.csv"})
        EXPECT_EQ(sha256_file(path(std::string("a/") + f)), sha256_file(path(std::string("b/") + f))) << f;
    auto ma = nlohmann::json::parse(read(path("a/manifest.json")));
    auto mb = nlohmann::json::parse(read(path("b/manifest.json")));
    EXPECT_EQ(ma.at("outputs"), mb.at("outputs"));
}

TEST_F(Cli, ZeroDriveGivesZeroRadiation)
{
    ASSERT_EQ(run("simulate --omega_r_mhz 0 --t_end_ns 150"), 0) << stderr_text();
    const auto rad = field_from_csv(read_csv(path("out/radiation.csv")));
    for (const auto& v : rad.samples)
        ASSERT_EQ(std::abs(v), 0.0);
}

TEST_F(Cli, SinglePointScanEqualsSimulate)
{
    ASSERT_EQ(run("scan --detuning_range 4,4 --detuning_points 1 --detuning_mhz 4 --t_end_ns 200", "scan"), 0)
        << stderr_text();
    ASSERT_EQ(run("simulate --detuning_mhz 4 --t_end_ns 200", "sim"), 0) << stderr_text();
    const auto scan = scan_from_csv(read_csv(path("scan/scan_time.csv")));
    const auto sim = field_from_csv(read_csv(path("sim/radiation.csv")));
    ASSERT_EQ(scan.size(), 1u);
    EXPECT_EQ(scan.radiation[0].samples, sim.samples);
}

TEST_F(Cli, CorrelateWithoutDriveIsZero)
{
    ASSERT_EQ(run("correlate --omega_r_mhz 0 --dt_ns 0.5 --t_end_ns 200 --g1_stride 4"), 0) << stderr_text();
    const auto g = read_csv(path("out/g1.csv"));
    ASSERT_FALSE(g.rows.empty());
    for (const auto& r : g.rows) {
        ASSERT_EQ(r[2], 0.0);
        ASSERT_EQ(r[3], 0.0);
    }
}

TEST_F(Cli, CorrelateMemoryCapIsEnforced)
{
    EXPECT_EQ(run("correlate --memory_cap_mb 1"), 2);
    EXPECT_NE(stderr_text().find("memory_cap_mb"), std::string::npos);
}

TEST_F(Cli, AuditReportsBalance)
{
    ASSERT_EQ(run("audit"), 0) << stderr_text();
    const auto j = nlohmann::json::parse(read(path("out/energy.json")));
    const auto r = energy_report_from_json(j);
    EXPECT_GT(r.input_photons, 0.0);
    EXPECT_NEAR(r.deficit, r.input_photons - r.transmitted_photons, 1e-12);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence)
{
    write("run.cfg", "omega_r_mhz = 10\ndetuning_mhz = 3\n");
    ASSERT_EQ(run("simulate --config " + path("run.cfg").string() + " --detuning_mhz 5"), 0) << stderr_text();
    const auto m = nlohmann::json::parse(read(path("out/manifest.json")));
    EXPECT_EQ(m.at("parameters").at("omega_r_mhz"), "10");
    EXPECT_EQ(m.at("parameters").at("detuning_mhz"), "5");
    EXPECT_FALSE(m.at("inputs").empty());
}

TEST_F(Cli, UsageErrorsExitWithTwo)
{
    EXPECT_EQ(run("simulate --no-such-flag 1"), 2);
    write("bad.cfg", "warp_factor = 9\n");
    EXPECT_EQ(run("simulate --config " + path("bad.cfg").string()), 2);
    EXPECT_NE(stderr_text().find("warp_factor"), std::string::npos);
    EXPECT_EQ(run("simulate --gamma1_mhz abc"), 2);
    EXPECT_EQ(run("simulate --dt_ns 3"), 2);
    EXPECT_NE(stderr_text().find("dt_ns"), std::string::npos);
    EXPECT_EQ(run("scan --detuning_points 0"), 2);
    EXPECT_EQ(run("fit --data " + path("missing.csv").string()), 2);
    EXPECT_EQ(run("bogus"), 2);
}

TEST_F(Cli, CalibrateReportsBothMethods)
{
    ASSERT_EQ(run("calibrate"), 0) << stderr_text();
    const auto j = nlohmann::json::parse(read(path("out/calibration.json")));
    EXPECT_TRUE(j.contains("kappa"));
    EXPECT_TRUE(j.contains("rabi_method"));
    EXPECT_TRUE(j.contains("amplitude_ratio_method"));
}

TEST_F(Cli, FitRecoversSyntheticParameters)
{
    write("init.cfg", "omega_r_mhz = 17\ngamma1_mhz = 1.0\ngamma_phi_mhz = 0.5\n");
    ASSERT_EQ(run("fit --t_end_ns 200 --init " + path("init.cfg").string()), 0) << stderr_text();
    const auto j = nlohmann::json::parse(read(path("out/fit.json")));
    EXPECT_TRUE(j.at("converged").get<bool>());
    EXPECT_NEAR(j.at("parameters").at("omega_r_mhz").get<double>(), 19.8, 0.02);
    EXPECT_NEAR(j.at("parameters").at("gamma1_mhz").get<double>(), 0.9, 0.005);
    EXPECT_NEAR(j.at("parameters").at("gamma_phi_mhz").get<double>(), 0.6, 0.01);
    const auto data = scan_from_csv(read_csv(path("out/fit_data.csv")));
    EXPECT_EQ(data.size(), 9u);
}
