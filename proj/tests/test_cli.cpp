// Drives the built `cryoamp` executable end to end.

#include "cryoamp/ivfit.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("cryoamp_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run(const std::string& args, const fs::path& dir) {
    const auto log = dir / "stdout.txt";
    const std::string cmd = std::string(CRYOAMP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, double> report(const fs::path& p) {
    std::map<std::string, double> out;
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        try {
            out[line.substr(0, a)] = std::stod(line.substr(a + 1, b - a - 1));
        } catch (...) {
        }
    }
    return out;
}

std::size_t rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST(Cli, FitIvRoundTripOnSyntheticData) {
    const auto dir = scratch("fit");
    ASSERT_EQ(run("synth-iv --out " + dir.string(), dir).code, 0);
    const auto r = run("fit-iv --input " + (dir / "iv_input.csv").string() + " --output " +
                           (dir / "iv_output.csv").string() + " --out " + dir.string(),
                       dir);
    ASSERT_EQ(r.code, 0) << r.out;
    auto rep = report(dir / "fit_report.csv");
    EXPECT_NEAR(rep["v_early"], 124.0, 0.005 * 124.0);
    EXPECT_NEAR(rep["beta_f"], 160.0, 1.6);
    EXPECT_NEAR(rep["v_teff"], 0.025, 0.00025);
    EXPECT_NEAR(rep["mu_f"], 4960.0, 0.02 * 4960.0);
    EXPECT_NE(slurp(dir / "fit_report.csv").find("verdict,usable"), std::string::npos);
    const auto p = cryoamp::device::default_transistor_params();
    EXPECT_NEAR(rep["i_sat"] / p.i_sat, 1.0, 0.01);
}

TEST(Cli, FitIvInjectedNdrHasDistinctExit) {
    const auto dir = scratch("ndr");
    auto ds = cryoamp::ivfit::generate_output_family(cryoamp::device::default_transistor_params(),
                                                     cryoamp::ivfit::standard_base_currents(),
                                                     cryoamp::ivfit::standard_vce_grid());
    for (auto& pt : ds.sweeps[6].points) {
        if (pt.v >= 2.0 && pt.v <= 2.1) pt.i *= 0.9;
    }
    {
        std::ofstream out(dir / "ndr.csv");
        cryoamp::ivfit::write_iv_dataset(out, ds);
    }
    const auto r = run("fit-iv --output " + (dir / "ndr.csv").string() + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 4) << r.out;
    EXPECT_NE(slurp(dir / "classification.csv").find("ndr,6,"), std::string::npos);
}

TEST(Cli, FitIvEmptyFileIsInputError) {
    const auto dir = scratch("empty");
    { std::ofstream out(dir / "empty.csv"); }
    EXPECT_EQ(run("fit-iv --output " + (dir / "empty.csv").string() + " --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("fit-iv --out " + dir.string(), dir).code, 2);
}

TEST(Cli, FitIvFlatDataIsNumericalFailure) {
    const auto dir = scratch("flat");
    {
        std::ofstream out(dir / "flat.csv");
        out << "i_b_A,v_ce_V,i_c_A\n";
        for (int k = 0; k < 3; ++k) {
            for (int v = 0; v <= 30; ++v) out << (3 + k) * 1e-7 << ',' << v * 0.1 << ',' << (3 + k) * 1.6e-5 << '\n';
        }
    }
    EXPECT_EQ(run("fit-iv --output " + (dir / "flat.csv").string() + " --out " + dir.string(), dir).code, 3);
}

TEST(Cli, OppReportsPowerAndBudgets) {
    const auto dir = scratch("opp");
    const auto r = run("opp --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.out;
    auto rep = report(dir / "operating_point.csv");
    EXPECT_GE(rep["power"], 70e-6);
    EXPECT_LE(rep["power"], 110e-6);
    EXPECT_EQ(rep["still_ok"], 1.0);
    EXPECT_EQ(rep["mixing_chamber_ok"], 0.0);
    EXPECT_NE(r.out.find("V_be"), std::string::npos);
}

TEST(Cli, S21SinglePointAndStages) {
    const auto dir = scratch("s21");
    ASSERT_EQ(run("s21 --f-min 1e6 --f-max 1e6 --points 50 --stage first --out " + dir.string(), dir).code, 0);
    EXPECT_EQ(rows(dir / "s21_first.csv"), 2u);
    EXPECT_EQ(slurp(dir / "s21_first.csv").substr(0, 12), "f_Hz,s21_dB\n");
    ASSERT_EQ(run("s21 --f-min 1e6 --f-max 1e8 --points 20 --out " + dir.string(), dir).code, 0);
    EXPECT_EQ(rows(dir / "s21_both.csv"), 21u);
    EXPECT_EQ(run("s21 --f-min 1e6 --f-max 1e5 --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("s21 --stage third --out " + dir.string(), dir).code, 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const auto dir = scratch("cfg");
    {
        std::ofstream out(dir / "bad.ini");
        out << "[device]\nnot_a_key = 3\n";
    }
    EXPECT_EQ(run("--config " + (dir / "bad.ini").string() + " opp --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("--config " + (dir / "missing.ini").string() + " opp --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(run("frobnicate", dir).code, 2);
}

TEST(Cli, HelpListsFlagsWithUnits) {
    const auto dir = scratch("help");
    const std::vector<std::pair<std::string, std::vector<std::string>>> expect{
        {"fit-iv", {"--input", "--output", "--window-min", "[V]", "[A]"}},
        {"opp", {"--config", "--seed", "--out"}},
        {"s21", {"--f-min", "[Hz]", "--stage"}},
        {"sweep", {"--axis", "--min", "[V for vbc, Hz for fm]"}},
        {"synth-iv", {"--noise", "[1]"}},
    };
    for (const auto& [cmd, needles] : expect) {
        const auto r = run(cmd + " --help", dir);
        EXPECT_EQ(r.code, 0) << cmd;
        for (const auto& n : needles) EXPECT_NE(r.out.find(n), std::string::npos) << cmd << " lacks " << n;
    }
}

TEST(Cli, SweepManifestReplaysBitIdentically) {
    const auto a = scratch("sweep_a");
    const auto b = scratch("sweep_b");
    const auto r = run("--seed 11 sweep --axis vbc --min 11.4 --max 11.8 --points 5 --out " + a.string(), a);
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_EQ(run("--config " + (a / "sweep_vbc.manifest").string() + " sweep --out " + b.string(), b).code, 0);
    EXPECT_EQ(slurp(a / "sweep_vbc.csv"), slurp(b / "sweep_vbc.csv"));
    EXPECT_EQ(slurp(a / "sweep_vbc.manifest"), slurp(b / "sweep_vbc.manifest"));
    EXPECT_EQ(slurp(a / "sweep_vbc.csv").substr(0, 22), "x_value,R_V,phase_rad\n");
    EXPECT_EQ(rows(a / "sweep_vbc.csv"), 6u);
}
