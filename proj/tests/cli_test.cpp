#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracstep/cli.hpp"

using namespace fracstep;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() / ("fracstep_cli_" + tag + "_" +
                                             std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string sub(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    fs::path path_;
};

struct CliRun {
    int exit_code;
    std::string out;
    std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_main(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}   // namespace

TEST(Cli, HelpExitsZero) {
    const CliRun r = run_cli({"--help"});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.out.find("solve"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsConfigError) {
    EXPECT_EQ(run_cli({}).exit_code, 2);
    EXPECT_EQ(run_cli({"--n", "4"}).exit_code, 2);
}

TEST(Cli, UnknownFlagIsConfigError) {
    const CliRun r = run_cli({"solve", "--frobnicate"});
    EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, SolveWritesSolutionAndMetadata) {
    TempDir dir("solve");
    const CliRun r = run_cli({"solve", "--n", "4", "--alpha", "0.5", "--N", "10",
                              "--out", dir.sub("out"), "--cache", dir.sub("cache"),
                              "--dump-mesh"});
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir.sub("out") + "/solution.csv"));
    EXPECT_TRUE(fs::exists(dir.sub("out") + "/run.json"));
    EXPECT_TRUE(fs::exists(dir.sub("out") + "/vertices.csv"));
    EXPECT_TRUE(fs::exists(dir.sub("out") + "/triangles.csv"));

    const auto meta = nlohmann::json::parse(read_file(dir.sub("out") + "/run.json"));
    EXPECT_EQ(meta["command"], "solve");
    EXPECT_EQ(meta["config"]["n"], 4);
    EXPECT_GT(meta["config"]["lambda1"].get<double>(), 1.0);
    EXPECT_GT(meta["cg_iterations"].get<long>(), 0);
}

TEST(Cli, SolveRejectsDeltaAboveLambdaNamingBoth) {
    TempDir dir("delta");
    const CliRun r = run_cli({"solve", "--n", "4", "--preset", "constant_c", "--delta",
                              "100", "--out", dir.sub("out")});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("100"), std::string::npos);      // the rejected delta
    EXPECT_NE(r.err.find("lambda_1"), std::string::npos); // and the bound it broke
}

TEST(Cli, SigmaOptKeywordAccepted) {
    TempDir dir("sigopt");
    const CliRun r = run_cli({"solve", "--n", "4", "--scheme", "three", "--sigma",
                              "opt", "--alpha", "0.25", "--N", "8", "--init", "fine",
                              "--out", dir.sub("out"), "--cache", dir.sub("cache")});
    EXPECT_EQ(r.exit_code, 0) << r.err;
    const auto meta = nlohmann::json::parse(read_file(dir.sub("out") + "/run.json"));
    EXPECT_EQ(meta["config"]["sigma_requested"], "opt");
    EXPECT_NEAR(meta["config"]["sigma"].get<double>(), 1.5, 1e-15);
}

TEST(Cli, BadSigmaStringIsConfigError) {
    EXPECT_EQ(run_cli({"solve", "--sigma", "bogus"}).exit_code, 2);
    EXPECT_EQ(run_cli({"solve", "--scheme", "four"}).exit_code, 2);
    EXPECT_EQ(run_cli({"solve", "--init", "warp"}).exit_code, 2);
}

TEST(Cli, ReferenceCommandCachesAndReports) {
    TempDir dir("reference");
    const std::vector<std::string> args{"reference", "--n", "4", "--nref", "100",
                                        "--out", dir.sub("out"), "--cache",
                                        dir.sub("cache")};
    const CliRun first = run_cli(args);
    EXPECT_EQ(first.exit_code, 0) << first.err;
    EXPECT_NE(first.out.find("reference computed"), std::string::npos);
    const CliRun second = run_cli(args);
    EXPECT_EQ(second.exit_code, 0);
    EXPECT_NE(second.out.find("already cached"), std::string::npos);
}

TEST(Cli, ConvergenceWritesExactHeaderAndIsByteDeterministic) {
    TempDir dir("convergence");
    auto args = [&](const std::string& out) {
        return std::vector<std::string>{
            "convergence", "--n",     "4",           "--alpha", "0.5",
            "--sigma",     "0.5,1.0", "--N",         "10,20",   "--nref",
            "200",         "--out",   out,           "--cache", dir.sub("cache")};
    };
    const CliRun r1 = run_cli(args(dir.sub("out1")));
    EXPECT_EQ(r1.exit_code, 0) << r1.err;
    const CliRun r2 = run_cli(args(dir.sub("out2")));
    EXPECT_EQ(r2.exit_code, 0) << r2.err;

    const std::string csv1 = read_file(dir.sub("out1") + "/results.csv");
    const std::string csv2 = read_file(dir.sub("out2") + "/results.csv");
    EXPECT_EQ(csv1, csv2);
    EXPECT_EQ(csv1.substr(0, csv1.find('\n')),
              "scheme,init,m,alpha,sigma,N,eps1,eps2,order1,order2");
    // 2 sigmas x 2 Ns = 4 data rows
    EXPECT_EQ(std::count(csv1.begin(), csv1.end(), '\n'), 5);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    TempDir dir("config");
    const fs::path cfg_path = dir.path() / "run.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"n": 4, "alpha": 0.25, "N": 10, "preset": "constant_c",
                   "out": ")" << dir.sub("out") << R"(",
                   "cache": ")" << dir.sub("cache") << R"("})";
    }
    const CliRun r = run_cli({"solve", "--config", cfg_path.string(), "--n", "6"});
    EXPECT_EQ(r.exit_code, 0) << r.err;
    const auto meta = nlohmann::json::parse(read_file(dir.sub("out") + "/run.json"));
    EXPECT_EQ(meta["config"]["n"], 6);                       // flag wins
    EXPECT_NEAR(meta["config"]["alpha"].get<double>(), 0.25, 0.0);   // file value
    EXPECT_EQ(meta["config"]["preset"], "constant_c");
}

TEST(Cli, ConfigFileUnknownKeyRejected) {
    TempDir dir("badcfg");
    const fs::path cfg_path = dir.path() / "bad.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"n": 4, "grid": 5})";
    }
    const CliRun r = run_cli({"solve", "--config", cfg_path.string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("grid"), std::string::npos);
}

TEST(Cli, SpectrumWritesCsv) {
    TempDir dir("spectrum");
    const CliRun r = run_cli({"spectrum", "--n", "3", "--preset", "constant_c",
                              "--out", dir.sub("out")});
    EXPECT_EQ(r.exit_code, 0) << r.err;
    const std::string csv = read_file(dir.sub("out") + "/spectrum.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,lambda");
    // smallest eigenvalue of the constant-reaction operator is 1
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_NE(line.find("1,"), std::string::npos);
}

TEST(Cli, OracleCheckPassesOnHealthyBuild) {
    const CliRun r = run_cli({"oracle-check", "--n", "8", "--alpha", "0.5"});
    EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("all checks passed"), std::string::npos);
    EXPECT_EQ(r.out.find("[FAIL]"), std::string::npos);
}
