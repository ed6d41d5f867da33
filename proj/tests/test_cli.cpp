#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "sandpile/field_io.hpp"
#include "sandpile/report_json.hpp"
#include "test_util.hpp"

using namespace sandpile;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = sandpile::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, sandpile::cli::kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, sandpile::cli::kUsage);
  EXPECT_EQ(run_cli({"solve"}).code, sandpile::cli::kUsage);
  EXPECT_EQ(run_cli({"--help"}).code, sandpile::cli::kOk);
  const CliRun r = run_cli({"verify", "nosuchsuite", "--out", test::scratch_dir("cli_sel").string()});
  EXPECT_EQ(r.code, sandpile::cli::kUsage);
  EXPECT_NE(r.err.find("nosuchsuite"), std::string::npos);
  EXPECT_EQ(run_cli({"make-problem", "nosuch", "--out", test::scratch_dir("cli_mp").string()}).code, sandpile::cli::kUsage);
}

TEST(Cli, SolveBenchmarkWritesArtifacts) {
  const fs::path dir = test::scratch_dir("cli_solve");
  ASSERT_EQ(run_cli({"make-problem", "bench1d", "--out", dir.string()}).code, sandpile::cli::kOk);
  const CliRun r = run_cli({"solve", "--config", (dir / "config.ini").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, sandpile::cli::kOk) << r.err;
  const nlohmann::json rep = read_json(dir / "report.json");
  EXPECT_EQ(rep["format_version"], kFormatVersion);
  EXPECT_EQ(rep["status"], "converged");
  EXPECT_TRUE(rep.contains("config"));
  EXPECT_LE(rep["stages"].back()["final_feasibility"].get<double>(), 1e-3);
  EXPECT_EQ(read_nodal_field(dir / "u.field").size(), 63u);
  const std::string csv = slurp(dir / "plot.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,u,grad_norm,phi");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 65);
}

TEST(Cli, ZeroSourceGivesZeroField) {
  const fs::path dir = test::scratch_dir("cli_zero");
  write_text(dir / "c.ini", "[problem]\ndim = 2\nn = 7\nsource = 0\n[output]\nplot =\n");
  ASSERT_EQ(run_cli({"solve", "--config", (dir / "c.ini").string(), "--out", dir.string()}).code, sandpile::cli::kOk);
  const NodalField u = read_nodal_field(dir / "u.field");
  for (double v : u.values()) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(fs::exists(dir / "plot.csv"));
}

TEST(Cli, MalformedConfigExitsTwoWithLine) {
  const fs::path dir = test::scratch_dir("cli_bad");
  write_text(dir / "c.ini", "[problem]\nn = 7\nsoruce = 1\n");
  const CliRun r = run_cli({"solve", "--config", (dir / "c.ini").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, sandpile::cli::kUsage);
  EXPECT_NE(r.err.find("c.ini:3:"), std::string::npos) << r.err;
}

TEST(Cli, SolverFailureExitsThreeAndKeepsReport) {
  const fs::path dir = test::scratch_dir("cli_fail");
  write_text(dir / "c.ini", "[problem]\nn = 63\nsource = 5\n[solver]\ngamma = 1e4\nmax_iter = 2\n");
  const CliRun r = run_cli({"solve", "--config", (dir / "c.ini").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, sandpile::cli::kSolverFailure);
  const nlohmann::json rep = read_json(dir / "report.json");
  EXPECT_EQ(rep["status"], "failed");
  EXPECT_FALSE(rep["failure"].get<std::string>().empty());
  EXPECT_FALSE(fs::exists(dir / "u.field"));
}

TEST(Cli, OptimizeMissingTargetFile) {
  const fs::path dir = test::scratch_dir("cli_missing");
  write_text(dir / "c.ini", "[problem]\nn = 15\n[control]\ntarget = @nowhere.field\n");
  const CliRun r = run_cli({"optimize", "--config", (dir / "c.ini").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, sandpile::cli::kUsage);
  EXPECT_NE(r.err.find("nowhere.field"), std::string::npos);
}

TEST(Cli, OptimizeStationaryStart) {
  const fs::path dir = test::scratch_dir("cli_stationary");
  write_text(dir / "c.ini", "[problem]\nn = 15\n[control]\ntarget = 0\n");
  const CliRun r = run_cli({"optimize", "--config", (dir / "c.ini").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, sandpile::cli::kOk) << r.err;
  const nlohmann::json t = read_json(dir / "trace.json");
  EXPECT_EQ(t["status"], "converged");
  EXPECT_EQ(t["outer"].size(), 1u);
}

TEST(Cli, TrackingTraceIsMonotone) {
  const fs::path dir = test::scratch_dir("cli_tracking");
  ASSERT_EQ(run_cli({"make-problem", "tracking", "--out", dir.string()}).code, sandpile::cli::kOk);
  ASSERT_TRUE(fs::exists(dir / "target.field"));
  const CliRun r = run_cli({"optimize", "--config", (dir / "config.ini").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, sandpile::cli::kOk) << r.err;
  const nlohmann::json t = read_json(dir / "trace.json");
  const auto& outer = t["outer"];
  ASSERT_GT(outer.size(), 2u);
  for (std::size_t k = 1; k < outer.size(); ++k) EXPECT_LT(outer[k]["j"].get<double>(), outer[k - 1]["j"].get<double>());
  EXPECT_LE(outer.back()["j"].get<double>(), 0.2 * outer.front()["j"].get<double>());
  EXPECT_TRUE(fs::exists(dir / "f_opt.field"));
  EXPECT_TRUE(t.contains("config"));
}

TEST(Cli, RepeatedSolvesAreBitIdentical) {
  const fs::path a = test::scratch_dir("cli_det_a"), b = test::scratch_dir("cli_det_b");
  ASSERT_EQ(run_cli({"make-problem", "bench2d-incremental", "--out", a.string()}).code, sandpile::cli::kOk);
  for (const fs::path& d : {a, b}) {
    ASSERT_EQ(run_cli({"solve", "--config", (a / "config.ini").string(), "--out", d.string(), "--threads", "2"}).code,
              sandpile::cli::kOk);
  }
  EXPECT_EQ(slurp(a / "u.field"), slurp(b / "u.field"));
  EXPECT_EQ(slurp(a / "plot.csv"), slurp(b / "plot.csv"));
  EXPECT_EQ(without_timing(read_json(a / "report.json")), without_timing(read_json(b / "report.json")));
}

TEST(Cli, VerifyWritesVerdict) {
  const fs::path dir = test::scratch_dir("cli_verify");
  const CliRun r = run_cli({"verify", "penalty", "--seed", "3", "--out", dir.string()});
  EXPECT_EQ(r.code, sandpile::cli::kOk) << r.out;
  const nlohmann::json v = read_json(dir / "verdict.json");
  EXPECT_EQ(v["seed"], 3);
  EXPECT_EQ(v["selector"], "penalty");
  EXPECT_TRUE(v["passed"].get<bool>());
  EXPECT_FALSE(v["checks"].empty());
}
