// End-to-end checks of the command line binary. The path to the built tool
// arrives in TRIMFIT_BIN; every invocation runs through the shell with stdout
// and stderr captured into files.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "support.hpp"

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const testsup::TempDir& dir, const std::string& args) {
  const char* bin = std::getenv("TRIMFIT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "TRIMFIT_BIN must point at the built binary");
  const std::string out_file = dir.file("stdout.txt");
  const std::string err_file = dir.file("stderr.txt");
  const std::string cmd =
      std::string("\"") + bin + "\" " + args + " >\"" + out_file + "\" 2>\"" + err_file + "\"";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  CliResult res;
  res.exit_code = WEXITSTATUS(rc);
  res.out = testsup::read_file(out_file);
  res.err = testsup::read_file(err_file);
  return res;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

// Three groups, four observations each, exact line y = 1 + 2 x plus group
// shifts; one row of group c is pushed far off the line.
void write_linear_fixture(const testsup::TempDir& dir, double inlier_fraction,
                          int max_outer = -1) {
  std::string csv = "group,y,se,x\n";
  const char* ids[3] = {"a", "b", "c"};
  const double shift[3] = {0.5, -0.3, 0.1};
  for (int g = 0; g < 3; ++g)
    for (int x = 0; x < 4; ++x) {
      double y = 1.0 + 2.0 * x + shift[g];
      if (g == 2 && x == 3) y += 50.0;
      csv += std::string(ids[g]) + "," + g17(y) + ",0.5," + g17(double(x)) + "\n";
    }
  testsup::write_file(dir.file("data.csv"), csv);

  std::string cfg = std::string("{\n") +
                    "  \"data\": {\"path\": \"data.csv\", \"se_column\": \"se\"},\n" +
                    "  \"model\": {\"type\": \"linear\", \"columns\": [\"x\"]},\n" +
                    "  \"inlier_fraction\": " + g17(inlier_fraction) + ",\n" +
                    (max_outer >= 0
                         ? "  \"solver\": {\"max_outer\": " + std::to_string(max_outer) + "},\n"
                         : std::string()) +
                    "  \"seed\": 42\n}\n";
  testsup::write_file(dir.file("config.json"), cfg);
}

// Exact increasing risk curve 1 + t/2 observed in logs; anchored quadratic
// spline with one interior knot.
void write_spline_fixture(const testsup::TempDir& dir) {
  std::string csv = "group,y,se,exposure\n";
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 4; ++i) {
      const double t = 0.5 + g * 2.0 + i * 0.5;
      csv += std::string(g ? "s2" : "s1") + "," + g17(std::log(1.0 + 0.5 * t)) + ",0.2," +
             g17(t) + "\n";
    }
  testsup::write_file(dir.file("risk.csv"), csv);

  const std::string cfg = R"({
  "data": {"path": "risk.csv", "se_column": "se"},
  "model": {
    "type": "log_spline",
    "exposure_column": "exposure",
    "spline": {
      "degree": 2,
      "domain": [0.0, 4.0],
      "interior_knots": [2.0],
      "shapes": ["monotone_increasing"],
      "anchor_exposure": 0.0
    }
  },
  "fixed_gamma": [0.0],
  "theta0": {"beta": [1.0, 1.0, 1.0, 1.0], "gamma": [0.0]},
  "seed": 7
}
)";
  testsup::write_file(dir.file("spline.json"), cfg);
}

// Smallest sensible dataset for bootstrap wall-time bound tests.
void write_micro_fixture(const testsup::TempDir& dir) {
  const std::string csv =
      "group,y,se,x\n"
      "a,1.0,0.4,0.0\n"
      "a,2.1,0.4,1.0\n"
      "b,0.9,0.4,0.0\n"
      "b,2.0,0.4,1.0\n";
  testsup::write_file(dir.file("micro.csv"), csv);
  const std::string cfg = R"({
  "data": {"path": "micro.csv", "se_column": "se"},
  "model": {"type": "linear", "columns": ["x"]},
  "fixed_gamma": [0.25],
  "seed": 3
}
)";
  testsup::write_file(dir.file("micro.json"), cfg);
}

}  // namespace

TEST_CASE("validate accepts a clean run and reports findings otherwise") {
  testsup::TempDir dir;
  write_linear_fixture(dir, 11.0 / 12.0);
  const CliResult ok = run_cli(dir, "validate --config \"" + dir.file("config.json") + "\"");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("ok: 3 groups, 12 observations") != std::string::npos);

  write_linear_fixture(dir, 1.5);
  const CliResult bad = run_cli(dir, "validate --config \"" + dir.file("config.json") + "\"");
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("inlier_fraction must be in (0,1]") != std::string::npos);
}

TEST_CASE("fit writes fit.json and flags the planted outlier") {
  testsup::TempDir dir;
  write_linear_fixture(dir, 11.0 / 12.0);
  const std::string out = dir.file("out");
  const CliResult res = run_cli(
      dir, "fit --config \"" + dir.file("config.json") + "\" --out \"" + out + "\"");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("converged") != std::string::npos);
  CHECK(res.out.find("1 outliers flagged") != std::string::npos);

  const std::string fit = testsup::read_file(out + "/fit.json");
  CHECK(fit.find("\"converged\":true") != std::string::npos);
  CHECK(fit.find("\"h\":11") != std::string::npos);
  CHECK(fit.find("\"group\":\"c\",\"group_index\":2,\"row\":3") != std::string::npos);
  CHECK(fit.find("\"seed\":42") != std::string::npos);
  CHECK(fit.find("\"stop_reason\"") != std::string::npos);
  CHECK(fit.find("\"wellposedness\"") != std::string::npos);
  // linear models have no exposure curve
  CHECK_FALSE(std::filesystem::exists(out + "/curve.csv"));
}

TEST_CASE("seed flag overrides the config and out directories are created") {
  testsup::TempDir dir;
  write_linear_fixture(dir, 1.0);
  const std::string out = dir.file("deep/nested/out");
  const CliResult res = run_cli(dir, "fit --config \"" + dir.file("config.json") +
                                         "\" --seed 5 --out \"" + out + "\"");
  CHECK(res.exit_code == 0);
  const std::string fit = testsup::read_file(out + "/fit.json");
  CHECK(fit.find("\"seed\":5") != std::string::npos);
}

TEST_CASE("config and data errors exit with code 2") {
  testsup::TempDir dir;
  testsup::write_file(dir.file("missing.json"),
                      "{\"data\": {\"path\": \"nope.csv\"}, \"model\": {\"type\": \"linear\", "
                      "\"columns\": [\"x\"]}}\n");
  const CliResult missing =
      run_cli(dir, "fit --config \"" + dir.file("missing.json") + "\"");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("error") != std::string::npos);

  write_linear_fixture(dir, 1.5);
  const CliResult bad_frac = run_cli(dir, "fit --config \"" + dir.file("config.json") +
                                              "\" --out \"" + dir.file("o2") + "\"");
  CHECK(bad_frac.exit_code == 2);
  CHECK(bad_frac.err.find("inlier_fraction must be in (0,1]") != std::string::npos);

  testsup::write_file(dir.file("broken.json"), "{not json\n");
  const CliResult broken =
      run_cli(dir, "validate --config \"" + dir.file("broken.json") + "\"");
  CHECK(broken.exit_code == 2);

  const CliResult no_args = run_cli(dir, "fit");
  CHECK(no_args.exit_code == 2);
}

TEST_CASE("a fit that cannot converge exits with code 3") {
  testsup::TempDir dir;
  write_linear_fixture(dir, 0.9, 0);  // outer loop disabled: cannot reach stationarity
  const CliResult res = run_cli(dir, "fit --config \"" + dir.file("config.json") +
                                         "\" --out \"" + dir.file("o3") + "\"");
  CHECK(res.exit_code == 3);
  CHECK(res.out.find("not converged") != std::string::npos);
}

TEST_CASE("unknown benchmark mode exits with code 2") {
  testsup::TempDir dir;
  const CliResult res = run_cli(dir, "benchmark weekly --replications 1");
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("unknown benchmark mode 'weekly'") != std::string::npos);
}

TEST_CASE("benchmark runs are reproducible byte for byte") {
  testsup::TempDir dir;
  const std::string flags = " --replications 2 --seed 7 --threads 2 --out \"";
  const CliResult a = run_cli(dir, "benchmark meta" + flags + dir.file("b1") + "\"");
  CHECK(a.exit_code == 0);
  CHECK(a.out.find("tpf") != std::string::npos);
  const CliResult b = run_cli(dir, "benchmark meta" + flags + dir.file("b2") + "\"");
  CHECK(b.exit_code == 0);

  const std::string csv_a = testsup::read_file(dir.file("b1/benchmark_meta.csv"));
  const std::string csv_b = testsup::read_file(dir.file("b2/benchmark_meta.csv"));
  REQUIRE(!csv_a.empty());
  CHECK(csv_a == csv_b);
  CHECK(csv_a.find("replication,converged,beta0,beta1,re_sd,sigma") == 0);
  CHECK(csv_a.find("summary") != std::string::npos);
  CHECK(count_lines(csv_a) == 2 + 2);  // header + 2 replications + summary
}

TEST_CASE("bootstrap writes samples and quantiles deterministically") {
  testsup::TempDir dir;
  write_micro_fixture(dir);
  const std::string base =
      "bootstrap --config \"" + dir.file("micro.json") + "\" --replicates 10 --seed 9 ";
  const CliResult a = run_cli(dir, base + "--threads 2 --out \"" + dir.file("r1") + "\"");
  CHECK(a.exit_code == 0);
  CHECK(a.out.find("replicates converged") != std::string::npos);

  const CliResult b = run_cli(dir, base + "--threads 1 --out \"" + dir.file("r2") + "\"");
  CHECK(b.exit_code == 0);

  const std::string csv = testsup::read_file(dir.file("r1/bootstrap.csv"));
  CHECK(csv.find("replicate,converged,beta_0,beta_1,gamma_0") == 0);
  CHECK(count_lines(csv) == 11);
  CHECK(csv == testsup::read_file(dir.file("r2/bootstrap.csv")));

  const std::string q = testsup::read_file(dir.file("r1/quantiles.json"));
  CHECK(q.find("\"columns\":[\"beta_0\",\"beta_1\",\"gamma_0\"]") != std::string::npos);
  CHECK(q.find("\"q025\"") != std::string::npos);
  CHECK(q.find("\"q500\"") != std::string::npos);
  CHECK(q.find("\"q975\"") != std::string::npos);
  CHECK(q == testsup::read_file(dir.file("r2/quantiles.json")));
  CHECK(testsup::read_file(dir.file("r1/fit.json")) ==
        testsup::read_file(dir.file("r2/fit.json")));
}

TEST_CASE("bootstrap defaults to one thousand replicates") {
  testsup::TempDir dir;
  write_micro_fixture(dir);
  const CliResult res = run_cli(dir, "bootstrap --config \"" + dir.file("micro.json") +
                                         "\" --threads 0 --out \"" + dir.file("big") + "\"");
  CHECK(res.exit_code == 0);
  CHECK(count_lines(testsup::read_file(dir.file("big/bootstrap.csv"))) == 1001);
}

TEST_CASE("spline fits emit an exposure curve") {
  testsup::TempDir dir;
  write_spline_fixture(dir);
  const CliResult res = run_cli(dir, "fit --config \"" + dir.file("spline.json") +
                                         "\" --out \"" + dir.file("sp") + "\"");
  CHECK(res.exit_code == 0);
  const std::string curve = testsup::read_file(dir.file("sp/curve.csv"));
  CHECK(curve.find("exposure,risk\n") == 0);
  CHECK(count_lines(curve) == 102);  // header + 101 grid points
  // the final grid point sits at the domain edge with risk near 1 + 4/2
  const size_t last = curve.rfind('\n', curve.size() - 2);
  const std::string tail = curve.substr(last + 1);
  CHECK(tail.rfind("4,", 0) == 0);
  const double risk = std::stod(tail.substr(2));
  CHECK(std::abs(risk - 3.0) <= 1e-2);
}

TEST_CASE("spline bootstrap adds uncertainty bands to the curve") {
  testsup::TempDir dir;
  write_spline_fixture(dir);
  const CliResult res = run_cli(dir, "bootstrap --config \"" + dir.file("spline.json") +
                                         "\" --replicates 8 --seed 2 --out \"" +
                                         dir.file("spb") + "\"");
  CHECK(res.exit_code == 0);
  const std::string curve = testsup::read_file(dir.file("spb/curve.csv"));
  CHECK(curve.find("exposure,risk,fe_lo,fe_hi,het_lo,het_hi\n") == 0);
  CHECK(count_lines(curve) == 102);
  CHECK(count_lines(testsup::read_file(dir.file("spb/bootstrap.csv"))) == 9);
}

TEST_CASE("help exits cleanly") {
  testsup::TempDir dir;
  const CliResult res = run_cli(dir, "--help");
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("fit") != std::string::npos);
}
