// End-to-end checks of the installed CLI: exit codes, output files, and
// byte-identical reruns. The binary path and the shipped problem files come
// in through compile definitions.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kBin = EXITLIM_BIN;
const fs::path kProblems = EXITLIM_PROBLEMS;

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("exitlim_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("analyze: constant field hits the plane at T = 1") {
  const fs::path out = scratch_dir() / "analyze";
  REQUIRE(run("analyze --problem " + (kProblems / "constant_field.json").string() +
              " --out " + out.string()) == 0);
  const auto flow = nlohmann::json::parse(slurp(out / "flow.json"));
  CHECK(std::abs(flow["T"].get<double>() - 1.0) <= 1e-8);
  CHECK(std::abs(flow["z"][0].get<double>() - 1.0) <= 1e-8);
  CHECK(std::abs(flow["z"][1].get<double>()) <= 1e-8);
  CHECK(flow["margin"].get<double>() == doctest::Approx(1.0));
  const auto law = nlohmann::json::parse(slurp(out / "limit_law.json"));
  CHECK(law["alpha"].get<double>() == 1.0);
  CHECK(law["active"]["noise"].get<bool>());
  CHECK(std::abs(law["time_law"]["var"].get<double>() - 1.0) <= 1e-6);
  CHECK(law["schema_version"].get<int>() == 1);
}

TEST_CASE("analyze: missing problem file exits 2") {
  CHECK(run("analyze --problem " + (kProblems / "no_such_file.json").string()) == 2);
}

TEST_CASE("analyze: malformed config exits 2") {
  const fs::path bad = scratch_dir() / "bad.json";
  std::ofstream(bad) << "{\"dim\": 2, \"b\": [\"1 +* 2\", \"0\"]}";
  CHECK(run("analyze --problem " + bad.string()) == 2);
}

TEST_CASE("analyze: hypothesis failures exit 3") {
  // Initial point sits on the surface: tangential-crossing class.
  const fs::path tangent = scratch_dir() / "tangent.json";
  std::ofstream(tangent) << R"({
    "dim": 2, "b": ["1", "0"], "sigma": [["1","0"],["0","1"]],
    "alpha1": 1.0, "alpha2": 1.0, "x0": [0.0, 0.0], "xi": {"type": "zero"},
    "surface": "x2", "bbox": {"lo": [-2,-2], "hi": [2,2]}, "t_max": 1.0})";
  CHECK(run("analyze --problem " + tangent.string()) == 3);

  // The orbit never reaches the surface before t_max.
  const fs::path nohit = scratch_dir() / "nohit.json";
  std::ofstream(nohit) << R"({
    "dim": 2, "b": ["1", "0"], "sigma": [["1","0"],["0","1"]],
    "alpha1": 1.0, "alpha2": 1.0, "x0": [0.0, 0.0], "xi": {"type": "zero"},
    "surface": "x1 - 100", "bbox": {"lo": [-2,-2], "hi": [200,2]}, "t_max": 1.0})";
  CHECK(run("analyze --problem " + nohit.string()) == 3);
}

TEST_CASE("simulate: identical argv and seed give byte-identical CSV") {
  const fs::path out1 = scratch_dir() / "sim1";
  const fs::path out2 = scratch_dir() / "sim2";
  const std::string base = "simulate --problem " +
                           (kProblems / "constant_field.json").string() +
                           " --eps 0.1 --n 64 --seed 99 --jobs 2 --out ";
  REQUIRE(run(base + out1.string()) == 0);
  REQUIRE(run(base + out2.string()) == 0);
  CHECK(slurp(out1 / "ensemble.csv") == slurp(out2 / "ensemble.csv"));
  CHECK(slurp(out1 / "summary.json") == slurp(out2 / "summary.json"));

  const std::string csv = slurp(out1 / "ensemble.csv");
  CHECK(csv.rfind("path_seed,status,tau,x_exit_1,x_exit_2,u,pib_w,pim_w_1\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(out1 / "summary.json"));
  CHECK(summary["counts"]["exited"].get<int>() == 64);
  CHECK(summary["ks"]["time"].get<double>() < 0.5);
}

TEST_CASE("simulate: an eps ladder writes one file pair per rung") {
  const fs::path out = scratch_dir() / "ladder";
  REQUIRE(run("simulate --problem " + (kProblems / "constant_field.json").string() +
              " --eps 0.2 --eps 0.1 --n 16 --seed 5 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "ensemble_eps0.2.csv"));
  CHECK(fs::exists(out / "ensemble_eps0.1.csv"));
  CHECK(fs::exists(out / "summary_eps0.2.json"));
  CHECK(fs::exists(out / "summary_eps0.1.json"));
}

TEST_CASE("conditioned: summary carries the closed-form anchors") {
  const fs::path out = scratch_dir() / "cond";
  REQUIRE(run("conditioned --problem " + (kProblems / "conditioned_linear.json").string() +
              " --method htransform --eps 0.2 --n 100 --seed 11 --out " + out.string()) == 0);
  const auto s = nlohmann::json::parse(slurp(out / "conditioned_summary.json"));
  CHECK(std::abs(s["T0"].get<double>() - std::log(2.0)) <= 1e-9);
  CHECK(std::abs(s["limit_variance"].get<double>() - 0.375) <= 1e-9);
  CHECK(s.contains("clamp_events"));
  CHECK(fs::exists(out / "tau.csv"));
}

TEST_CASE("conditioned: positive drift exits 3") {
  const fs::path bad = scratch_dir() / "bad1d.json";
  std::ofstream(bad) << R"({"b": "x1", "sigma": "1", "a1": 0.5, "a2": 2.0, "x0": 1.0})";
  CHECK(run("conditioned --problem " + bad.string() + " --method htransform --eps 0.2") == 3);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("analyze") == 2);                  // missing --problem
  CHECK(run("simulate --problem x.json") == 2);  // missing --eps
  CHECK(run("unknown-subcommand") == 2);
}
