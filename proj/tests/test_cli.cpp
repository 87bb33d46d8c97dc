#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "rfh/config.hpp"
#include "rfh/io.hpp"

using namespace rfh;
namespace fs = std::filesystem;

namespace {

const double pi = std::acos(-1.0);

std::string binary() {
  const char* env = std::getenv("RFH_BIN");
  REQUIRE(env != nullptr);
  return env;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rfh_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& log) {
  const std::string cmd = "\"" + binary() + "\" " + args + " > \"" + log + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

json base_simulate_config() {
  return json{
      {"distribution", {{"kind", "fermi_zero"}, {"dim", 1}, {"mu", 1.0}}},
      {"potential", {{"kind", "gaussian"}, {"weight", -0.4}, {"width", 1.0}}},
      {"grid", {{"dim", 1}, {"N", 16}, {"L", 2.0 * pi}}},
      {"evolution", {{"dt", 0.05}, {"t_end", 0.5}, {"snapshots", 6}}},
      {"perturbation",
       {{"kind", "random_extra"}, {"amplitude", 0.01}, {"width", 1.0}, {"count", 2}}},
      {"norms", {"L2t:L2", "Linft:Hs(0.5)"}},
      {"seed", 42}};
}

}  // namespace

TEST_CASE("steady: exit 0, closed-form mass, re-parseable echo") {
  TempDir dir;
  json cfg{{"distribution", {{"kind", "fermi_zero"}, {"dim", 3}, {"mu", 1.0}}},
           {"potential", {{"kind", "point_mass"}, {"weight", -0.5}}},
           {"steady", {{"r_max", 40.0}, {"n", 300}}}};
  write_json(dir.file("cfg.json"), cfg);
  const int rc = run("steady --config " + dir.file("cfg.json") + " --out " +
                         dir.file("out"),
                     dir.file("log.txt"));
  CHECK(rc == 0);

  auto steady = read_json(dir.file("out/steady.json"));
  const double expect_norm = 4.0 * pi / 3.0;
  CHECK(std::abs(steady["norm_squared"].get<double>() - expect_norm) < 1e-8);
  CHECK(std::abs(steady["m"].get<double>() - (-0.5) * expect_norm) < 1e-8);
  CHECK(steady["dim"] == 3);

  auto rows = read_csv(dir.file("out/hf_profile.csv"));
  CHECK(rows.size() == 301);

  auto resolved = read_json(dir.file("out/config_resolved.json"));
  auto cfg2 = parse_config(resolved);
  CHECK(echo_config(cfg2) == resolved);
}

TEST_CASE("simulate: byte-identical outputs across reruns and thread counts") {
  TempDir dir;
  write_json(dir.file("cfg.json"), base_simulate_config());
  const std::vector<std::string> outputs{"density_path.csv", "norms.csv",
                                         "simulate.json", "final_state.bin",
                                         "cauchy.csv"};

  auto run_to = [&](const std::string& out, const std::string& threads) {
    const int rc = run("simulate --config " + dir.file("cfg.json") + " --out " +
                           dir.file(out) + " --threads " + threads,
                       dir.file("log_" + out + ".txt"));
    REQUIRE(rc == 0);
  };
  run_to("a", "1");
  run_to("b", "1");
  run_to("c", "3");

  for (const auto& name : outputs) {
    const auto a = slurp(dir.file("a/" + name));
    REQUIRE(!a.empty());
    CHECK(a == slurp(dir.file("b/" + name)));
    CHECK(a == slurp(dir.file("c/" + name)));
  }

  auto meta = read_json(dir.file("a/simulate.json"));
  CHECK(meta["aborted"] == false);
  CHECK(std::abs(meta["mass_drift_rel"].get<double>()) < 1e-12);
}

TEST_CASE("seed flag overrides the config") {
  TempDir dir;
  write_json(dir.file("cfg.json"), base_simulate_config());
  const int rc = run("simulate --config " + dir.file("cfg.json") + " --out " +
                         dir.file("out") + " --seed 777",
                     dir.file("log.txt"));
  REQUIRE(rc == 0);
  auto resolved = read_json(dir.file("out/config_resolved.json"));
  CHECK(resolved["seed"] == 777);
}

TEST_CASE("config defects exit 2") {
  TempDir dir;
  CHECK(run("steady --config " + dir.file("nope.json"), dir.file("l0.txt")) == 2);

  auto bad = base_simulate_config();
  bad["grid"]["shape"] = 4;
  write_json(dir.file("unknown.json"), bad);
  CHECK(run("simulate --config " + dir.file("unknown.json") + " --out " +
                dir.file("o1"),
            dir.file("l1.txt")) == 2);

  auto odd = base_simulate_config();
  odd["grid"]["N"] = 12;
  write_json(dir.file("odd.json"), odd);
  CHECK(run("simulate --config " + dir.file("odd.json") + " --out " + dir.file("o2"),
            dir.file("l2.txt")) == 2);

  {
    std::ofstream out(dir.file("mangled.json"));
    out << "{ definitely not json";
  }
  CHECK(run("simulate --config " + dir.file("mangled.json") + " --out " +
                dir.file("o3"),
            dir.file("l3.txt")) == 2);
}

TEST_CASE("density blowup exits 3") {
  TempDir dir;
  auto cfg = base_simulate_config();
  cfg["potential"] = {{"kind", "point_mass"}, {"weight", 1.0}};
  cfg["perturbation"] = {{"kind", "bump_extra"}, {"amplitude", 1e200}, {"width", 0.8}};
  write_json(dir.file("cfg.json"), cfg);
  CHECK(run("simulate --config " + dir.file("cfg.json") + " --out " + dir.file("out"),
            dir.file("log.txt")) == 3);
  auto meta = read_json(dir.file("out/simulate.json"));
  CHECK(meta["aborted"] == true);
  CHECK(!meta["guard_message"].get<std::string>().empty());
}

TEST_CASE("fixed-point non-convergence exits 4") {
  TempDir dir;
  json cfg{{"distribution", {{"kind", "fermi_zero"}, {"dim", 1}, {"mu", 1.0}}},
           {"potential", {{"kind", "gaussian"}, {"weight", -0.3}, {"width", 1.0}}},
           {"grid", {{"dim", 1}, {"N", 16}, {"L", 2.0 * pi}}},
           {"evolution", {{"dt", 0.05}, {"t_end", 1.0}, {"snapshots", 5}}},
           {"perturbation", {{"kind", "bump_extra"}, {"amplitude", 0.05}, {"width", 0.8}}},
           {"fixedpoint", {{"tol", 1e-15}, {"max_iter", 2}}}};
  write_json(dir.file("cfg.json"), cfg);
  CHECK(run("fixedpoint --config " + dir.file("cfg.json") + " --out " + dir.file("out"),
            dir.file("log.txt")) == 4);
  auto meta = read_json(dir.file("out/fixedpoint.json"));
  CHECK(meta["converged"] == false);
  auto rows = read_csv(dir.file("out/residuals.csv"));
  CHECK(rows.size() == 2);
}

TEST_CASE("response: symbol table, criteria, log-term residuals") {
  TempDir dir;
  json cfg{{"distribution", {{"kind", "fermi_zero"}, {"dim", 3}, {"mu", 1.0}}},
           {"potential", {{"kind", "gaussian"}, {"weight", -0.2}, {"width", 1.0}}},
           {"symbol",
            {{"source", "quadrature"},
             {"tau_max", 2.0},
             {"tau_count", 5},
             {"k_min", 0.5},
             {"k_max", 2.0},
             {"k_count", 4}}}};
  write_json(dir.file("cfg.json"), cfg);
  const int rc = run("response --config " + dir.file("cfg.json") + " --out " +
                         dir.file("out"),
                     dir.file("log.txt"));
  CHECK(rc == 0);

  auto rows = read_csv(dir.file("out/symbol.csv"));
  CHECK(rows.size() == 20);
  auto criteria = read_json(dir.file("out/criteria.json"));
  REQUIRE(criteria.is_array());
  REQUIRE(criteria.size() == 4);
  for (const auto& c : criteria) {
    CHECK(c.contains("name"));
    CHECK(c.contains("satisfied"));
    CHECK(c.contains("detail"));
  }
  auto resid = read_csv(dir.file("out/logterm_residual.csv"));
  CHECK(resid.size() == 20);
}

TEST_CASE("crosscheck: ladder of refinement levels") {
  TempDir dir;
  json cfg{{"distribution", {{"kind", "fermi_zero"}, {"dim", 3}, {"mu", 1.0}}},
           {"potential", {{"kind", "point_mass"}, {"weight", -0.2}}},
           {"grid", {{"dim", 3}, {"N", 8}, {"L", 2.0 * pi}}},
           {"crosscheck",
            {{"levels", 2},
             {"base_steps", 64},
             {"t_end", 12.8},
             {"harmonic", {1, 0, 0}}}}};
  write_json(dir.file("cfg.json"), cfg);
  const int rc = run("crosscheck --config " + dir.file("cfg.json") + " --out " +
                         dir.file("out"),
                     dir.file("log.txt"));
  CHECK(rc == 0);
  auto rows = read_csv(dir.file("out/crosscheck.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].size() == 5);  // level, steps, dt, window, rel_error
  CHECK(rows[1][1] == 512.0);  // 64 * 8
  CHECK(rows[1][4] < rows[0][4]);
}

TEST_CASE("usage errors exit 2 and help exits 0") {
  TempDir dir;
  CHECK(run("simulate", dir.file("l0.txt")) == 2);  // --config is required
  CHECK(run("--help", dir.file("l1.txt")) == 0);
  CHECK(run("steady --help", dir.file("l2.txt")) == 0);
}
