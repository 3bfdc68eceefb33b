#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfchain/harness.hpp"

using namespace mfchain::harness;
using nlohmann::json;

namespace {

Config small(const std::string& extra = "") {
  return Config::parse(
      "mc.N = 8, 16\n"
      "mc.R = 200\n"
      "grid.horizon = 2\n"
      "grid.spacing = 0.5\n"
      "decay.samples = 4\n"
      "decay.horizon = 10\n"
      "master.points = 10\n" +
      extra);
}

}  // namespace

TEST_CASE("config defaults and grammar") {
  const Config d;
  CHECK(d.get("model.name") == "weak_interaction");
  CHECK(d.get_counts("mc.N") == std::vector<std::uint32_t>{8, 16, 32, 64, 128, 256});
  CHECK(d.get_u64("mc.R") == 20000);
  CHECK(d.get_double("grid.horizon") == 20.0);

  const Config c = Config::parse(
      "# experiment\n"
      "\n"
      "model.name = example_non_erg   # trailing comment\n"
      "init.mu=0.3,0.7\n"
      "run.seed = 42\n");
  CHECK(c.get("model.name") == "example_non_erg");
  CHECK(c.get_doubles("init.mu") == std::vector<double>{0.3, 0.7});
  CHECK(c.get_u64("run.seed") == 42);

  CHECK_THROWS_AS(Config::parse("model.nam = x\n"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("just words\n"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("run.seed = -3\n").get_u64("run.seed"), std::invalid_argument);
  CHECK_THROWS_AS(Config::parse("grid.horizon = abc\n").get_double("grid.horizon"), std::invalid_argument);
  CHECK_THROWS_AS(Config::load("/nonexistent/mfchain.conf"), std::runtime_error);
}

TEST_CASE("config echo ignores the output directory") {
  Config a = small();
  Config b = small();
  b.set("run.out", "elsewhere");
  b.threads = 8;
  CHECK(a.echo() == b.echo());
  CHECK(a.canonical_text() == b.canonical_text());
  CHECK(a.echo().count("run.out") == 0);
  b.set("run.seed", "2");
  CHECK(a.canonical_text() != b.canonical_text());
}

TEST_CASE("invalid experiment settings are rejected") {
  CHECK_THROWS_AS(run_simulate(small("mc.N = 16, 8\n")), std::invalid_argument);
  CHECK_THROWS_AS(run_simulate(small("mc.R = 1\n")), std::invalid_argument);
  CHECK_THROWS_AS(run_solve(small("grid.horizon = 0\n")), std::invalid_argument);
  CHECK_THROWS_AS(run_solve(small("init.mu = 0.2,0.3,0.5\n")), std::invalid_argument);
  CHECK_THROWS_AS(run_command("plot", small()), std::invalid_argument);
}

TEST_CASE("solve report envelope") {
  const RunResult r = run_solve(small());
  CHECK(r.exit_code == kExitPass);
  REQUIRE(r.files.size() == 2);
  CHECK(r.files[0].name == "solve.json");
  CHECK(r.files[1].name == "trajectory.csv");
  CHECK(r.files[1].content.rfind("t,m_1,m_2\n", 0) == 0);
  const json j = json::parse(r.report_text());
  CHECK(j["schema"] == 1);
  CHECK(j["tool"] == "mfchain");
  CHECK(j["version"] == kVersion);
  CHECK(j["command"] == "solve");
  CHECK(j["seed"] == 1);
  CHECK(j["status"] == "pass");
  CHECK(j["config"]["model.name"] == "weak_interaction");
  const std::string hash = j["input_hash"];
  CHECK(hash.size() == 40);
  CHECK(hash.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("reruns are byte-identical, with any worker count") {
  for (const char* cmd : {"simulate", "weak-error", "certify"}) {
    Config a = small();
    Config b = small();
    b.threads = 4;
    const RunResult ra = run_command(cmd, a);
    const RunResult rb = run_command(cmd, b);
    REQUIRE(ra.files.size() == rb.files.size());
    for (std::size_t i = 0; i < ra.files.size(); ++i) {
      CHECK(ra.files[i].name == rb.files[i].name);
      CHECK(ra.files[i].content == rb.files[i].content);
    }
  }
}

TEST_CASE("certify verdicts") {
  const RunResult weak = run_certify(small());
  CHECK(weak.exit_code == kExitPass);
  CHECK(weak.report["result"]["condition1"]["verdict"] == "pass");

  const RunResult non = run_certify(small("model.name = example_non_erg\nmodel.params =\n"));
  CHECK(non.exit_code == kExitFailure);
  const json& c2 = non.report["result"]["condition2"];
  CHECK(c2["verdict"] == "fail");
  CHECK(c2["margin"].get<double>() <= -0.9);
  CHECK(c2["witness"]["mu"] == json::array({0.5, 0.5}));
  CHECK(c2["witness"]["x"] == 1);
  CHECK(c2["witness"]["y"] == 2);
  CHECK(non.report["result"]["condition1"]["verdict"] == "fail");

  const RunResult cst = run_certify(small("model.name = constant_symmetric\nmodel.params = 3, 1\n"));
  CHECK(cst.exit_code == kExitPass);
}

TEST_CASE("uncertified models need --force") {
  const Config base = small("model.name = example_non_erg\nmodel.params =\ninit.mu = 0.3, 0.7\n");
  const RunResult refused = run_weak_error(base);
  CHECK(refused.exit_code == kExitFailure);
  CHECK(refused.report["result"].contains("refused"));
  CHECK(refused.files.size() == 1);

  Config forced = base;
  forced.force = true;
  const RunResult ran = run_weak_error(forced);
  CHECK(ran.report["force"] == true);
  CHECK(ran.report["result"].contains("forced"));
  CHECK(ran.files.size() == 2);
}

TEST_CASE("weak error of a linear observable on a constant chain is MC noise") {
  const RunResult r = run_weak_error(small(
      "model.name = constant_symmetric\nmodel.params = 2, 1\n"
      "phi.name = linear\nphi.params = 1, 0\nmc.R = 2000\n"));
  for (const json& row : r.report["result"]["per_N"]) {
    const auto err = row["error"].get<std::vector<double>>();
    const auto se = row["stderr"].get<std::vector<double>>();
    for (std::size_t k = 0; k < err.size(); ++k) CHECK(std::abs(err[k]) <= 4.0 * se[k] + 1e-12);
  }
  // Pure noise cannot resolve a rate.
  CHECK(r.exit_code == kExitInconclusive);
  CHECK(r.report["result"]["R_needed"].get<std::size_t>() > 2000);
}

TEST_CASE("weak error decomposition telescopes") {
  const RunResult r = run_weak_error(small());
  for (const json& row : r.report["result"]["per_N"]) {
    const auto err = row["error"].get<std::vector<double>>();
    const auto t1 = row["T1"].get<std::vector<double>>();
    const auto t2 = row["T2"].get<std::vector<double>>();
    const auto se = row["stderr"].get<std::vector<double>>();
    double sup = 0.0;
    for (std::size_t k = 0; k < err.size(); ++k) {
      CHECK(std::abs(t1[k] + t2[k] - err[k]) <= 3.0 * se[k] + 1e-12);
      sup = std::max(sup, std::abs(err[k]));
    }
    CHECK(row["sup_error"].get<double>() == sup);
  }
  CHECK(r.report["result"]["fit"].contains("slope"));
  CHECK(r.report["result"]["fit"].contains("residual_std"));
}

TEST_CASE("stationary gap of the symmetric two-state chain is 0.5/N") {
  const RunResult r = run_stationary_gap(small(
      "model.name = constant_symmetric\nmodel.params = 2, 1\n"
      "mc.N = 10, 100\nmc.R = 2000\ngrid.horizon = 5\n"));
  CHECK(r.report["result"]["burn_in"].get<double>() == doctest::Approx(5.0).epsilon(0.05));
  for (const json& row : r.report["result"]["per_N"]) {
    const double N = row["N"].get<double>();
    CHECK(std::abs(row["gap"].get<double>() - 0.5 / N) <= 4.0 * row["stderr"].get<double>());
  }
}

TEST_CASE("stationary gap of the zero model has no burn-in") {
  const RunResult r = run_stationary_gap(small(
      "model.name = zero\nmodel.params = 2\ninit.mu = 1, 0\nmc.R = 50\n"));
  // Nothing certifies the zero model; the run is refused without --force.
  CHECK(r.report["result"].contains("refused"));
  Config forced = small("model.name = zero\nmodel.params = 2\ninit.mu = 1, 0\nmc.R = 50\n");
  forced.force = true;
  const RunResult f = run_stationary_gap(forced);
  CHECK(f.report["result"]["burn_in"] == 0.0);
}

TEST_CASE("master-check and decay-fit") {
  const RunResult m = run_master_check(small());
  CHECK(m.exit_code == kExitPass);
  CHECK(m.report["result"]["max_residual"].get<double>() < 1e-5);
  CHECK(m.files[1].content.rfind("t,mu_1,mu_2,residual\n", 0) == 0);

  const RunResult strict = run_master_check(small("master.tol = 1e-30\n"));
  CHECK(strict.exit_code == kExitFailure);

  const RunResult d = run_decay_fit(small("model.name = constant_symmetric\nmodel.params = 2, 1\n"));
  CHECK(d.exit_code == kExitPass);
  CHECK(d.report["result"]["linearized"]["lambda"].get<double>() == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("write_outputs creates the directory and files") {
  const auto dir = std::filesystem::temp_directory_path() / "mfchain_harness_test";
  std::filesystem::remove_all(dir);
  const RunResult r = run_solve(small());
  write_outputs(r, dir / "nested");
  std::ifstream in(dir / "nested" / "solve.json");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == r.report_text());
  CHECK(std::filesystem::exists(dir / "nested" / "trajectory.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("every command is dispatchable") {
  CHECK(command_names().size() == 7);
  CHECK(run_command("decay-fit", small()).report["command"] == "decay-fit");
}
