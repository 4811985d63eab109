#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "skewopt/config.hpp"
#include "skewopt/run.hpp"

using namespace skewopt;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("skewopt_unit_" + name);
  fs::remove_all(d);
  return d;
}

RunConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::uniform_int_distribution<int> pick(0, 5);
  RunConfig c;
  c.command = static_cast<Command>(pick(rng));
  c.mesh_spec.dim = 2 + pick(rng) % 2;
  c.mesh_spec.lower.assign(c.mesh_spec.dim, -u(rng));
  c.mesh_spec.upper.assign(c.mesh_spec.dim, u(rng));
  c.mesh_spec.n_per_axis = 2 + pick(rng);
  c.field_spec.name = c.mesh_spec.dim == 3 ? "ball_astar" : "regression_singular";
  c.field_spec.zeta = u(rng);
  c.field_spec.envelope_scale = 1 + u(rng);
  c.field_spec.quad_points = 8 + pick(rng);
  c.set_spec.alpha = u(rng);
  c.set_spec.beta = c.set_spec.alpha + u(rng);
  c.set_spec.tv_budget = 10 * u(rng);
  c.set_spec.radius = u(rng) / 3.0;
  double e = 0.9;
  for (int k = 0; k < 3 + pick(rng); ++k) c.schedule_spec.epsilons.push_back(e *= u(rng));
  c.schedule_spec.mode = c.command == Command::PerforationSweep ? "perforate" : "truncate";
  if (c.command == Command::PerforationSweep || pick(rng) < 3) c.schedule_spec.sigma = u(rng) * 1.9;
  c.output_dir = "dir_" + std::to_string(pick(rng));
  c.seeds = rng();
  c.tolerances.linear_rtol = u(rng) * 1e-9;
  c.tolerances.tol = u(rng) * 1e-5;
  c.tolerances.max_iter = 1 + pick(rng);
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config takes defaults") {
    const RunConfig c = parse_config(R"({"command": "solve"})");
    CHECK(c.command == Command::Solve);
    CHECK(c.tolerances.linear_rtol == 1e-10);
    CHECK(c.tolerances.tol == 1e-6);
    CHECK(c.tolerances.max_iter == 500);
    CHECK(c.mesh_spec.dim == 2);
    CHECK(c.seeds == 0);
  }

  TEST_CASE("three-dimensional box defaults") {
    const RunConfig c = parse_config(R"({"command": "solve", "mesh_spec": {"dim": 3}})");
    CHECK(c.mesh_spec.lower.size() == 3);
  }

  TEST_CASE("strict parsing") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "solve", "tolerances": {"linear_rtl": 1}})"),
                         doctest::Contains("tolerances.linear_rtl"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "solve", "seeds": 1, "seeds": 2})"),
                         doctest::Contains("seeds"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "solve", "set_spec": {"alpha": 1, "alpha": 2}})"),
                         doctest::Contains("set_spec.alpha"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("{\"command\": \"solve\",\n\"seeds\": }"), doctest::Contains("line 2"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "solve", "seeds": "x"})"), doctest::Contains("seeds"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "launch"})"), doctest::Contains("launch"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seeds": 1})"), ConfigError);
  }

  TEST_CASE("per-command requirements") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"command": "sweep-truncate", "schedule_spec": {"epsilons": [0.1, 0.2]}})"),
                         doctest::Contains("schedule_spec"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"command": "sweep-perforate", "schedule_spec": {"epsilons": [0.2, 0.1], "mode": "perforate"}})"),
        doctest::Contains("schedule_spec.sigma"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"command": "check-ftype", "schedule_spec": {"epsilons": [0.2, 0.1]}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"command": "solve", "set_spec": {"alpha": 3, "beta": 1}})"), ConfigError);
  }

  TEST_CASE("serialize then parse is the identity") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 200; ++k) {
      const RunConfig c = random_config(rng);
      const std::string text = serialize_config(c);
      const RunConfig back = parse_config(text);
      CHECK(back == c);
      CHECK(serialize_config(back) == text);
    }
  }

  TEST_CASE("run writes a summary and the documented csv") {
    RunConfig c = parse_config(R"({"command": "solve", "mesh_spec": {"lower": [0, 0], "upper": [1, 1], "n_per_axis": 8}})");
    c.output_dir = scratch_dir("solve").string();
    const RunArtifacts a = run(c);
    CHECK(a.exit_code == 0);
    const std::string csv = read_file(a.report_csv);
    CHECK(csv.rfind(std::string(kStateHeader) + "\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 81);
    CHECK(a.summary.find("\"l2_error\"") != std::string::npos);
    CHECK(a.summary.find("\"rows\":81") != std::string::npos);
    CHECK(fs::exists(fs::path(c.output_dir) / "summary.json"));
  }

  TEST_CASE("validation failures exit with 2 and still write a summary") {
    RunConfig c = parse_config(R"({"command": "optimize", "field_spec": {"name": "regression_bounded"}})");
    c.output_dir = scratch_dir("bad").string();
    c.mesh_spec.dim = 3;
    c.mesh_spec.lower = c.mesh_spec.upper = {0, 0, 0};
    const RunArtifacts a = run(c);
    CHECK(a.exit_code == 2);
    CHECK(read_file(fs::path(c.output_dir) / "summary.json").find("\"status\":\"error\"") != std::string::npos);
  }

  TEST_CASE("check-ftype writes one row per epsilon") {
    RunConfig c = parse_config(R"({"command": "check-ftype", "mesh_spec": {"dim": 3, "n_per_axis": 12},
                                    "field_spec": {"name": "ball_astar"},
                                    "schedule_spec": {"epsilons": [0.8, 0.6, 0.4]}})");
    c.output_dir = scratch_dir("ftype").string();
    const RunArtifacts a = run(c);
    REQUIRE(a.exit_code == 0);
    const std::string csv = read_file(a.report_csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }

  TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_number(v)) == v);
  }
}
