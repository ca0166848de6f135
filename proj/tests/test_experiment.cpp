#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "theta_lab/errors.hpp"
#include "theta_lab/experiment.hpp"
#include "theta_lab/parallel.hpp"

using namespace theta_lab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# smallest useful run
schema_version = 1
n = 1
omega = [0, 1]
family = "abelian"
k_list = [2]
quadrature_grid = 16
amoeba_grid = 8
fiber_grid = 16
metric_grid = 8
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("theta_lab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int error_line(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("flat config parsing") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  CHECK(cfg.n == 1);
  CHECK(cfg.omega(0, 0) == Complex(0, 1));
  CHECK(cfg.family == Family::abelian);
  CHECK(cfg.k_list == std::vector<int>{2});
  CHECK(cfg.metric_grid == 8);
  CHECK(cfg.delta.fitted);
  CHECK_NOTHROW(validate_config(cfg));

  const ExperimentConfig fixed = parse_config(std::string(kMinimal) + "delta_policy = \"fixed(1.5)\"\nseed = 9\n");
  CHECK_FALSE(fixed.delta.fitted);
  CHECK(fixed.delta.value == 1.5);
  CHECK(fixed.seed == 9u);
}

TEST_CASE("json config matches the flat form") {
  const ExperimentConfig a = parse_config(kMinimal);
  const ExperimentConfig b = parse_config(config_to_json(a).dump());
  CHECK(config_to_json(a) == config_to_json(b));
}

TEST_CASE("config errors carry line numbers") {
  CHECK(error_line("schema_version = 1\nn = 1\nbogus = 3\n") == 3);
  CHECK(error_line("schema_version = 1\nn = 1\nn = 2\n") == 3);
  CHECK(error_line("[run]\n") == 1);
  CHECK(error_line("schema_version = 1\nn = \n") == 2);
  std::string coarse = kMinimal;
  coarse.replace(coarse.find("amoeba_grid = 8"), 15, "amoeba_grid = 4");
  CHECK_THROWS_AS(validate_config(parse_config(coarse)), ConfigError);
  std::string bad_schema = kMinimal;
  bad_schema.replace(bad_schema.find("schema_version = 1"), 18, "schema_version = 2");
  CHECK_THROWS_AS(validate_config(parse_config(bad_schema)), ConfigError);
  std::string unsorted = kMinimal;
  unsorted.replace(unsorted.find("k_list = [2]"), 12, "k_list = [4, 2]");
  CHECK_THROWS_AS(validate_config(parse_config(unsorted)), ConfigError);
  std::string asym = kMinimal;
  asym.replace(asym.find("n = 1"), 5, "n = 2");
  CHECK_THROWS_AS(validate_config(parse_config(asym)), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/theta_lab.toml"), ConfigError);
}

TEST_CASE("tables encode identical values as csv and json") {
  ExperimentConfig cfg = parse_config(kMinimal);
  const Table t = theta_eval_table(cfg, 2);
  CHECK(!t.rows.empty());
  const Table from_csv = Table::from_csv(t.to_csv());
  const Table from_json = Table::from_json(t.to_json());
  CHECK(from_csv.columns == t.columns);
  CHECK(from_csv.rows == t.rows);
  // JSON objects do not keep column order; match by name.
  REQUIRE(from_json.rows.size() == t.rows.size());
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const auto at = std::find(from_json.columns.begin(), from_json.columns.end(), t.columns[c]);
    REQUIRE(at != from_json.columns.end());
    const std::size_t j = static_cast<std::size_t>(at - from_json.columns.begin());
    for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(from_json.rows[r][j] == t.rows[r][c]);
  }

  HausdorffApproxReport r;
  r.k = 8;
  r.distortion = 0.1;
  r.covering_radius = 1.0 / 3.0;
  r.eps = 1.0 / 3.0;
  r.gh_upper = 2.0 / 3.0;
  r.knn = 16;
  const HausdorffApproxReport back = hausdorff_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.covering_radius == r.covering_radius);
  CHECK(back.gh_upper == r.gh_upper);
  CHECK(back.knn == 16);
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("seeded points are reproducible") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  const auto a = seeded_points(cfg, 5, 3), b = seeded_points(cfg, 5, 3), c = seeded_points(cfg, 5, 4);
  for (int i = 0; i < 5; ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
  CHECK(a[0].x != c[0].x);
}

TEST_CASE("minimal run and determinism") {
  ExperimentConfig cfg = parse_config(kMinimal);
  const fs::path dir = scratch("rerun");
  cfg.output_dir = dir.string();
  set_default_jobs(1);
  const RunResult a = run_experiment(cfg);
  std::map<std::string, std::string> first;
  for (const auto& entry : fs::directory_iterator(dir)) first[entry.path().filename().string()] = slurp(entry.path());
  set_default_jobs(4);
  const RunResult b = run_experiment(cfg);
  set_default_jobs(0);
  CHECK(a.ok_rows == 1);
  CHECK(a.failed_rows == 0);
  CHECK(a.report["rows"].size() == 1);
  CHECK(strip_wall_clock(a.report).dump() == strip_wall_clock(b.report).dump());
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    ++files;
    if (name == "report.json") {
      const auto reread = nlohmann::json::parse(slurp(entry.path()));
      CHECK(strip_wall_clock(reread).dump() == strip_wall_clock(nlohmann::json::parse(first[name])).dump());
      continue;
    }
    CHECK_MESSAGE(slurp(entry.path()) == first[name], name);
  }
  CHECK(files == first.size());
}

TEST_CASE("three levels produce rate fits") {
  ExperimentConfig cfg = parse_config(kMinimal);
  cfg.k_list = {4, 8, 16};
  cfg.output_dir = scratch("rates").string();
  const RunResult r = run_experiment(cfg);
  CHECK(r.ok_rows == 3);
  const auto& fits = r.report["rate_fits"];
  CHECK(fits["eps"]["rows"].size() == 3);
  CHECK(fits.contains("fiber_collapse"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "rate_eps.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "amoeba_k8.csv"));
}
