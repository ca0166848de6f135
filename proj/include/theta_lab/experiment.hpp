#pragma once

// Experiment configuration and the k-sweep pipeline behind the command-line
// tool.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "theta_lab/convergence.hpp"
#include "theta_lab/pullback.hpp"

namespace theta_lab {

struct DeltaPolicy {
  bool fitted = true;
  double value = 0.0;  // used when !fitted
};

struct ExperimentConfig {
  int schema_version = 1;
  int n = 1;
  ComplexMatrix omega;
  Family family = Family::abelian;
  std::vector<int> k_list;
  int quadrature_grid = 64;
  int amoeba_grid = 32;
  int fiber_grid = 64;
  int metric_grid = 16;
  double eps = 1e-12;
  DeltaPolicy delta;
  std::string output_dir = "theta_lab_out";
  std::uint64_t seed = 1;
  int stencil_radius = 2;
  int knn = 8;
};

/// Flat `key = value` text (numbers, quoted strings, [lists], # comments) or,
/// when the first non-blank character is '{', JSON with the same keys.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Throws ConfigError on any violated invariant.
void validate_config(const ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Named columns of numbers, emitted as CSV or as a JSON array of objects
/// with identical values.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
  nlohmann::json to_json() const;
  static Table from_csv(const std::string& text);
  static Table from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const HausdorffApproxReport& r);
HausdorffApproxReport hausdorff_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RateTable& t);

/// Exact decimal rendering used for every emitted number.
std::string format_double(double v);

AbelianVariety make_variety(const ExperimentConfig& cfg);
Embedding make_embedding(const ExperimentConfig& cfg, int k);

/// Deterministic generic points drawn from the seed.
std::vector<AbelianPoint> seeded_points(const ExperimentConfig& cfg, std::size_t count, std::uint64_t stream);

/// delta used for the region split: c/2 from the Gaussian decay fit at the
/// smallest k, or the fixed value.
double resolve_delta(const ExperimentConfig& cfg);

// Per-subcommand tables; one row per k unless stated otherwise.
Table theta_eval_table(const ExperimentConfig& cfg, int k);  // one row per (point, section)
Table gram_table(const ExperimentConfig& cfg);
Table bergman_table(const ExperimentConfig& cfg);
Table metric_table(const ExperimentConfig& cfg);
Table gh_table(const ExperimentConfig& cfg);
Table fiber_table(const ExperimentConfig& cfg);
Table rate_table(const ExperimentConfig& cfg, RateModel model);

struct RunResult {
  nlohmann::json report;
  int ok_rows = 0;
  int failed_rows = 0;
};

/// Full sweep: writes report.json plus per-k CSV dumps into cfg.output_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

/// report.json without its wall-clock field, for determinism checks.
nlohmann::json strip_wall_clock(nlohmann::json report);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace theta_lab
