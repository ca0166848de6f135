// theta-lab: command-line front end for the k-sweep diagnostics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "theta_lab/errors.hpp"
#include "theta_lab/experiment.hpp"
#include "theta_lab/parallel.hpp"

namespace {

using namespace theta_lab;

struct Options {
  std::string config;
  int k = 0;
  std::string out;
  std::string format = "csv";
  int jobs = 0;
  std::string model = "sqrt_logk_over_k";
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.k > 0) cfg.k_list = {o.k};
  if (!o.out.empty()) cfg.output_dir = o.out;
  validate_config(cfg);
  return cfg;
}

void emit(const Options& o, const std::string& name, const Table& t) {
  const std::string text = o.format == "json" ? t.to_json().dump(2) + "\n" : t.to_csv();
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(o.out);
  const auto path = std::filesystem::path(o.out) / (name + (o.format == "json" ? ".json" : ".csv"));
  std::ofstream(path, std::ios::binary) << text;
  std::cerr << "wrote " << path.string() << '\n';
}

void add_common(CLI::App* sub, Options& o, bool table_output) {
  sub->add_option("--config", o.config, "experiment config (flat key = value or JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--k", o.k, "run a single level instead of k_list")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output directory");
  if (table_output) sub->add_option("--format", o.format, "table encoding")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"theta-lab: theta-function embeddings of abelian and Kummer varieties"};
  app.require_subcommand(1);
  Options o;
  if (const char* env = std::getenv("THETA_LAB_JOBS")) o.jobs = std::atoi(env);
  app.add_option("--jobs", o.jobs, "worker threads (default THETA_LAB_JOBS or all cores)")->check(CLI::NonNegativeNumber);

  auto* theta_eval = app.add_subcommand("theta-eval", "section values at seeded points");
  auto* gram = app.add_subcommand("gram", "L2 Gram matrix error per k");
  auto* bergman = app.add_subcommand("bergman", "Bergman density statistics per k");
  auto* amoeba = app.add_subcommand("amoeba", "moment-map images of the sample grid");
  auto* metric = app.add_subcommand("metric-convergence", "pulled-back metric error per k");
  auto* gh = app.add_subcommand("gh-convergence", "Hausdorff-approximation report per k");
  auto* fiber = app.add_subcommand("fiber-collapse", "fibre image diameters per k");
  auto* rate = app.add_subcommand("rate-table", "eps_k against a rate model");
  auto* run = app.add_subcommand("run", "full sweep into output_dir");
  for (auto* sub : {theta_eval, gram, bergman, metric, gh, fiber, rate}) add_common(sub, o, true);
  add_common(amoeba, o, false);
  add_common(run, o, false);
  rate->add_option("--model", o.model, "rate model")
      ->check(CLI::IsMember({"sqrt_logk_over_k", "inv_k", "inv_sqrt_k"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (o.jobs > 0) set_default_jobs(o.jobs);

  try {
    const ExperimentConfig cfg = load(o);
    if (theta_eval->parsed()) {
      for (int k : cfg.k_list) emit(o, "theta_eval_k" + std::to_string(k), theta_eval_table(cfg, k));
    } else if (gram->parsed()) {
      emit(o, "gram", gram_table(cfg));
    } else if (bergman->parsed()) {
      emit(o, "bergman", bergman_table(cfg));
    } else if (amoeba->parsed()) {
      std::filesystem::path dir(o.out.empty() ? cfg.output_dir : o.out);
      std::filesystem::create_directories(dir);
      for (int k : cfg.k_list) {
        const AmoebaCloud cloud = amoeba_sample(make_embedding(cfg, k), cfg.amoeba_grid);
        const auto path = dir / ("amoeba_k" + std::to_string(k) + ".csv");
        std::ofstream os(path, std::ios::binary);
        write_amoeba_csv(os, cloud);
        std::cerr << "wrote " << path.string() << '\n';
      }
    } else if (metric->parsed()) {
      emit(o, "metric_convergence", metric_table(cfg));
    } else if (gh->parsed()) {
      emit(o, "gh_convergence", gh_table(cfg));
    } else if (fiber->parsed()) {
      emit(o, "fiber_collapse", fiber_table(cfg));
    } else if (rate->parsed()) {
      emit(o, "rate_table", rate_table(cfg, parse_rate_model(o.model)));
    } else if (run->parsed()) {
      const RunResult r = run_experiment(cfg);
      std::cerr << "report: " << (std::filesystem::path(cfg.output_dir) / "report.json").string() << " ("
                << r.ok_rows << " ok, " << r.failed_rows << " failed)\n";
      if (r.ok_rows == 0) return 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
