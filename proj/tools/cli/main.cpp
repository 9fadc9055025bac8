// climattn: command-line driver for the index, model, simulation, regression
// and folklore stages.
//
// Exit codes: 0 success or verdict pass, 1 verdict fail, 2 input error,
// 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "climattn/error.hpp"
#include "pipeline/config.hpp"
#include "pipeline/stages.hpp"

namespace {

using climattn::ExitCode;
namespace pl = climattn::pipeline;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
};

pl::PipelineConfig effective_config(const Globals& g) {
  pl::PipelineConfig c;
  if (!g.config_path.empty()) c = pl::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.out_dir) c.out_dir = *g.out_dir;
  if (g.threads) c.threads = *g.threads;
  c.validate();
  return c;
}

int code(ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ancestral climate variability and attention to the environment"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides the config)");
  app.add_option("--threads", g.threads, "Worker threads for group simulation")
      ->check(CLI::PositiveNumber);

  std::string anomalies, links;
  auto* index = app.add_subcommand("index", "Average variability per unit from yearly anomalies");
  index->add_option("--anomalies", anomalies, "unit_id,year,anomaly table");
  index->add_option("--links", links, "group_id,unit_id table");

  auto* model = app.add_subcommand("model", "Rational-inattention model");
  model->require_subcommand(1);
  std::vector<double> thetas;
  auto* solve = model->add_subcommand("solve", "Optimal attention at given prior scales");
  solve->add_option("--theta", thetas, "Prior scale(s)")->required();
  auto* sweep = model->add_subcommand("sweep", "Attention curve, thresholds and trough check");
  std::optional<int> points;
  sweep->add_option("--points", points, "Grid size (overrides the config)");

  std::string groups;
  auto* simulate = app.add_subcommand("simulate", "Synthetic respondents and folklore counts");
  simulate->add_option("--groups", groups, "group_id,true_scale,cell,n_respondents table");

  std::string data;
  auto* regress = app.add_subcommand("regress", "Quadratic fit, margins and U-shape verdict");
  regress->add_option("--data", data, "Respondent table");

  auto* folklore = app.add_subcommand("folklore", "Folklore motif scoring");
  folklore->require_subcommand(1);
  std::string catalog, dictionary, expected;
  auto* score = folklore->add_subcommand("score", "Score a motif catalog against a dictionary");
  score->add_option("--catalog", catalog, "group_id,motif_id,description table");
  score->add_option("--dictionary", dictionary, "One term per line");
  score->add_option("--expect", expected, "Table whose group_id column lists required groups");

  auto* reproduce = app.add_subcommand("reproduce", "Simulate, index, regress and test the U-shape");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return code(ExitCode::kInputError);
  }

  try {
    auto config = effective_config(g);
    auto& log = std::cout;
    if (*index) {
      if (!anomalies.empty()) config.inputs.anomalies = anomalies;
      if (!links.empty()) config.inputs.links = links;
      pl::run_index(config, log);
      return code(ExitCode::kOk);
    }
    if (*solve) {
      pl::run_model_solve(config, thetas, log);
      return code(ExitCode::kOk);
    }
    if (*sweep) {
      if (points) config.sweep.points = *points;
      config.validate();
      return code(pl::run_model_sweep(config, log).code);
    }
    if (*simulate) {
      if (!groups.empty()) config.inputs.groups = groups;
      pl::run_simulate(config, log);
      return code(ExitCode::kOk);
    }
    if (*regress) {
      if (!data.empty()) config.inputs.respondents = data;
      return code(pl::run_regress(config, log).code);
    }
    if (*score) {
      if (!catalog.empty()) config.inputs.catalog = catalog;
      if (!dictionary.empty()) config.inputs.dictionary = dictionary;
      pl::run_folklore(config, expected, log);
      return code(ExitCode::kOk);
    }
    if (*reproduce) return code(pl::run_reproduce(config, log).code);
  } catch (const climattn::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::kInputError);
  } catch (const climattn::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return code(ExitCode::kNumericalError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return code(ExitCode::kInputError);
  }
  return code(ExitCode::kInputError);
}
