#pragma once

// Pipeline stages behind the command-line subcommands. Each run writes its
// artifacts plus manifest.json into the configured output directory. On
// failure the manifest is still written, recording the stages completed so
// far, and the error is rethrown.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "climattn/attention.hpp"
#include "climattn/econometrics.hpp"
#include "climattn/error.hpp"
#include "climattn/folklore.hpp"
#include "climattn/transmission.hpp"
#include "climattn/variability.hpp"
#include "pipeline/config.hpp"

namespace climattn::pipeline {

struct IndexRun {
  std::map<std::string, AncestralVariability> units;
  std::map<std::string, AncestralVariability> groups;  // empty without a link table
};

struct SolveRun {
  std::vector<AttentionSolution> solutions;
};

struct SweepRun {
  std::vector<AttentionSolution> curve;
  Thresholds thresholds;
  TroughReport trough;
  ExitCode code = ExitCode::kOk;  // kVerdictFail when the trough check fails
};

struct SimulateRun {
  SyntheticDataset data;
};

struct RegressRun {
  FitResult fit;
  UShapeVerdict verdict;
  MarginsCurve margins;
  std::pair<double, double> range;
  ExitCode code = ExitCode::kOk;  // kVerdictFail unless the U-shape holds
};

struct FolkloreRun {
  std::vector<FolkloreScore> scores;
};

struct ReproduceRun {
  SimulateRun simulate;
  RegressRun regress;
  Thresholds thresholds;
  double trough_midpoint = 0.0;
  std::optional<double> turning_point_gap;  // |turning point / midpoint - 1|
  ExitCode code = ExitCode::kOk;
};

IndexRun run_index(const PipelineConfig& config, std::ostream& log);
SolveRun run_model_solve(const PipelineConfig& config, const std::vector<double>& thetas,
                         std::ostream& log);
SweepRun run_model_sweep(const PipelineConfig& config, std::ostream& log);
SimulateRun run_simulate(const PipelineConfig& config, std::ostream& log);
RegressRun run_regress(const PipelineConfig& config, std::ostream& log);
FolkloreRun run_folklore(const PipelineConfig& config, const std::string& expected_groups,
                         std::ostream& log);
ReproduceRun run_reproduce(const PipelineConfig& config, std::ostream& log);

/// Respondent table as written by `simulate`, ready for quadratic_fit.
DataTable respondent_table(const SyntheticDataset& data);

/// Midpoint of [theta_low, theta_high]; equals theta_tilde when the level set
/// is empty.
double trough_midpoint(const Thresholds& t);

}  // namespace climattn::pipeline
