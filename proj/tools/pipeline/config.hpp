#pragma once

// Pipeline configuration: an INI file with an explicit schema version. Every
// field has a default, and the effective values are echoed into each run
// manifest.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "climattn/attention.hpp"
#include "climattn/econometrics.hpp"
#include "climattn/transmission.hpp"
#include "climattn/variability.hpp"

namespace climattn::pipeline {

inline constexpr int kSchemaVersion = 1;

struct SweepConfig {
  double theta_min = 0.005;
  double theta_max = 0.3;
  int points = 500;
};

struct CohortShape {
  int groups = 2000;
  int respondents = 5;
  int cells = 40;
  double scale_min = 0.03;
  double scale_max = 0.15;
};

struct InputPaths {
  std::string anomalies;   // unit_id,year,anomaly
  std::string links;       // group_id,unit_id
  std::string groups;      // group_id,true_scale,cell,n_respondents
  std::string respondents; // simulator output or any conforming table
  std::string catalog;     // group_id,motif_id,description
  std::string dictionary;  // one term per line
};

struct PipelineConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 20240917;
  unsigned threads = 1;
  std::filesystem::path out_dir = "out";

  VariabilityConfig variability;
  std::string prior_kind = "lognormal";  // lognormal | point_mass
  double prior_log_sd = 0.5;
  StakesSpec stakes;
  CostSpec cost;
  SweepConfig sweep;

  CohortShape shape;
  double noise_sd = 0.1;
  int response_levels = 6;
  int n_controls = 2;
  int motifs_per_generation = 4;
  double ar_coefficient = 0.0;

  RegressionSpec regression = default_regression();
  double significance = 0.01;
  int margins_points = 101;
  bool svg = true;

  InputPaths inputs;

  static RegressionSpec default_regression() {
    RegressionSpec r;
    r.fe_key = "cell";
    r.cluster_key = "group_id";
    return r;
  }

  AttentionModel model() const;
  CohortConfig cohort() const;

  /// Checks every section; throws InputError naming the offending key.
  void validate() const;

  /// Effective values as (section.key, text) pairs in a fixed order. Run
  /// location (out_dir) and worker count are excluded: neither changes
  /// results.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Reads an INI file. Unknown sections or keys and a missing or different
/// schema_version are input errors. Relative input paths resolve against the
/// directory holding the file.
PipelineConfig load_config(const std::filesystem::path& path);

/// The same syntax from text, with relative paths resolved against `base`.
PipelineConfig parse_config(const std::string& text, const std::string& source,
                            const std::filesystem::path& base);

/// Renders `config` as INI text accepted by parse_config.
std::string render_config(const PipelineConfig& config);

}  // namespace climattn::pipeline
