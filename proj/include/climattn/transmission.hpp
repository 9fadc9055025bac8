#pragma once

// Synthetic ancestral histories and descendant responses.
//
// Each group draws a yearly anomaly series, its generations' variability
// realisations are averaged into the prior scale theta, and respondents report
// a noisy, discretised version of the optimal attention xi*(theta). Every group
// owns a seed derived from (master seed, group id) so results do not depend on
// execution order or thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "climattn/attention.hpp"
#include "climattn/error.hpp"
#include "climattn/random.hpp"
#include "climattn/variability.hpp"

namespace climattn {

struct GroupSpec {
  std::string group_id;
  double true_scale = 0.1;  // sd of the data-generating anomalies, degrees C
  std::string cell;         // fixed-effect key (country-year)
  int n_respondents = 1;

  void validate() const {
    if (group_id.empty()) throw InputError("group spec: empty group_id");
    if (!(std::isfinite(true_scale) && true_scale > 0.0)) {
      throw InputError("group '" + group_id + "': true_scale must be finite and positive");
    }
    if (n_respondents < 1) {
      throw InputError("group '" + group_id + "': n_respondents must be at least 1");
    }
  }
};

struct CohortConfig {
  VariabilityConfig variability;  // fixes the period, the generation span and G
  double noise_sd = 0.1;
  int response_levels = 6;
  int n_controls = 2;
  int motifs_per_generation = 4;
  double ar_coefficient = 0.0;  // 0 gives iid anomalies
  std::uint64_t seed = 20240917;
  unsigned threads = 1;

  void validate() const {
    variability.validate();
    if (!(noise_sd >= 0.0 && std::isfinite(noise_sd))) {
      throw InputError("cohort: noise_sd must be finite and nonnegative");
    }
    if (response_levels < 2) throw InputError("cohort: response_levels must be at least 2");
    if (n_controls < 0) throw InputError("cohort: n_controls must be nonnegative");
    if (motifs_per_generation < 1) {
      throw InputError("cohort: motifs_per_generation must be at least 1");
    }
    if (!(ar_coefficient > -1.0 && ar_coefficient < 1.0)) {
      throw InputError("cohort: ar_coefficient must lie in (-1, 1)");
    }
  }
};

/// Gaussian anomalies with mean 0 and marginal sd `true_scale`, one per year
/// from `start_year`. A nonzero `ar_coefficient` gives a stationary AR(1).
inline TemperatureSeries simulate_climate(double true_scale, int years, std::uint64_t seed,
                                          int start_year = 1600, double ar_coefficient = 0.0,
                                          std::string unit_id = "sim") {
  if (!(std::isfinite(true_scale) && true_scale > 0.0)) {
    throw InputError("simulate_climate: true_scale must be finite and positive");
  }
  if (years < 1) throw InputError("simulate_climate: years must be positive");
  Engine engine(seed);
  const double innovation = true_scale * std::sqrt(1.0 - ar_coefficient * ar_coefficient);
  std::vector<YearAnomaly> obs;
  obs.reserve(static_cast<std::size_t>(years));
  double previous = true_scale * standard_normal(engine);
  for (int t = 0; t < years; ++t) {
    const double z = t == 0 ? previous
                            : ar_coefficient * previous + innovation * standard_normal(engine);
    obs.push_back({start_year + t, z});
    previous = z;
  }
  return {std::move(unit_id), std::move(obs)};
}

/// Cultural transmission: the prior scale is the average of the ancestral
/// generations' variability realisations.
inline double transmit_prior(std::span<const double> eta_hats) {
  if (eta_hats.empty()) throw InputError("transmit_prior: no ancestral generations");
  double sum = 0.0;
  for (double e : eta_hats) sum += e;
  return sum / static_cast<double>(eta_hats.size());
}

/// Nearest point of {k / (levels - 1)} after clamping to [0, 1]; halves round up.
inline double snap_response(double value, int levels) {
  const double clamped = std::clamp(value, 0.0, 1.0);
  const double steps = static_cast<double>(levels - 1);
  return std::floor(clamped * steps + 0.5) / steps;
}

inline double simulate_response(double theta, const AttentionModel& model, double noise_sd,
                                int response_levels, Engine& engine) {
  if (!(theta > 0.0)) throw InputError("simulate_response: theta must be positive");
  double value = model.xi_star(theta);
  if (noise_sd > 0.0) value += noise_sd * standard_normal(engine);
  return snap_response(value, response_levels);
}

inline double simulate_response(double theta, const AttentionModel& model, double noise_sd,
                                int response_levels, std::uint64_t seed) {
  Engine engine(seed);
  return simulate_response(theta, model, noise_sd, response_levels, engine);
}

struct FolkloreCounts {
  long long env_motifs = 0;
  long long total_motifs = 0;
};

/// Each generation adds `motifs_per_generation` motifs, each environmental
/// with probability xi*(theta_g). Motif k is environmental iff its uniform
/// draw u_k < xi*; with a shared seed the counts are therefore monotone in
/// xi* across paths (common random numbers).
inline FolkloreCounts simulate_folklore(std::span<const double> theta_path,
                                        const AttentionModel& model, int motifs_per_generation,
                                        std::uint64_t seed) {
  if (motifs_per_generation < 1) {
    throw InputError("simulate_folklore: motifs_per_generation must be at least 1");
  }
  Engine engine(seed);
  FolkloreCounts out;
  for (double theta : theta_path) {
    const double p = model.xi_star(theta);
    for (int k = 0; k < motifs_per_generation; ++k) {
      if (uniform01(engine) < p) ++out.env_motifs;
      ++out.total_motifs;
    }
  }
  return out;
}

struct SyntheticRespondent {
  std::string group_id;
  std::string cell;
  double avg_variability = 0.0;
  double attention = 0.0;
  std::vector<double> controls;
};

struct SyntheticGroup {
  std::string group_id;
  std::string cell;
  double true_scale = 0.0;
  AncestralVariability index;
  double theta = 0.0;
  double xi_star = 0.0;
  FolkloreCounts folklore;
};

struct SyntheticDataset {
  std::vector<SyntheticGroup> groups;            // sorted by group_id
  std::vector<SyntheticRespondent> respondents;  // grouped in the same order
  int n_controls = 0;
};

namespace detail {

inline void simulate_group(const GroupSpec& spec, const CohortConfig& config,
                           const AttentionModel& model, SyntheticGroup& group,
                           std::vector<SyntheticRespondent>& respondents) {
  const std::uint64_t group_seed = derive_seed(config.seed, spec.group_id);
  const auto& vc = config.variability;
  auto series = simulate_climate(spec.true_scale, vc.period_end - vc.period_start,
                                 derive_seed(group_seed, "climate"), vc.period_start,
                                 config.ar_coefficient, spec.group_id);
  group.group_id = spec.group_id;
  group.cell = spec.cell;
  group.true_scale = spec.true_scale;
  group.index = average_variability(series, vc);

  std::vector<double> eta_hats;
  std::vector<double> theta_path;
  for (const auto& g : group.index.per_generation) {
    eta_hats.push_back(g.eta_hat);
    theta_path.push_back(transmit_prior(eta_hats));
  }
  group.theta = transmit_prior(eta_hats);
  group.xi_star = model.xi_star(group.theta);
  group.folklore = simulate_folklore(theta_path, model, config.motifs_per_generation,
                                     derive_seed(group_seed, "folklore"));

  Engine responses(derive_seed(group_seed, "responses"));
  Engine controls(derive_seed(group_seed, "controls"));
  respondents.clear();
  for (int r = 0; r < spec.n_respondents; ++r) {
    SyntheticRespondent row;
    row.group_id = spec.group_id;
    row.cell = spec.cell;
    row.avg_variability = group.index.avg_variability;
    double value = group.xi_star;
    if (config.noise_sd > 0.0) value += config.noise_sd * standard_normal(responses);
    row.attention = snap_response(value, config.response_levels);
    for (int k = 0; k < config.n_controls; ++k) row.controls.push_back(standard_normal(controls));
    respondents.push_back(std::move(row));
  }
}

}  // namespace detail

/// Simulates every group (optionally across `config.threads` workers) and
/// returns the respondent and group tables in canonical group_id order.
inline SyntheticDataset build_dataset(std::vector<GroupSpec> groups, const CohortConfig& config,
                                      const AttentionModel& model) {
  config.validate();
  model.validate();
  for (const auto& g : groups) g.validate();
  std::sort(groups.begin(), groups.end(),
            [](const GroupSpec& l, const GroupSpec& r) { return l.group_id < r.group_id; });
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (groups[i].group_id == groups[i - 1].group_id) {
      throw InputError("duplicate group_id '" + groups[i].group_id + "'");
    }
  }

  std::vector<SyntheticGroup> out_groups(groups.size());
  std::vector<std::vector<SyntheticRespondent>> out_rows(groups.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads, groups.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      detail::simulate_group(groups[i], config, model, out_groups[i], out_rows[i]);
    }
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < groups.size(); i += workers) {
              detail::simulate_group(groups[i], config, model, out_groups[i], out_rows[i]);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SyntheticDataset data;
  data.n_controls = config.n_controls;
  data.groups = std::move(out_groups);
  for (auto& rows : out_rows)
    for (auto& r : rows) data.respondents.push_back(std::move(r));
  return data;
}

/// Group specs with true scales drawn uniformly on [scale_low, scale_high] and
/// cells assigned round-robin.
inline std::vector<GroupSpec> make_groups(int n_groups, double scale_low, double scale_high,
                                          int n_cells, int respondents, std::uint64_t seed) {
  if (n_groups < 1) throw InputError("make_groups: need at least one group");
  if (n_cells < 1) throw InputError("make_groups: need at least one cell");
  if (!(scale_low > 0.0 && scale_high >= scale_low)) {
    throw InputError("make_groups: need 0 < scale_low <= scale_high");
  }
  Engine engine(derive_seed(seed, "groups"));
  const int width = static_cast<int>(std::to_string(n_groups).size());
  std::vector<GroupSpec> out;
  out.reserve(static_cast<std::size_t>(n_groups));
  for (int i = 0; i < n_groups; ++i) {
    std::string id = std::to_string(i + 1);
    id = "g" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    const double scale = scale_low + (scale_high - scale_low) * uniform01(engine);
    out.push_back({std::move(id), scale, "c" + std::to_string(i % n_cells + 1), respondents});
  }
  return out;
}

}  // namespace climattn
