#pragma once

// Ancestral climate variability index.
//
// A unit's yearly anomaly series is cut into non-overlapping generation
// windows. Inside each window we measure how far the years that fall outside
// the (alpha, 1 - alpha) empirical quantile band stray from the band edge,
// and the index is the mean of that per-generation intensity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "climattn/error.hpp"

namespace climattn {

struct YearAnomaly {
  int year = 0;
  double anomaly = 0.0;  // degrees C
};

/// Yearly anomalies of one grid cell or ethnic group, years strictly increasing.
class TemperatureSeries {
 public:
  TemperatureSeries() = default;

  TemperatureSeries(std::string unit_id, std::vector<YearAnomaly> observations)
      : unit_id_(std::move(unit_id)), observations_(std::move(observations)) {
    for (std::size_t i = 0; i < observations_.size(); ++i) {
      if (!std::isfinite(observations_[i].anomaly)) {
        throw InputError("series '" + unit_id_ + "': non-finite anomaly in year " +
                         std::to_string(observations_[i].year));
      }
      if (i > 0 && observations_[i].year <= observations_[i - 1].year) {
        throw InputError("series '" + unit_id_ + "': years must be strictly increasing (year " +
                         std::to_string(observations_[i].year) + " after " +
                         std::to_string(observations_[i - 1].year) + ")");
      }
    }
  }

  const std::string& unit_id() const { return unit_id_; }
  const std::vector<YearAnomaly>& observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }

 private:
  std::string unit_id_;
  std::vector<YearAnomaly> observations_;
};

enum class VariabilityMeasure {
  kQuantileDeviation,
  kSquaredQuantileDeviation,
  kStdDev,
};

inline std::string_view to_string(VariabilityMeasure m) {
  switch (m) {
    case VariabilityMeasure::kQuantileDeviation: return "quantile_deviation";
    case VariabilityMeasure::kSquaredQuantileDeviation: return "squared_quantile_deviation";
    case VariabilityMeasure::kStdDev: return "std_dev";
  }
  return "unknown";
}

inline VariabilityMeasure parse_measure(std::string_view text) {
  if (text == "quantile_deviation") return VariabilityMeasure::kQuantileDeviation;
  if (text == "squared_quantile_deviation") return VariabilityMeasure::kSquaredQuantileDeviation;
  if (text == "std_dev") return VariabilityMeasure::kStdDev;
  throw InputError("unknown variability measure '" + std::string(text) +
                   "' (expected quantile_deviation, squared_quantile_deviation or std_dev)");
}

struct VariabilityConfig {
  int period_start = 1600;
  int period_end = 1920;  // exclusive
  int span_years = 20;
  double alpha = 0.2;
  VariabilityMeasure measure = VariabilityMeasure::kQuantileDeviation;

  /// Number of full generation windows; a trailing partial window is dropped.
  int generations() const { return (period_end - period_start) / span_years; }

  void validate() const {
    if (period_end <= period_start) {
      throw InputError("variability config: period_end must exceed period_start");
    }
    if (span_years < 2) throw InputError("variability config: span_years must be at least 2");
    if (!(alpha > 0.0 && alpha < 0.5)) {
      throw InputError("variability config: alpha must lie in (0, 0.5)");
    }
    if (generations() < 1) {
      throw InputError("variability config: no full generation window fits the period");
    }
  }
};

struct GenerationVariability {
  int generation_index = 1;  // 1-based
  double eta_hat = 0.0;
  std::size_t excursion_count = 0;
};

struct AncestralVariability {
  std::string unit_id;
  double avg_variability = 0.0;
  std::vector<GenerationVariability> per_generation;
  VariabilityConfig config_used;
};

/// Splits the series into consecutive half-open windows
/// [start + k*span, start + (k+1)*span). Every year of the configured period
/// must be present; gaps are reported rather than imputed.
inline std::vector<std::vector<double>> partition_generations(const TemperatureSeries& series,
                                                              const VariabilityConfig& config) {
  config.validate();
  const auto& obs = series.observations();
  auto first = std::lower_bound(obs.begin(), obs.end(), config.period_start,
                                [](const YearAnomaly& o, int y) { return o.year < y; });
  int expected = config.period_start;
  std::vector<double> in_period;
  in_period.reserve(static_cast<std::size_t>(config.period_end - config.period_start));
  for (auto it = first; it != obs.end() && it->year < config.period_end; ++it) {
    if (it->year != expected) {
      throw InputError("series '" + series.unit_id() + "': missing year " +
                       std::to_string(expected));
    }
    in_period.push_back(it->anomaly);
    ++expected;
  }
  if (expected != config.period_end) {
    throw InputError("series '" + series.unit_id() + "': missing year " +
                     std::to_string(expected));
  }

  const auto span = static_cast<std::size_t>(config.span_years);
  std::vector<std::vector<double>> windows(static_cast<std::size_t>(config.generations()));
  for (std::size_t g = 0; g < windows.size(); ++g) {
    windows[g].assign(in_period.begin() + static_cast<std::ptrdiff_t>(g * span),
                      in_period.begin() + static_cast<std::ptrdiff_t>((g + 1) * span));
  }
  return windows;
}

namespace detail {

// 1-based rank of the type-1 quantile: smallest k with k/n >= p. The slack
// keeps products such as 20 * 0.3 from landing one ulp above an integer.
inline std::size_t quantile_rank(std::size_t n, double p) {
  const double target = static_cast<double>(n) * p - 1e-9;
  auto k = static_cast<std::size_t>(std::ceil(target));
  return std::clamp<std::size_t>(k, 1, n);
}

inline double sorted_quantile(std::span<const double> sorted, double p) {
  return sorted[quantile_rank(sorted.size(), p) - 1];
}

}  // namespace detail

/// Inverse empirical CDF without interpolation: the smallest sample value v
/// whose empirical CDF reaches p.
inline double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw InputError("empirical_quantile: empty input");
  if (!(p > 0.0 && p < 1.0)) throw InputError("empirical_quantile: p must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return detail::sorted_quantile(sorted, p);
}

struct DeviationIntensity {
  double eta_hat = 0.0;
  std::size_t excursion_count = 0;
};

namespace detail {

// Shared core of the two quantile-band measures; `power` is 1 or 2.
inline DeviationIntensity band_excursions(std::span<const double> values, double alpha, int power) {
  if (values.empty()) throw InputError("deviation_intensity: empty window");
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw InputError("deviation_intensity: alpha must lie in (0, 0.5)");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lower = sorted_quantile(sorted, alpha);
  const double upper = sorted_quantile(sorted, 1.0 - alpha);

  double total = 0.0;
  std::size_t count = 0;
  for (double v : values) {
    double distance;
    if (v < lower) {
      distance = lower - v;
    } else if (v > upper) {
      distance = v - upper;
    } else {
      continue;
    }
    total += power == 2 ? distance * distance : distance;
    ++count;
  }
  // Zero excursions (constant or heavily tied window) means zero intensity.
  return {count == 0 ? 0.0 : total / static_cast<double>(count), count};
}

}  // namespace detail

/// Mean absolute distance of strict excursions beyond the (alpha, 1 - alpha)
/// quantile band to the violated band edge, and the number of excursions.
inline DeviationIntensity deviation_intensity(std::span<const double> values, double alpha) {
  return detail::band_excursions(values, alpha, 1);
}

inline double population_stddev(std::span<const double> values) {
  if (values.empty()) throw InputError("population_stddev: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

inline GenerationVariability generation_variability(std::span<const double> values,
                                                    const VariabilityConfig& config,
                                                    int generation_index = 1) {
  if (values.empty()) throw InputError("generation_variability: empty window");
  GenerationVariability out;
  out.generation_index = generation_index;
  switch (config.measure) {
    case VariabilityMeasure::kQuantileDeviation:
    case VariabilityMeasure::kSquaredQuantileDeviation: {
      int power = config.measure == VariabilityMeasure::kSquaredQuantileDeviation ? 2 : 1;
      auto d = detail::band_excursions(values, config.alpha, power);
      out.eta_hat = d.eta_hat;
      out.excursion_count = d.excursion_count;
      break;
    }
    case VariabilityMeasure::kStdDev:
      out.eta_hat = population_stddev(values);
      out.excursion_count = values.size();
      break;
  }
  return out;
}

inline AncestralVariability average_variability(const TemperatureSeries& series,
                                                const VariabilityConfig& config) {
  auto windows = partition_generations(series, config);
  AncestralVariability out;
  out.unit_id = series.unit_id();
  out.config_used = config;
  out.per_generation.reserve(windows.size());
  double sum = 0.0;
  for (std::size_t g = 0; g < windows.size(); ++g) {
    out.per_generation.push_back(
        generation_variability(windows[g], config, static_cast<int>(g + 1)));
    sum += out.per_generation.back().eta_hat;
  }
  out.avg_variability = sum / static_cast<double>(windows.size());
  return out;
}

/// Maps each group onto the index value of its linked unit. Every link must
/// resolve; unresolved groups are listed in the error.
inline std::map<std::string, AncestralVariability> attach_to_groups(
    const std::map<std::string, AncestralVariability>& index,
    const std::map<std::string, std::string>& link_table) {
  std::map<std::string, AncestralVariability> out;
  std::string missing;
  for (const auto& [group_id, unit_id] : link_table) {
    auto it = index.find(unit_id);
    if (it == index.end()) {
      if (!missing.empty()) missing += ", ";
      missing += group_id + " (unit " + unit_id + ")";
      continue;
    }
    out.emplace(group_id, it->second);
  }
  if (!missing.empty()) throw InputError("link table references unknown units: " + missing);
  return out;
}

}  // namespace climattn
