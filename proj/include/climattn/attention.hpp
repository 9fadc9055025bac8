#pragma once

// Rational-inattention model of attention to the environment.
//
// An agent picks a Gaussian signal about the optimal action x ~ N(0, sigma^2)
// at Shannon cost kappa * I. Relabelled by the attention level
// xi = 1 - posterior_variance / sigma^2 the problem is
//
//     max_{xi in [0,1)}  xi * V(theta) - (kappa / 2) * ln(1 / (1 - xi)),
//
// where V(theta) is the prior expectation of the stakes
//     W(eta) = sigma^2 q / (a + eta)        (exploitation, falls with eta)
//     L(eta) = sigma^2 (1 - q) b eta^2      (protection, rises with eta)
// under a scale-family prior eta ~ (1/theta) pbar(eta / theta).
// The optimum is xi* = max{0, 1 - kappa / (2 V)} and is single-troughed in theta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "climattn/error.hpp"
#include "climattn/quadrature.hpp"

namespace climattn {

struct StakesSpec {
  double q = 0.5;         // probability that knowledge serves exploitation
  double sigma_sq = 1.0;  // prior variance of the optimal action
  double a = 0.05;        // exploitation weight w(eta) = 1 / (a + eta)
  double b = 500.0;       // protection weight   l(eta) = b * eta^2

  double exploitation_weight(double eta) const { return 1.0 / (a + eta); }
  double protection_weight(double eta) const { return b * eta * eta; }

  // q = 0 and q = 1 are accepted: they isolate a single motive.
  void validate() const {
    auto finite_pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!(q >= 0.0 && q <= 1.0)) throw InputError("stakes: q must lie in [0, 1]");
    if (!finite_pos(sigma_sq)) throw InputError("stakes: sigma_sq must be finite and positive");
    if (!finite_pos(a)) throw InputError("stakes: a must be finite and positive");
    if (!finite_pos(b)) throw InputError("stakes: b must be finite and positive");
  }
};

struct LognormalReference {
  double log_sd = 0.5;
};
struct PointMassReference {};
struct DiscreteReference {
  std::vector<double> support;
  std::vector<double> weights;
};

/// Prior over climate variability: p0(eta) = (1/theta) pbar(eta / theta).
/// The reference pbar is a standard lognormal with the given log-sd, a unit
/// point mass, or a weighted sample of support points.
class PriorScaleFamily {
 public:
  using Reference = std::variant<LognormalReference, PointMassReference, DiscreteReference>;

  PriorScaleFamily() : PriorScaleFamily(LognormalReference{}, 1.0) {}

  PriorScaleFamily(Reference reference, double theta)
      : reference_(std::move(reference)), theta_(theta) {
    if (!(std::isfinite(theta_) && theta_ > 0.0)) {
      throw InputError("prior: theta must be finite and positive");
    }
    if (auto* ln = std::get_if<LognormalReference>(&reference_)) {
      if (!(std::isfinite(ln->log_sd) && ln->log_sd > 0.0)) {
        throw InputError("prior: lognormal log_sd must be finite and positive");
      }
    }
    if (auto* d = std::get_if<DiscreteReference>(&reference_)) {
      if (d->support.empty() || d->support.size() != d->weights.size()) {
        throw InputError("prior: discrete support and weights must be nonempty and equal length");
      }
      double total = 0.0;
      for (std::size_t i = 0; i < d->support.size(); ++i) {
        if (!(d->support[i] >= 0.0 && std::isfinite(d->support[i]))) {
          throw InputError("prior: discrete support points must be finite and nonnegative");
        }
        if (!(d->weights[i] >= 0.0 && std::isfinite(d->weights[i]))) {
          throw InputError("prior: discrete weights must be finite and nonnegative");
        }
        total += d->weights[i];
      }
      if (!(total > 0.0)) throw InputError("prior: discrete weights sum to zero");
      for (auto& w : d->weights) w /= total;
    }
  }

  static PriorScaleFamily lognormal(double log_sd, double theta = 1.0) {
    return {LognormalReference{log_sd}, theta};
  }
  static PriorScaleFamily point_mass(double theta = 1.0) { return {PointMassReference{}, theta}; }
  static PriorScaleFamily discrete(std::vector<double> support, std::vector<double> weights,
                                   double theta = 1.0) {
    return {DiscreteReference{std::move(support), std::move(weights)}, theta};
  }

  double theta() const { return theta_; }
  const Reference& reference() const { return reference_; }

  PriorScaleFamily with_theta(double theta) const { return {reference_, theta}; }

  /// Mean (mu) of the reference distribution.
  double reference_mean() const {
    return std::visit(
        [](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LognormalReference>) {
            return std::exp(0.5 * r.log_sd * r.log_sd);
          } else if constexpr (std::is_same_v<R, PointMassReference>) {
            return 1.0;
          } else {
            return std::inner_product(r.support.begin(), r.support.end(), r.weights.begin(), 0.0);
          }
        },
        reference_);
  }

  /// Variance (nu^2) of the reference distribution.
  double reference_variance() const {
    return std::visit(
        [](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LognormalReference>) {
            const double s2 = r.log_sd * r.log_sd;
            return std::expm1(s2) * std::exp(s2);
          } else if constexpr (std::is_same_v<R, PointMassReference>) {
            return 0.0;
          } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < r.support.size(); ++i) mean += r.weights[i] * r.support[i];
            double var = 0.0;
            for (std::size_t i = 0; i < r.support.size(); ++i) {
              var += r.weights[i] * (r.support[i] - mean) * (r.support[i] - mean);
            }
            return var;
          }
        },
        reference_);
  }

  std::string kind_name() const {
    switch (reference_.index()) {
      case 0: return "lognormal";
      case 1: return "point_mass";
      default: return "discrete";
    }
  }

  /// E_{p0}[f(eta)] for K integrand components, written through the change of
  /// variable eta = theta * eta_ref with eta_ref ~ pbar. theta = 0 is allowed
  /// here and evaluates the degenerate limit f(0).
  template <std::size_t K, class F>
  std::array<double, K> expect(F&& f, const QuadratureSettings& quad) const {
    return expect_at<K>(theta_, f, quad);
  }

  template <std::size_t K, class F>
  std::array<double, K> expect_at(double theta, F&& f, const QuadratureSettings& quad) const {
    return std::visit(
        [&](const auto& r) -> std::array<double, K> {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LognormalReference>) {
            // Window covers integrands growing up to eta^2, whose Gaussian
            // weight in z is shifted by 2 * log_sd.
            const double h = quad.half_width + 4.0 * r.log_sd;
            const double s = r.log_sd;
            return normal_expectation<K>([&](double z) { return f(theta * std::exp(s * z)); },
                                         -h, h, quad);
          } else if constexpr (std::is_same_v<R, PointMassReference>) {
            return f(theta);
          } else {
            std::array<double, K> acc{};
            for (std::size_t i = 0; i < r.support.size(); ++i) {
              const auto v = f(theta * r.support[i]);
              for (std::size_t k = 0; k < K; ++k) acc[k] += r.weights[i] * v[k];
            }
            return acc;
          }
        },
        reference_);
  }

 private:
  Reference reference_;
  double theta_;
};

struct ScaleMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of p0 computed numerically (used to check E = mu theta
/// and V = nu^2 theta^2).
inline ScaleMoments scale_family_moments(const PriorScaleFamily& prior,
                                         const QuadratureSettings& quad = {}) {
  auto m = prior.expect<2>([](double eta) { return std::array<double, 2>{eta, eta * eta}; }, quad);
  return {m[0], m[1] - m[0] * m[0]};
}

struct CostSpec {
  double kappa = 8.0;  // marginal value of one nat

  /// c(xi) = (kappa / 2) ln(1 / (1 - xi)).
  double cost(double xi) const { return -0.5 * kappa * std::log1p(-xi); }
  double marginal_cost(double xi) const { return 0.5 * kappa / (1.0 - xi); }

  void validate() const {
    if (!(std::isfinite(kappa) && kappa > 0.0)) {
      throw InputError("cost: kappa must be finite and positive");
    }
  }
};

struct ExpectedStakes {
  double exploitation = 0.0;  // integral of W against the prior
  double protection = 0.0;    // integral of L against the prior
  double total() const { return exploitation + protection; }
};

inline ExpectedStakes expected_stakes_at(const StakesSpec& stakes, const PriorScaleFamily& prior,
                                         double theta, const QuadratureSettings& quad = {}) {
  auto m = prior.expect_at<2>(
      theta,
      [&](double eta) {
        return std::array<double, 2>{stakes.exploitation_weight(eta),
                                     stakes.protection_weight(eta)};
      },
      quad);
  return {stakes.sigma_sq * stakes.q * m[0], stakes.sigma_sq * (1.0 - stakes.q) * m[1]};
}

inline ExpectedStakes expected_stakes(const StakesSpec& stakes, const PriorScaleFamily& prior,
                                      const QuadratureSettings& quad = {}) {
  return expected_stakes_at(stakes, prior, prior.theta(), quad);
}

/// xi* = max{0, 1 - kappa / (2 V)}.
inline double optimal_attention(double expected_stakes_total, const CostSpec& cost) {
  const double threshold = 0.5 * cost.kappa;  // c'(0)
  if (!(expected_stakes_total > threshold)) return 0.0;
  return 1.0 - threshold / expected_stakes_total;
}

namespace detail {

constexpr double kBruteStep = 1e-6;
constexpr double kXiCap = 1.0 - 1e-9;

// ln(1 - xi) on the brute-force grid; shared by every call.
inline const std::vector<double>& log_one_minus_grid() {
  static const std::vector<double> table = [] {
    const auto n = static_cast<std::size_t>(std::llround(kXiCap / kBruteStep));
    std::vector<double> t(n + 2);
    for (std::size_t i = 0; i <= n; ++i) t[i] = std::log1p(-static_cast<double>(i) * kBruteStep);
    t[n + 1] = std::log1p(-kXiCap);
    return t;
  }();
  return table;
}

inline double brute_grid_point(std::size_t i, std::size_t size) {
  return i + 1 == size ? kXiCap : static_cast<double>(i) * kBruteStep;
}

}  // namespace detail

/// Direct maximisation of xi V - c(xi): exhaustive grid at step 1e-6 on
/// [0, 1 - 1e-9], then trisection inside the neighbouring grid cells.
/// Independent of the closed form; used as its oracle.
inline double brute_force_attention(double expected_stakes_total, const CostSpec& cost) {
  const auto& table = detail::log_one_minus_grid();
  const double V = expected_stakes_total;
  const double half_kappa = 0.5 * cost.kappa;
  std::size_t best = 0;
  double best_value = -INFINITY;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double value = detail::brute_grid_point(i, table.size()) * V + half_kappa * table[i];
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  auto objective = [&](double xi) { return xi * V + half_kappa * std::log1p(-xi); };
  double lo = best == 0 ? 0.0 : detail::brute_grid_point(best - 1, table.size());
  double hi = best + 1 >= table.size() ? detail::kXiCap
                                       : detail::brute_grid_point(best + 1, table.size());
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) < objective(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  const double xi = 0.5 * (lo + hi);
  // The corner solution sits exactly on the boundary.
  return objective(0.0) >= objective(xi) ? 0.0 : xi;
}

/// Shannon information (nats) of a Gaussian signal that shrinks the variance
/// of x from sigma_sq to posterior_variance: 0.5 ln(sigma_sq / posterior).
inline double gaussian_mutual_information(double sigma_sq, double posterior_variance) {
  if (!(posterior_variance > 0.0)) {
    throw InputError("mutual information: posterior variance must be positive");
  }
  if (posterior_variance > sigma_sq) {
    throw InputError("mutual information: posterior variance exceeds prior variance");
  }
  return 0.5 * std::log(sigma_sq / posterior_variance);
}

/// The full attention model: stakes, prior scale family (its theta is
/// replaced by the evaluation point) and information cost.
struct AttentionModel {
  StakesSpec stakes;
  PriorScaleFamily prior = PriorScaleFamily::lognormal(0.5);
  CostSpec cost;
  QuadratureSettings quadrature;

  void validate() const {
    stakes.validate();
    cost.validate();
  }

  ExpectedStakes stakes_at(double theta) const {
    return expected_stakes_at(stakes, prior, theta, quadrature);
  }

  double xi_star(double theta) const { return optimal_attention(stakes_at(theta).total(), cost); }
};

struct AttentionSolution {
  double theta = 0.0;
  double xi_star = 0.0;
  double posterior_variance = 0.0;
  ExpectedStakes expected;
};

inline AttentionSolution solve_attention(const AttentionModel& model, double theta) {
  AttentionSolution s;
  s.theta = theta;
  s.expected = model.stakes_at(theta);
  s.xi_star = optimal_attention(s.expected.total(), model.cost);
  s.posterior_variance = model.stakes.sigma_sq * (1.0 - s.xi_star);
  return s;
}

/// xi*(theta) over a strictly increasing grid of positive scales.
inline std::vector<AttentionSolution> attention_curve(const AttentionModel& model,
                                                      std::span<const double> theta_grid) {
  model.validate();
  std::vector<AttentionSolution> curve;
  curve.reserve(theta_grid.size());
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    if (!(theta_grid[i] > 0.0) || !std::isfinite(theta_grid[i])) {
      throw InputError("attention curve: theta values must be finite and positive");
    }
    if (i > 0 && !(theta_grid[i] > theta_grid[i - 1])) {
      throw InputError("attention curve: theta grid must be strictly increasing");
    }
    curve.push_back(solve_attention(model, theta_grid[i]));
  }
  return curve;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw InputError("log_spaced: need 0 < lo <= hi, n >= 1");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

struct Thresholds {
  double theta_low = 0.0;    // xi* strictly decreasing on (0, theta_low]
  double theta_tilde = 0.0;  // argmin of V(theta)
  double theta_high = 0.0;   // xi* strictly increasing on [theta_high, inf)
  double min_expected_stakes = 0.0;
  bool level_set_empty = true;  // V >= kappa / 2 everywhere
};

struct ThresholdSearch {
  double initial_theta = 1e-3;
  double theta_max = 1e6;
  double tolerance = 1e-10;
};

/// Locates the trough of V = W + L and the edges of the zero-attention set
/// {theta : V(theta) < kappa / 2}. When that set is empty all three
/// thresholds coincide at the argmin.
inline Thresholds find_thresholds(const AttentionModel& model, const ThresholdSearch& search = {}) {
  model.validate();
  auto F = [&](double theta) { return model.stakes_at(theta).total(); };
  const double target = 0.5 * model.cost.kappa;

  double t = search.initial_theta;
  while (F(2.0 * t) < F(t)) {
    t *= 2.0;
    if (2.0 * t > search.theta_max) {
      throw NumericalError("thresholds: expected stakes still decreasing at theta = " +
                           std::to_string(2.0 * t) + "; no trough within theta_max = " +
                           std::to_string(search.theta_max));
    }
  }

  // Golden-section search for the argmin on [0, 2t].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 2.0 * t;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = F(x1), f2 = F(x2);
  while (hi - lo > search.tolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = F(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = F(x2);
    }
  }
  Thresholds out;
  out.theta_tilde = 0.5 * (lo + hi);
  out.min_expected_stakes = F(out.theta_tilde);
  if (out.min_expected_stakes >= target) {
    out.theta_low = out.theta_high = out.theta_tilde;
    out.level_set_empty = true;
    return out;
  }
  out.level_set_empty = false;

  // Bisection keeps F(above) >= target > F(below).
  auto bisect = [&](double above, double below) {
    while (std::abs(above - below) > search.tolerance) {
      const double mid = 0.5 * (above + below);
      if (mid == above || mid == below) break;
      (F(mid) >= target ? above : below) = mid;
    }
    return 0.5 * (above + below);
  };

  out.theta_low = F(0.0) < target ? 0.0 : bisect(0.0, out.theta_tilde);

  double right = std::max(2.0 * out.theta_tilde, search.initial_theta);
  while (F(right) < target) {
    right *= 2.0;
    if (right > search.theta_max) {
      throw NumericalError("thresholds: zero-attention set extends beyond theta_max = " +
                           std::to_string(search.theta_max));
    }
  }
  out.theta_high = bisect(right, out.theta_tilde);
  return out;
}

struct TroughReport {
  bool passes = false;
  double trough_low = 0.0;   // bracket holding the minimiser of the sampled curve
  double trough_high = 0.0;
  std::string reason;
};

/// Checks the decreasing / flat / increasing sign pattern of a sampled curve.
/// Differences within `flat_tolerance` of zero count as flat. The reported
/// bracket runs from the grid point before the lowest stretch to the grid
/// point after it, so it contains the minimiser of the underlying function.
inline TroughReport verify_single_trough(std::span<const double> x, std::span<const double> y,
                                         double flat_tolerance = 1e-12,
                                         std::size_t min_points = 100) {
  TroughReport report;
  if (x.size() != y.size()) {
    report.reason = "abscissa and ordinate lengths differ";
    return report;
  }
  if (x.size() < min_points) {
    report.reason = "insufficient points: " + std::to_string(x.size()) + " < " +
                    std::to_string(min_points);
    return report;
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) {
      report.reason = "grid not strictly increasing";
      return report;
    }
  }

  std::optional<std::size_t> last_down, first_up;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    const double d = y[i + 1] - y[i];
    if (d < -flat_tolerance) {
      if (first_up) {
        report.reason = "curve decreases again at x = " + std::to_string(x[i]) +
                        " after increasing from x = " + std::to_string(x[*first_up]);
        return report;
      }
      last_down = i;
    } else if (d > flat_tolerance && !first_up) {
      first_up = i;
    }
  }
  const std::size_t bottom_start = last_down ? *last_down + 1 : 0;
  const std::size_t bottom_end = first_up ? *first_up : y.size() - 1;
  report.passes = true;
  report.trough_low = x[bottom_start == 0 ? 0 : bottom_start - 1];
  report.trough_high = x[std::min(bottom_end + 1, y.size() - 1)];
  return report;
}

inline TroughReport verify_single_trough(std::span<const AttentionSolution> curve,
                                         double flat_tolerance = 1e-12,
                                         std::size_t min_points = 100) {
  std::vector<double> x, y;
  x.reserve(curve.size());
  y.reserve(curve.size());
  for (const auto& p : curve) {
    x.push_back(p.theta);
    y.push_back(p.xi_star);
  }
  return verify_single_trough(x, y, flat_tolerance, min_points);
}

}  // namespace climattn
