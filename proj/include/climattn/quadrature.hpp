#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "climattn/error.hpp"

namespace climattn {

/// Fixed-node trapezoid rule against the standard normal density.
///
/// For integrands that are analytic and decay like a Gaussian, the trapezoid
/// rule on a truncated line converges geometrically in the node spacing, so a
/// fixed grid of a few hundred panels is already at rounding level. The
/// result is always cross-checked against the same rule with twice the panels
/// and the refined value is returned.
struct QuadratureSettings {
  std::size_t panels = 400;   // coarse panel count; the check uses 2 * panels
  double half_width = 10.0;   // base truncation of the standard normal line
  double rel_tol = 1e-8;      // allowed coarse/refined disagreement
};

namespace detail {

template <std::size_t K, class F>
std::array<double, K> trapezoid_normal(F&& f, double lo, double hi, std::size_t panels) {
  const double h = (hi - lo) / static_cast<double>(panels);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::array<double, K> acc{};
  for (std::size_t i = 0; i <= panels; ++i) {
    const double z = lo + h * static_cast<double>(i);
    const double weight = (i == 0 || i == panels ? 0.5 : 1.0) * norm * std::exp(-0.5 * z * z);
    const std::array<double, K> v = f(z);
    for (std::size_t k = 0; k < K; ++k) acc[k] += weight * v[k];
  }
  for (auto& a : acc) a *= h;
  return acc;
}

}  // namespace detail

/// E[f(Z)] for Z ~ N(0, 1), computed for K integrand components at once over
/// [lo, hi]. Throws NumericalError when any component disagrees with its
/// refinement by more than the relative tolerance.
template <std::size_t K, class F>
std::array<double, K> normal_expectation(F&& f, double lo, double hi,
                                         const QuadratureSettings& settings) {
  if (settings.panels < 2) throw InputError("quadrature: at least 2 panels required");
  const auto coarse = detail::trapezoid_normal<K>(f, lo, hi, settings.panels);
  const auto fine = detail::trapezoid_normal<K>(f, lo, hi, 2 * settings.panels);
  for (std::size_t k = 0; k < K; ++k) {
    const double diff = std::abs(fine[k] - coarse[k]);
    const double scale = std::max(std::abs(fine[k]), 1e-300);
    if (!std::isfinite(fine[k]) || diff > settings.rel_tol * scale) {
      throw NumericalError("quadrature did not converge: component " + std::to_string(k) +
                           " coarse=" + std::to_string(coarse[k]) +
                           " refined=" + std::to_string(fine[k]) + " panels=" +
                           std::to_string(settings.panels) + " range=[" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");
    }
  }
  return fine;
}

}  // namespace climattn
