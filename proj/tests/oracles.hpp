#pragma once

// Test-only reference implementations. They follow the textbook definitions
// directly and deliberately share no code with the library paths they check.

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "climattn/variability.hpp"

namespace climattn::oracle {

/// Smallest sample value v with #{x <= v} / n >= p, found by counting.
inline double quantile_by_counting(const std::vector<double>& values, double p) {
  const double n = static_cast<double>(values.size());
  double best = INFINITY;
  for (double v : values) {
    double below_or_equal = 0;
    for (double x : values) below_or_equal += x <= v ? 1 : 0;
    if (below_or_equal >= n * p - 1e-9 && v < best) best = v;
  }
  return best;
}

inline double window_statistic(const std::vector<double>& w, const VariabilityConfig& c) {
  const double n = static_cast<double>(w.size());
  if (c.measure == VariabilityMeasure::kStdDev) {
    double mean = 0;
    for (double x : w) mean += x / n;
    double ss = 0;
    for (double x : w) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / n);
  }
  const double lo = quantile_by_counting(w, c.alpha);
  const double hi = quantile_by_counting(w, 1.0 - c.alpha);
  double total = 0;
  int k = 0;
  for (double x : w) {
    double d = 0;
    if (x < lo) {
      d = std::abs(x - lo);
    } else if (x > hi) {
      d = std::abs(x - hi);
    } else {
      continue;
    }
    total += c.measure == VariabilityMeasure::kSquaredQuantileDeviation ? d * d : d;
    ++k;
  }
  return k == 0 ? 0.0 : total / k;
}

/// Groups years by (year - start) / span directly from the observations.
inline double brute_force_average_variability(const TemperatureSeries& s,
                                              const VariabilityConfig& c) {
  const int generations = (c.period_end - c.period_start) / c.span_years;
  std::map<int, std::vector<double>> windows;
  for (const auto& o : s.observations()) {
    if (o.year < c.period_start) continue;
    const int g = (o.year - c.period_start) / c.span_years;
    if (g >= generations) continue;
    windows[g].push_back(o.anomaly);
  }
  double sum = 0;
  for (const auto& [g, w] : windows) sum += window_statistic(w, c);
  return sum / generations;
}

/// beta from the normal equations solved by explicit inversion.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return (X.transpose() * X).inverse() * (X.transpose() * y);
}

/// OLS with explicit cell dummies (no intercept) appended to X.
inline Eigen::VectorXd dummy_variable_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          const std::vector<int>& cells, int n_cells) {
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(X.rows(), X.cols() + n_cells);
  full.leftCols(X.cols()) = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i) full(i, X.cols() + cells[static_cast<std::size_t>(i)]) = 1.0;
  Eigen::VectorXd b = full.colPivHouseholderQr().solve(y);
  return b.head(X.cols());
}

/// Cluster sandwich written out cluster by cluster with explicit inverses.
inline Eigen::MatrixXd long_form_cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u,
                                              const std::vector<int>& cluster) {
  const Eigen::Index n = X.rows(), k = X.cols();
  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < n; ++i) members[cluster[static_cast<std::size_t>(i)]].push_back(i);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [g, rows] : members) {
    Eigen::MatrixXd Xg(static_cast<Eigen::Index>(rows.size()), k);
    Eigen::VectorXd ug(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Xg.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
      ug(static_cast<Eigen::Index>(r)) = u(rows[r]);
    }
    meat += Xg.transpose() * ug * ug.transpose() * Xg;
  }
  const Eigen::MatrixXd inv = (X.transpose() * X).inverse();
  const double G = static_cast<double>(members.size());
  const double factor = G / (G - 1) * double(n - 1) / double(n - k);
  return factor * inv * meat * inv;
}

/// HC1: n / (n - k) (X'X)^-1 (sum_i u_i^2 x_i x_i') (X'X)^-1.
inline Eigen::MatrixXd hc1_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& u) {
  const Eigen::Index n = X.rows(), k = X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) meat += u(i) * u(i) * X.row(i).transpose() * X.row(i);
  const Eigen::MatrixXd inv = (X.transpose() * X).inverse();
  return double(n) / double(n - k) * inv * meat * inv;
}

}  // namespace climattn::oracle
