#pragma once

// Polynomial regressions with absorbed fixed effects and cluster-robust
// (CR1) covariance, plus margins and the U-shape test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "climattn/error.hpp"

namespace climattn {

/// Column store with numeric columns and string key columns.
class DataTable {
 public:
  std::size_t rows() const { return rows_; }

  void set_numeric(std::string name, std::vector<double> values) {
    check_rows(name, values.size());
    for (auto& [n, v] : numeric_) {
      if (n == name) {
        v = std::move(values);
        return;
      }
    }
    numeric_.emplace_back(std::move(name), std::move(values));
  }

  void set_key(std::string name, std::vector<std::string> values) {
    check_rows(name, values.size());
    for (auto& [n, v] : keys_) {
      if (n == name) {
        v = std::move(values);
        return;
      }
    }
    keys_.emplace_back(std::move(name), std::move(values));
  }

  bool has_numeric(std::string_view name) const { return find(numeric_, name) != nullptr; }
  bool has_key(std::string_view name) const { return find(keys_, name) != nullptr; }

  const std::vector<double>& numeric(std::string_view name) const {
    if (auto* v = find(numeric_, name)) return *v;
    throw InputError("data table: missing numeric column '" + std::string(name) + "'");
  }

  const std::vector<std::string>& key(std::string_view name) const {
    if (auto* v = find(keys_, name)) return *v;
    throw InputError("data table: missing key column '" + std::string(name) + "'");
  }

  std::vector<std::string> numeric_names() const {
    std::vector<std::string> out;
    for (const auto& [n, v] : numeric_) out.push_back(n);
    return out;
  }

  std::vector<std::string> key_names() const {
    std::vector<std::string> out;
    for (const auto& [n, v] : keys_) out.push_back(n);
    return out;
  }

 private:
  template <class T>
  static const std::vector<T>* find(const std::vector<std::pair<std::string, std::vector<T>>>& cols,
                                    std::string_view name) {
    for (const auto& [n, v] : cols)
      if (n == name) return &v;
    return nullptr;
  }

  void check_rows(const std::string& name, std::size_t n) {
    if (numeric_.empty() && keys_.empty()) {
      rows_ = n;
    } else if (n != rows_) {
      throw InputError("data table: column '" + name + "' has " + std::to_string(n) +
                       " rows, expected " + std::to_string(rows_));
    }
  }

  std::size_t rows_ = 0;
  std::vector<std::pair<std::string, std::vector<double>>> numeric_;
  std::vector<std::pair<std::string, std::vector<std::string>>> keys_;
};

/// Dense integer codes for a key column, in order of first appearance.
struct KeyCodes {
  std::vector<std::size_t> codes;
  std::size_t levels = 0;
};

inline KeyCodes encode_keys(std::span<const std::string> keys) {
  KeyCodes out;
  std::unordered_map<std::string, std::size_t> index;
  out.codes.reserve(keys.size());
  for (const auto& k : keys) {
    auto [it, inserted] = index.try_emplace(k, index.size());
    out.codes.push_back(it->second);
  }
  out.levels = index.size();
  return out;
}

/// Subtracts the within-cell mean from every column of `m`.
inline void demean_within(Eigen::MatrixXd& m, const KeyCodes& cells) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.levels), m.cols());
  std::vector<double> counts(cells.levels, 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(cells.codes[static_cast<std::size_t>(i)]);
    sums.row(c) += m.row(i);
    counts[static_cast<std::size_t>(c)] += 1.0;
  }
  for (Eigen::Index c = 0; c < sums.rows(); ++c) sums.row(c) /= counts[static_cast<std::size_t>(c)];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m.row(i) -= sums.row(static_cast<Eigen::Index>(cells.codes[static_cast<std::size_t>(i)]));
  }
}

struct WithinTransformed {
  DataTable table;                 // numeric columns demeaned, keys copied
  std::vector<bool> singleton;     // rows alone in their cell (all-zero after demeaning)
  std::size_t n_cells = 0;
  std::size_t n_singleton_cells = 0;
};

inline WithinTransformed within_transform(const DataTable& data, std::string_view fe_key) {
  const auto cells = encode_keys(data.key(fe_key));
  const auto names = data.numeric_names();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& col = data.numeric(names[j]);
    for (std::size_t i = 0; i < data.rows(); ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
  }
  demean_within(m, cells);

  WithinTransformed out;
  out.n_cells = cells.levels;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> col(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
      col[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out.table.set_numeric(names[j], std::move(col));
  }
  for (const auto& k : data.key_names()) out.table.set_key(k, data.key(k));

  std::vector<std::size_t> counts(cells.levels, 0);
  for (auto c : cells.codes) ++counts[c];
  out.singleton.resize(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out.singleton[i] = counts[cells.codes[i]] == 1;
  out.n_singleton_cells = static_cast<std::size_t>(std::count(counts.begin(), counts.end(), 1u));
  return out;
}

struct OlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
};

/// Least squares through column-pivoted Householder QR. Columns that are
/// linearly dependent (relative threshold 1e-10) are reported by name.
inline OlsResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     std::span<const std::string> column_names = {}) {
  if (X.rows() != y.size()) throw InputError("ols: design and outcome row counts differ");
  if (X.rows() < X.cols()) {
    throw InputError("ols: fewer observations (" + std::to_string(X.rows()) + ") than columns (" +
                     std::to_string(X.cols()) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < X.cols(); ++k) {
      const auto col = static_cast<std::size_t>(perm(k));
      if (!names.empty()) names += ", ";
      names += col < column_names.size() ? column_names[col] : "column " + std::to_string(col);
    }
    throw InputError("ols: rank-deficient design; collinear columns: " + names);
  }
  OlsResult out;
  out.beta = qr.solve(y);
  out.residuals = y - X * out.beta;
  return out;
}

/// CR1 sandwich (X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1 scaled by
/// [G / (G - 1)] [(N - 1) / (N - K)].
inline Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                    const KeyCodes& clusters) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (clusters.levels < 2) throw InputError("cluster_vcov: at least two clusters required");
  if (n <= k) throw InputError("cluster_vcov: need more observations than columns");
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters.levels), k);
  for (Eigen::Index i = 0; i < n; ++i) {
    scores.row(static_cast<Eigen::Index>(clusters.codes[static_cast<std::size_t>(i)])) +=
        residuals(i) * X.row(i);
  }
  const Eigen::MatrixXd meat = scores.transpose() * scores;
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  const double g = static_cast<double>(clusters.levels);
  const double factor = g / (g - 1.0) * (static_cast<double>(n - 1) / static_cast<double>(n - k));
  Eigen::MatrixXd v = factor * bread * meat * bread;
  return 0.5 * (v + v.transpose());
}

inline Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                    std::span<const std::string> clusters) {
  if (static_cast<Eigen::Index>(clusters.size()) != X.rows()) {
    throw InputError("cluster_vcov: cluster labels do not match the design rows");
  }
  return cluster_vcov(X, residuals, encode_keys(clusters));
}

/// Name of the k-th power of the regressor column.
inline std::string power_name(const std::string& regressor, int k) {
  if (k == 1) return regressor;
  if (k == 2) return regressor + "_sq";
  return regressor + "_pow" + std::to_string(k);
}

struct RegressionSpec {
  std::string outcome = "attention";
  std::string regressor = "avg_variability";
  int degree = 2;
  std::vector<std::string> controls;
  std::string fe_key;       // empty: no absorbed effects, an intercept is fitted
  std::string cluster_key;  // empty: every observation is its own cluster (HC1)

  void validate() const {
    if (degree < 2) throw InputError("regression: degree must be at least 2");
    std::vector<std::string> names;
    for (int k = 1; k <= degree; ++k) names.push_back(power_name(regressor, k));
    for (const auto& c : controls) names.push_back(c);
    names.push_back(outcome);
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InputError("regression: regressor names must be distinct");
    }
  }
};

struct FitResult {
  std::string regressor = "avg_variability";
  int degree = 2;
  std::vector<std::string> names;  // coefficient order; "const" when no fixed effects
  Eigen::VectorXd beta;
  Eigen::MatrixXd vcov;
  double intercept = 0.0;  // with absorbed effects: ybar - xbar' beta
  std::map<std::string, double> column_means;
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  std::size_t n_cells = 0;
  std::size_t n_singleton_cells = 0;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }

  double coefficient(std::string_view name) const {
    if (auto i = index_of(name)) return beta(static_cast<Eigen::Index>(*i));
    return 0.0;
  }

  double std_error(std::string_view name) const {
    if (auto i = index_of(name)) {
      const auto j = static_cast<Eigen::Index>(*i);
      return std::sqrt(std::max(vcov(j, j), 0.0));
    }
    return 0.0;
  }

  std::map<std::string, double> coefficients() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = beta(static_cast<Eigen::Index>(i));
    return out;
  }

  /// A fit assembled from reported polynomial coefficients (power 1 first),
  /// e.g. to evaluate published estimates. `std_errors`, when given, fill a
  /// diagonal covariance.
  static FitResult from_coefficients(std::string regressor, std::vector<double> power_coefs,
                                     double intercept = 0.0, std::vector<double> std_errors = {},
                                     std::size_t n_clusters = 0) {
    FitResult fit;
    fit.regressor = std::move(regressor);
    fit.degree = static_cast<int>(power_coefs.size());
    fit.beta = Eigen::Map<Eigen::VectorXd>(power_coefs.data(),
                                           static_cast<Eigen::Index>(power_coefs.size()));
    fit.vcov = Eigen::MatrixXd::Zero(fit.beta.size(), fit.beta.size());
    for (std::size_t i = 0; i < std_errors.size() && i < power_coefs.size(); ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      fit.vcov(j, j) = std_errors[i] * std_errors[i];
    }
    for (int k = 1; k <= fit.degree; ++k) fit.names.push_back(power_name(fit.regressor, k));
    fit.intercept = intercept;
    fit.n_clusters = n_clusters;
    return fit;
  }
};

/// Within transformation, QR least squares and CR1 covariance.
inline FitResult quadratic_fit(const DataTable& data, const RegressionSpec& spec) {
  spec.validate();
  const std::size_t n = data.rows();
  if (n == 0) throw InputError("regression: empty data");

  const auto& x = data.numeric(spec.regressor);
  const auto& y_col = data.numeric(spec.outcome);

  FitResult fit;
  fit.regressor = spec.regressor;
  fit.degree = spec.degree;
  for (int k = 1; k <= spec.degree; ++k) fit.names.push_back(power_name(spec.regressor, k));
  for (const auto& c : spec.controls) fit.names.push_back(c);
  const bool absorb = !spec.fe_key.empty();
  if (!absorb) fit.names.push_back("const");

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(fit.names.size()));
  Eigen::VectorXd y(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    double p = 1.0;
    for (int k = 1; k <= spec.degree; ++k) {
      p *= x[i];
      X(r, k - 1) = p;
    }
    y(r) = y_col[i];
  }
  for (std::size_t c = 0; c < spec.controls.size(); ++c) {
    const auto& col = data.numeric(spec.controls[c]);
    for (std::size_t i = 0; i < n; ++i) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(spec.degree) + static_cast<Eigen::Index>(c)) = col[i];
    }
  }
  if (!absorb) X.col(X.cols() - 1).setOnes();

  const Eigen::RowVectorXd x_means = X.colwise().mean();
  const double y_mean = y.mean();
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    fit.column_means[fit.names[j]] = x_means(static_cast<Eigen::Index>(j));
  }

  Eigen::MatrixXd Xw = X;
  Eigen::VectorXd yw = y;
  if (absorb) {
    const auto cells = encode_keys(data.key(spec.fe_key));
    Eigen::MatrixXd joint(rows, X.cols() + 1);
    joint << X, y;
    demean_within(joint, cells);
    Xw = joint.leftCols(X.cols());
    yw = joint.col(X.cols());
    fit.n_cells = cells.levels;
    std::vector<std::size_t> counts(cells.levels, 0);
    for (auto c : cells.codes) ++counts[c];
    fit.n_singleton_cells = static_cast<std::size_t>(std::count(counts.begin(), counts.end(), 1u));
  }

  const auto result = ols(Xw, yw, fit.names);
  fit.beta = result.beta;

  KeyCodes clusters;
  if (spec.cluster_key.empty()) {
    clusters.codes.resize(n);
    for (std::size_t i = 0; i < n; ++i) clusters.codes[i] = i;
    clusters.levels = n;
  } else {
    clusters = encode_keys(data.key(spec.cluster_key));
  }
  fit.vcov = cluster_vcov(Xw, result.residuals, clusters);
  fit.n_obs = n;
  fit.n_clusters = clusters.levels;

  const double ssr = result.residuals.squaredNorm();
  const double tss = (y.array() - y_mean).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 0.0;
  const double params = static_cast<double>(Xw.cols() + static_cast<Eigen::Index>(fit.n_cells));
  const double dof = static_cast<double>(n) - params;
  fit.adj_r_squared = dof > 0.0 ? 1.0 - (1.0 - fit.r_squared) * (static_cast<double>(n) - 1.0) / dof
                                : std::numeric_limits<double>::quiet_NaN();
  if (absorb) {
    fit.intercept = y_mean - x_means.dot(fit.beta);
  } else {
    fit.intercept = fit.beta(fit.beta.size() - 1);
  }
  return fit;
}

/// -b1 / (2 b2) when the quadratic term is positive.
inline std::optional<double> turning_point(const FitResult& fit) {
  const double b1 = fit.coefficient(power_name(fit.regressor, 1));
  const double b2 = fit.coefficient(power_name(fit.regressor, 2));
  if (!(b2 > 0.0)) return std::nullopt;
  return -b1 / (2.0 * b2);
}

struct MarginsCurve {
  std::vector<double> grid;
  std::vector<double> predicted;
  std::map<std::string, double> held_at;
  std::optional<double> turning_point;
};

/// Predicted outcome over the regressor grid with the other regressors held at
/// `held_at` (defaulting to their sample means).
inline MarginsCurve margins(const FitResult& fit, std::span<const double> grid,
                            const std::map<std::string, double>& held_at = {},
                            std::optional<std::pair<double, double>> support = std::nullopt) {
  MarginsCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  double offset = fit.intercept;
  for (std::size_t j = static_cast<std::size_t>(fit.degree); j < fit.names.size(); ++j) {
    const auto& name = fit.names[j];
    if (name == "const") continue;
    double value;
    if (auto it = held_at.find(name); it != held_at.end()) {
      value = it->second;
    } else if (auto m = fit.column_means.find(name); m != fit.column_means.end()) {
      value = m->second;
    } else {
      throw InputError("margins: no value to hold '" + name + "' at");
    }
    curve.held_at[name] = value;
    offset += fit.beta(static_cast<Eigen::Index>(j)) * value;
  }
  for (double g : grid) {
    if (support && (g < support->first || g > support->second)) {
      throw InputError("margins: grid point " + std::to_string(g) + " outside support [" +
                       std::to_string(support->first) + ", " + std::to_string(support->second) +
                       "]");
    }
    double value = offset;
    double p = 1.0;
    for (int k = 1; k <= fit.degree; ++k) {
      p *= g;
      value += fit.beta(k - 1) * p;
    }
    if (!std::isfinite(value)) throw NumericalError("margins: non-finite prediction");
    curve.predicted.push_back(value);
  }
  curve.turning_point = turning_point(fit);
  return curve;
}

/// Two margins curves with their minima shifted to 0 and a common rescaling
/// that maps the larger of the two ranges onto [0, 1], so slopes stay
/// comparable across the pair.
inline std::pair<std::vector<double>, std::vector<double>> normalized_margins(
    const FitResult& first, const FitResult& second, std::span<const double> grid,
    const std::map<std::string, double>& held_at = {}) {
  for (const auto* f : {&first, &second}) {
    if (f->degree < 2 || !(f->coefficient(power_name(f->regressor, 2)) > 0.0)) {
      throw InputError("normalized margins: both fits must be quadratic with a positive square term");
    }
  }
  auto a = margins(first, grid, held_at).predicted;
  auto b = margins(second, grid, held_at).predicted;
  const double min_a = *std::min_element(a.begin(), a.end());
  const double min_b = *std::min_element(b.begin(), b.end());
  double top = 0.0;
  for (auto& v : a) top = std::max(top, v -= min_a);
  for (auto& v : b) top = std::max(top, v -= min_b);
  if (!(top > 0.0)) throw InputError("normalized margins: both curves are flat");
  for (auto& v : a) v /= top;
  for (auto& v : b) v /= top;
  return {std::move(a), std::move(b)};
}

/// Two-sided p-value with Student-t(df) reference, or standard normal when
/// df < 1 (fits assembled from reported coefficients).
inline double two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return 1.0;
  const double at = std::abs(t);
  if (df >= 1.0) {
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, at));
  }
  boost::math::normal dist;
  return 2.0 * boost::math::cdf(boost::math::complement(dist, at));
}

/// Significance legend: *** p<0.01, ** p<0.05, * p<0.1, + p<0.15.
inline std::string_view stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  if (p < 0.15) return "+";
  return "";
}

struct UShapeVerdict {
  bool is_u = false;
  std::optional<double> turning_point;
  double beta1 = 0.0, beta2 = 0.0;
  double se1 = 0.0, se2 = 0.0;
  double t1 = 0.0, t2 = 0.0;
  double p1 = 1.0, p2 = 1.0;
  double df = 0.0;
  double level = 0.01;
  bool inside_range = false;
};

inline double t_statistic(double beta, double se) {
  if (se > 0.0) return beta / se;
  if (beta == 0.0) return 0.0;
  return beta > 0.0 ? INFINITY : -INFINITY;
}

/// U-shape: negative linear and positive quadratic terms, both significant at
/// `level` (cluster-robust, G - 1 degrees of freedom), with the turning point
/// strictly inside the observed regressor range.
inline UShapeVerdict u_shape_test(const FitResult& fit, std::pair<double, double> data_range,
                                  double level = 0.01) {
  UShapeVerdict v;
  v.level = level;
  if (fit.degree < 2) return v;
  const auto n1 = power_name(fit.regressor, 1);
  const auto n2 = power_name(fit.regressor, 2);
  v.beta1 = fit.coefficient(n1);
  v.beta2 = fit.coefficient(n2);
  v.se1 = fit.std_error(n1);
  v.se2 = fit.std_error(n2);
  v.t1 = t_statistic(v.beta1, v.se1);
  v.t2 = t_statistic(v.beta2, v.se2);
  v.df = fit.n_clusters >= 2 ? static_cast<double>(fit.n_clusters - 1) : 0.0;
  v.p1 = two_sided_p(v.t1, v.df);
  v.p2 = two_sided_p(v.t2, v.df);
  v.turning_point = turning_point(fit);
  v.inside_range = v.turning_point && *v.turning_point > data_range.first &&
                   *v.turning_point < data_range.second;
  v.is_u = v.beta1 < 0.0 && v.beta2 > 0.0 && v.p1 < level && v.p2 < level && v.inside_range;
  return v;
}

}  // namespace climattn
