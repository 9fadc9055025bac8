#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "climattn/econometrics.hpp"
#include "climattn/random.hpp"
#include "climattn/transmission.hpp"
#include "oracles.hpp"

namespace climattn {
namespace {

std::vector<std::string> labels(const std::vector<int>& codes, const char* prefix) {
  std::vector<std::string> out;
  for (int c : codes) out.push_back(prefix + std::to_string(c));
  return out;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

TEST(WithinTransform, SingleCellRemovesColumnMeans) {
  DataTable t;
  t.set_numeric("y", {1, 2, 3, 6});
  t.set_numeric("x", {0.5, 0.5, 1.5, 1.5});
  t.set_key("cell", {"a", "a", "a", "a"});
  auto w = within_transform(t, "cell");
  const std::vector<double> y{-2, -1, 0, 3};
  const std::vector<double> x{-0.5, -0.5, 0.5, 0.5};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(w.table.numeric("y")[i], y[i]);
    EXPECT_DOUBLE_EQ(w.table.numeric("x")[i], x[i]);
  }
  EXPECT_EQ(w.n_cells, 1u);
  EXPECT_EQ(w.n_singleton_cells, 0u);
}

TEST(WithinTransform, ConstantWithinCellsGivesZerosAndFlagsSingletons) {
  DataTable t;
  t.set_numeric("v", {4, 4, 7, 7, 7, 9});
  t.set_key("cell", {"a", "a", "b", "b", "b", "c"});
  auto w = within_transform(t, "cell");
  for (double v : w.table.numeric("v")) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(w.n_cells, 3u);
  EXPECT_EQ(w.n_singleton_cells, 1u);
  EXPECT_TRUE(w.singleton[5]);
  EXPECT_FALSE(w.singleton[0]);
  EXPECT_THROW(within_transform(t, "country_year"), InputError);
}

TEST(WithinTransform, MatchesDummyRegressionOnTwelveRows) {
  const std::vector<int> cell{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  const std::vector<double> x1{0.3, 1.2, -0.7, 2.2, 0.1, 0.4, 1.9, -1.1, 0.8, 0.2, -0.3, 1.5};
  const std::vector<double> x2{1.0, -0.5, 0.25, 0.75, 2.0, -1.5, 0.5, 0.0, -0.25, 1.25, 0.6, -0.9};
  Eigen::MatrixXd X(12, 2);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    X(i, 0) = x1[i];
    X(i, 1) = x2[i];
    y(i) = 0.5 * x1[i] - 1.25 * x2[i] + 3.0 * cell[i] + 0.1 * std::sin(7.0 * i);
  }
  Eigen::MatrixXd joint(12, 3);
  joint << X, y;
  const auto labels_ = labels(cell, "c");
  demean_within(joint, encode_keys(labels_));
  auto within = ols(joint.leftCols(2), joint.col(2));
  auto dummy = oracle::dummy_variable_ols(X, y, cell, 3);
  EXPECT_LT((within.beta - dummy).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(WithinTransform, MatchesDummyRegressionOnRandomInstances) {
  Engine engine(404);
  for (int rep = 0; rep < 100; ++rep) {
    const int n_cells = 2 + static_cast<int>(uniform01(engine) * 9);
    const int n = n_cells * 2 + 5 + static_cast<int>(uniform01(engine) * (200 - n_cells * 2 - 5));
    const int k = 1 + static_cast<int>(uniform01(engine) * 4);
    std::vector<int> cell(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cell[static_cast<std::size_t>(i)] = i < 2 * n_cells ? i % n_cells : static_cast<int>(uniform01(engine) * n_cells);
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) X(i, j) = standard_normal(engine) + 0.3 * cell[static_cast<std::size_t>(i)];
      y(i) = X.row(i).sum() + cell[static_cast<std::size_t>(i)] + standard_normal(engine);
    }
    Eigen::MatrixXd joint(n, k + 1);
    joint << X, y;
    const auto labels_ = labels(cell, "c");
    demean_within(joint, encode_keys(labels_));
    auto within = ols(joint.leftCols(k), joint.col(k));
    auto dummy = oracle::dummy_variable_ols(X, y, cell, n_cells);
    ASSERT_LT((within.beta - dummy).cwiseAbs().maxCoeff(), 1e-8) << "instance " << rep;
  }
}

TEST(Ols, ExactLine) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  auto r = ols(X, y);
  EXPECT_NEAR(r.beta(0), 1.0, 1e-14);
  EXPECT_NEAR(r.beta(1), 2.0, 1e-14);
  EXPECT_LT(r.residuals.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Ols, OrthogonalOutcomeGivesZero) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, 1, 1, 1, -1;
  Eigen::VectorXd y(4);
  y << 1, 1, -1, -1;
  auto r = ols(X, y);
  EXPECT_LT(r.beta.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ols, MatchesNormalEquations) {
  Engine engine(50);
  Eigen::MatrixXd X(50, 4);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = standard_normal(engine);
    y(i) = standard_normal(engine);
  }
  EXPECT_LT((ols(X, y).beta - oracle::normal_equations(X, y)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ols, RankDeficiencyNamesColumns) {
  Eigen::MatrixXd X(5, 3);
  X << 1, 2, 3, 2, 4, 1, 3, 6, 4, 4, 8, 1, 5, 10, 9;
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0, 1);
  const std::vector<std::string> names{"a", "twice_a", "c"};
  try {
    ols(X, y, names);
    FAIL() << "expected rank error";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("collinear"), std::string::npos);
    const bool named = msg.ends_with("columns: twice_a") || msg.ends_with("columns: a");
    EXPECT_TRUE(named) << msg;
  }
}

TEST(ClusterVcov, SingletonClustersEqualHc1) {
  Engine engine(10);
  Eigen::MatrixXd X(10, 2);
  Eigen::VectorXd u(10);
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = standard_normal(engine);
    u(i) = standard_normal(engine) * (1.0 + std::abs(X(i, 1)));
    ids.push_back("r" + std::to_string(i));
  }
  const auto v = cluster_vcov(X, u, ids);
  EXPECT_LT(max_abs(v - oracle::hc1_vcov(X, u)), 1e-12);
}

TEST(ClusterVcov, TwoClusterHandInstance) {
  Eigen::MatrixXd X(6, 2);
  X << 1, 0.5, 1, -1.0, 1, 2.0, 1, 1.5, 1, -0.5, 1, 0.0;
  Eigen::VectorXd u(6);
  u << 0.2, -0.4, 0.1, 0.3, -0.25, 0.05;
  const std::vector<int> cl{0, 0, 0, 1, 1, 1};
  const auto v = cluster_vcov(X, u, labels(cl, "k"));
  EXPECT_LT(max_abs(v - oracle::long_form_cluster_vcov(X, u, cl)), 1e-12);

  // Scores per cluster: g0 = (-0.1, 0.7), g1 = (0.1, 0.575).
  Eigen::Matrix2d meat;
  meat << 0.01 + 0.01, -0.07 + 0.0575, -0.07 + 0.0575, 0.49 + 0.330625;
  Eigen::Matrix2d xtx;
  xtx << 6, 2.5, 2.5, 7.75;
  const Eigen::Matrix2d inv = xtx.inverse();
  const Eigen::Matrix2d hand = 2.0 * (5.0 / 4.0) * inv * meat * inv;
  EXPECT_LT(max_abs(v - hand), 1e-12);
}

TEST(ClusterVcov, ZeroResidualsAndSingleCluster) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(4);
  const std::vector<std::string> two{"a", "a", "b", "b"};
  EXPECT_EQ(max_abs(cluster_vcov(X, u, two)), 0.0);
  const std::vector<std::string> one{"a", "a", "a", "a"};
  EXPECT_THROW(cluster_vcov(X, u, one), InputError);
}

TEST(ClusterVcov, SymmetricPositiveSemidefinite) {
  Engine engine(77);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 30 + rep, k = 3;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd u(n);
    std::vector<std::string> cl;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) X(i, j) = standard_normal(engine);
      u(i) = standard_normal(engine);
      cl.push_back("g" + std::to_string(i % (3 + rep % 5)));
    }
    const auto v = cluster_vcov(X, u, cl);
    EXPECT_EQ(max_abs(v - v.transpose()), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(ClusterVcov, SingletonClustersApproachClassicalUnderHomoskedasticity) {
  Engine engine(10000);
  const int n = 10000;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = standard_normal(engine);
    y(i) = 0.5 + 2.0 * X(i, 1) + standard_normal(engine);
    ids.push_back(std::to_string(i));
  }
  auto r = ols(X, y);
  const auto robust = cluster_vcov(X, r.residuals, ids);
  const double s2 = r.residuals.squaredNorm() / double(n - 2);
  const Eigen::MatrixXd classical = s2 * (X.transpose() * X).inverse();
  for (int j = 0; j < 2; ++j) {
    const double ratio = std::sqrt(robust(j, j) / classical(j, j));
    EXPECT_GT(ratio, 0.9);
    EXPECT_LT(ratio, 1.1);
  }
}

DataTable quadratic_table(const std::vector<double>& x, double shift, bool with_cells) {
  DataTable t;
  std::vector<double> y;
  std::vector<std::string> cell;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.push_back((x[i] - 0.05) * (x[i] - 0.05) + shift + (with_cells ? 0.01 * double(i % 3) : 0.0));
    cell.push_back("c" + std::to_string(i % 3));
  }
  t.set_numeric("attention", y);
  t.set_numeric("avg_variability", x);
  t.set_key("cell", cell);
  return t;
}

TEST(QuadraticFit, NoiseFreeParabola) {
  std::vector<double> x;
  for (int i = 0; i < 30; ++i) x.push_back(0.01 * i);
  RegressionSpec spec;
  auto fit = quadratic_fit(quadratic_table(x, 0.0, false), spec);
  EXPECT_NEAR(fit.coefficient("avg_variability"), -0.1, 1e-12);
  EXPECT_NEAR(fit.coefficient("avg_variability_sq"), 1.0, 1e-10);
  EXPECT_NEAR(fit.intercept, 0.0025, 1e-13);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.n_obs, 30u);
  EXPECT_EQ(fit.n_clusters, 30u);
  EXPECT_NEAR(*turning_point(fit), 0.05, 1e-10);
}

TEST(QuadraticFit, OutcomeShiftOnlyMovesIntercept) {
  Engine engine(3);
  std::vector<double> x;
  for (int i = 0; i < 60; ++i) x.push_back(0.1 * uniform01(engine));
  RegressionSpec spec;
  spec.fe_key = "cell";
  spec.cluster_key = "cell";
  auto base_table = quadratic_table(x, 0.0, true);
  auto noisy = base_table.numeric("attention");
  for (auto& v : noisy) v += 0.001 * standard_normal(engine);
  base_table.set_numeric("attention", noisy);
  auto shifted_table = base_table;
  for (auto& v : noisy) v += 5.0;
  shifted_table.set_numeric("attention", noisy);
  auto a = quadratic_fit(base_table, spec);
  auto b = quadratic_fit(shifted_table, spec);
  EXPECT_NEAR(a.coefficient("avg_variability"), b.coefficient("avg_variability"), 1e-9);
  EXPECT_NEAR(a.coefficient("avg_variability_sq"), b.coefficient("avg_variability_sq"), 1e-8);
  EXPECT_NEAR(b.intercept - a.intercept, 5.0, 1e-9);
  EXPECT_EQ(a.n_cells, 3u);
  EXPECT_EQ(a.n_clusters, 3u);
}

TEST(QuadraticFit, MissingColumnsAndCollinearControls) {
  DataTable t = quadratic_table({0.01, 0.02, 0.03, 0.04, 0.05}, 0.0, false);
  RegressionSpec spec;
  spec.controls = {"age"};
  EXPECT_THROW(quadratic_fit(t, spec), InputError);
  t.set_numeric("age", t.numeric("avg_variability"));
  EXPECT_THROW(quadratic_fit(t, spec), InputError);
  RegressionSpec dup;
  dup.controls = {"avg_variability"};
  EXPECT_THROW(dup.validate(), InputError);
}

TEST(Margins, LinearFitGivesLine) {
  auto fit = FitResult::from_coefficients("x", {2.0, 0.0}, 1.0);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  auto m = margins(fit, grid);
  EXPECT_DOUBLE_EQ(m.predicted[0], 1.0);
  EXPECT_DOUBLE_EQ(m.predicted[1], 2.0);
  EXPECT_DOUBLE_EQ(m.predicted[2], 3.0);
  EXPECT_FALSE(m.turning_point.has_value());
}

TEST(Margins, ReportedCoefficientsArithmetic) {
  auto fit = FitResult::from_coefficients("avg_variability", {-9.877, 111.767});
  EXPECT_NEAR(*turning_point(fit), 0.044184, 5e-6);
  const std::vector<double> grid{0.01, 0.02};
  auto m = margins(fit, grid, {}, std::pair{0.0, 0.1});
  const double drop = m.predicted[1] - m.predicted[0];
  EXPECT_NEAR(drop, -0.0653, 5e-4);
  EXPECT_NEAR(-drop / 0.704, 0.09, 0.01);
  auto v = u_shape_test(fit, {0.015, 0.093});
  EXPECT_TRUE(v.inside_range);
  EXPECT_NEAR(*v.turning_point, 0.0442, 5e-4);
}

TEST(Margins, SupportAndHeldControls) {
  auto fit = FitResult::from_coefficients("x", {1.0, 1.0}, 0.5);
  fit.names.push_back("age");
  fit.beta.conservativeResize(3);
  fit.beta(2) = 0.1;
  fit.column_means["age"] = 40.0;
  const std::vector<double> grid{0.0};
  EXPECT_DOUBLE_EQ(margins(fit, grid).predicted[0], 4.5);
  EXPECT_DOUBLE_EQ(margins(fit, grid, {{"age", 20.0}}).predicted[0], 2.5);
  const std::vector<double> outside{2.0};
  EXPECT_THROW(margins(fit, outside, {}, std::pair{0.0, 1.0}), InputError);
}

TEST(Margins, DenseArgminMatchesTurningPoint) {
  auto fit = FitResult::from_coefficients("x", {-0.37, 4.1}, 0.2);
  std::vector<double> grid;
  const double step = 0.2 / 999;
  for (int i = 0; i < 1000; ++i) grid.push_back(i * step);
  auto m = margins(fit, grid);
  auto it = std::min_element(m.predicted.begin(), m.predicted.end());
  EXPECT_LE(std::abs(grid[static_cast<std::size_t>(it - m.predicted.begin())] - *m.turning_point), step);
}

TEST(NormalizedMargins, IdenticalAndShiftedFits) {
  auto a = FitResult::from_coefficients("x", {-0.1, 1.0}, 0.3);
  auto b = FitResult::from_coefficients("x", {-0.1, 1.0}, 7.0);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.01 * i);
  auto [na, nb] = normalized_margins(a, a, grid);
  EXPECT_EQ(na, nb);
  auto [sa, sb] = normalized_margins(a, b, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(sa[i], sb[i], 1e-12);
    EXPECT_GE(sa[i], 0.0);
    EXPECT_LE(sa[i], 1.0);
  }
  EXPECT_DOUBLE_EQ(*std::max_element(sa.begin(), sa.end()), 1.0);

  // A common rescaling of both fits leaves the pair unchanged.
  auto c = FitResult::from_coefficients("x", {-0.3, 3.0}, 1.0);
  auto d = FitResult::from_coefficients("x", {-0.6, 4.0}, 0.0);
  auto c3 = FitResult::from_coefficients("x", {-0.9, 9.0}, -2.0);
  auto d3 = FitResult::from_coefficients("x", {-1.8, 12.0}, 5.0);
  auto [p, q] = normalized_margins(c, d, grid);
  auto [p3, q3] = normalized_margins(c3, d3, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(p[i], p3[i], 1e-12);
    EXPECT_NEAR(q[i], q3[i], 1e-12);
  }
}

TEST(NormalizedMargins, RejectsNonConvexFits) {
  auto good = FitResult::from_coefficients("x", {-0.1, 1.0});
  auto bad = FitResult::from_coefficients("x", {0.1, -1.0});
  const std::vector<double> grid{0.0, 0.1};
  EXPECT_THROW(normalized_margins(good, bad, grid), InputError);
}

// Split sample: the muted half transmits only part of each group's ancestral
// deviation from the trough into its prior, so its curve is flatter.
TEST(NormalizedMargins, MutedTransmissionLiesBelowAtEdges) {
  AttentionModel model;
  const auto th = find_thresholds(model);
  const double anchor = 0.5 * (th.theta_low + th.theta_high);
  auto specs = make_groups(3000, 0.03, 0.15, 1, 1, 99);
  CohortConfig cfg;
  auto data = build_dataset(specs, cfg, model);
  Engine engine(derive_seed(cfg.seed, "split"));
  std::vector<double> xm, ym, xa, ya;
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    const double x = data.groups[i].index.avg_variability;
    const bool muted = i % 2 == 0;
    const double theta = muted ? anchor + 0.4 * (x - anchor) : x;
    const double y = snap_response(model.xi_star(theta) + 0.1 * standard_normal(engine), 6);
    (muted ? xm : xa).push_back(x);
    (muted ? ym : ya).push_back(y);
  }
  auto fit_of = [](const std::vector<double>& x, const std::vector<double>& y) {
    DataTable t;
    t.set_numeric("attention", y);
    t.set_numeric("avg_variability", x);
    return quadratic_fit(t, RegressionSpec{});
  };
  const auto muted = fit_of(xm, ym);
  const auto amplified = fit_of(xa, ya);
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.02 + 0.07 * i / 40.0);
  auto [m, a] = normalized_margins(muted, amplified, grid);
  EXPECT_LE(m.front(), a.front());
  EXPECT_LE(m.back(), a.back());
}

TEST(UShapeTest, Examples) {
  auto fit = FitResult::from_coefficients("x", {-0.1, 1.0}, 0.0, {1e-6, 1e-6}, 100);
  auto v = u_shape_test(fit, {0.0, 0.2});
  EXPECT_TRUE(v.is_u);
  EXPECT_NEAR(*v.turning_point, 0.05, 1e-15);
  EXPECT_EQ(v.df, 99.0);

  auto cap = FitResult::from_coefficients("x", {0.1, -1.0}, 0.0, {1e-6, 1e-6}, 100);
  EXPECT_FALSE(u_shape_test(cap, {0.0, 0.2}).is_u);
  EXPECT_FALSE(u_shape_test(fit, {0.06, 0.2}).is_u);

  auto weak = FitResult::from_coefficients("x", {-0.1, 1.0}, 0.0, {0.1, 1.0}, 100);
  auto w = u_shape_test(weak, {0.0, 0.2});
  EXPECT_FALSE(w.is_u);
  EXPECT_TRUE(w.inside_range);
}

TEST(Inference, StudentReferenceAndStars) {
  EXPECT_NEAR(two_sided_p(2.0, 1e9), 0.0455002638963584, 1e-9);
  EXPECT_NEAR(two_sided_p(2.0, 0.0), 0.0455002638963584, 1e-12);
  EXPECT_NEAR(two_sided_p(12.706204736174698, 1.0), 0.05, 1e-9);
  EXPECT_EQ(stars(0.005), "***");
  EXPECT_EQ(stars(0.03), "**");
  EXPECT_EQ(stars(0.07), "*");
  EXPECT_EQ(stars(0.12), "+");
  EXPECT_EQ(stars(0.2), "");
}

TEST(QuadraticFit, NoiselessSimulationRecoversModelTrough) {
  AttentionModel model;
  const auto th = find_thresholds(model);
  const double midpoint = 0.5 * (th.theta_low + th.theta_high);
  auto specs = make_groups(2000, 0.03, 0.15, 40, 1, 8);
  CohortConfig cfg;
  cfg.noise_sd = 0.0;
  auto data = build_dataset(specs, cfg, model);
  DataTable t;
  std::vector<double> x, y;
  std::vector<std::string> cell;
  for (const auto& g : data.groups) {
    x.push_back(g.index.avg_variability);
    y.push_back(g.xi_star);
    cell.push_back(g.cell);
  }
  t.set_numeric("attention", y);
  t.set_numeric("avg_variability", x);
  t.set_key("cell", cell);
  RegressionSpec spec;
  spec.fe_key = "cell";
  auto fit = quadratic_fit(t, spec);
  ASSERT_TRUE(turning_point(fit).has_value());
  EXPECT_NEAR(*turning_point(fit) / midpoint, 1.0, 0.10);
}

}  // namespace
}  // namespace climattn
