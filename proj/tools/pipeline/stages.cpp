#include "pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <set>
#include <tuple>
#include <sstream>

#include <nlohmann/json.hpp>

#include "climattn/csv.hpp"
#include "pipeline/files.hpp"
#include "pipeline/plot.hpp"

#ifndef CLIMATTN_VERSION
#define CLIMATTN_VERSION "0.0.0"
#endif

namespace climattn::pipeline {

using json = nlohmann::ordered_json;
using csv::format_real;

namespace {

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

// Collects inputs, stage outcomes and outputs; writes manifest.json last.
class Run {
 public:
  Run(std::string command, const PipelineConfig& config)
      : command_(std::move(command)), config_(config), out_(config.out_dir) {}

  OutputDir& out() { return out_; }

  void input(const std::string& path) {
    inputs_.push_back({path, sha256_hex(read_text(path))});
  }

  template <class F>
  auto stage(const std::string& name, F&& body) {
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        stages_.push_back({{"name", name}, {"status", "ok"}});
      } else {
        auto result = body();
        stages_.push_back({{"name", name}, {"status", "ok"}});
        return result;
      }
    } catch (const std::exception& e) {
      const bool numerical = dynamic_cast<const NumericalError*>(&e) != nullptr;
      stages_.push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
      finish(numerical ? ExitCode::kNumericalError : ExitCode::kInputError);
      throw;
    }
  }

  void finish(ExitCode code) {
    json m;
    m["artifact"] = {{"name", "climattn"}, {"version", CLIMATTN_VERSION}};
    m["command"] = command_;
    json cfg = json::object();
    for (const auto& [dotted, value] : config_.echo()) {
      const auto dot = dotted.find('.');
      cfg[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
    }
    m["config"] = cfg;
    m["seed"] = config_.seed;
    m["inputs"] = json::array();
    for (const auto& f : inputs_) m["inputs"].push_back({{"path", f.path}, {"sha256", f.sha256}});
    m["stages"] = stages_;
    m["outputs"] = json::array();
    for (const auto& f : out_.written()) {
      m["outputs"].push_back({{"path", f.path}, {"sha256", f.sha256}});
    }
    m["exit_code"] = static_cast<int>(code);
    out_.write("manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  const PipelineConfig& config_;
  OutputDir out_;
  std::vector<FileDigest> inputs_;
  json stages_ = json::array();
};

std::string index_csv(const std::map<std::string, AncestralVariability>& rows, int generations,
                      const char* id_column) {
  std::ostringstream out;
  std::vector<std::string> header{id_column, "avg_variability"};
  for (int g = 1; g <= generations; ++g) header.push_back("g" + std::to_string(g) + "_eta");
  csv::write_row(out, header);
  for (const auto& [id, av] : rows) {
    std::vector<std::string> fields{id, format_real(av.avg_variability)};
    for (const auto& g : av.per_generation) fields.push_back(format_real(g.eta_hat));
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string curve_csv(const std::vector<AttentionSolution>& curve) {
  std::ostringstream out;
  out << "theta,xi_star,W_bar,L_bar\n";
  for (const auto& s : curve) {
    csv::write_row(out, {format_real(s.theta), format_real(s.xi_star),
                         format_real(s.expected.exploitation), format_real(s.expected.protection)});
  }
  return out.str();
}

json thresholds_json(const Thresholds& t) {
  return {{"theta_low", t.theta_low},
          {"theta_tilde", t.theta_tilde},
          {"theta_high", t.theta_high},
          {"min_expected_stakes", t.min_expected_stakes},
          {"level_set_empty", t.level_set_empty}};
}

json trough_json(const TroughReport& r) {
  return {{"passes", r.passes},
          {"trough_low", r.trough_low},
          {"trough_high", r.trough_high},
          {"reason", r.reason}};
}

std::string respondents_csv(const SyntheticDataset& data) {
  std::ostringstream out;
  std::vector<std::string> header{"group_id", "cell", "avg_variability", "attention"};
  for (int k = 1; k <= data.n_controls; ++k) header.push_back("ctrl_" + std::to_string(k));
  csv::write_row(out, header);
  for (const auto& r : data.respondents) {
    std::vector<std::string> f{r.group_id, r.cell, format_real(r.avg_variability),
                               format_real(r.attention)};
    for (double c : r.controls) f.push_back(format_real(c));
    csv::write_row(out, f);
  }
  return out.str();
}

std::string folklore_counts_csv(const SyntheticDataset& data) {
  std::ostringstream out;
  out << "group_id,env_motifs,total_motifs\n";
  for (const auto& g : data.groups) {
    csv::write_row(out, {g.group_id, std::to_string(g.folklore.env_motifs),
                         std::to_string(g.folklore.total_motifs)});
  }
  return out.str();
}

std::string groups_csv(const SyntheticDataset& data) {
  std::ostringstream out;
  out << "group_id,cell,true_scale,avg_variability,xi_star\n";
  for (const auto& g : data.groups) {
    csv::write_row(out, {g.group_id, g.cell, format_real(g.true_scale), format_real(g.theta),
                         format_real(g.xi_star)});
  }
  return out.str();
}

std::vector<GroupSpec> cohort_groups(const PipelineConfig& c, Run& run) {
  if (!c.inputs.groups.empty()) {
    run.input(c.inputs.groups);
    return read_groups(c.inputs.groups);
  }
  return make_groups(c.shape.groups, c.shape.scale_min, c.shape.scale_max, c.shape.cells,
                     c.shape.respondents, c.seed);
}

SyntheticDataset simulate_into(const PipelineConfig& config, Run& run) {
  auto groups = run.stage("read groups", [&] { return cohort_groups(config, run); });
  auto data = run.stage("simulate", [&] {
    return build_dataset(std::move(groups), config.cohort(), config.model());
  });
  run.stage("write simulation", [&] {
    std::map<std::string, AncestralVariability> index;
    for (const auto& g : data.groups) index.emplace(g.group_id, g.index);
    run.out().write("index.csv", index_csv(index, config.variability.generations(), "unit_id"));
    run.out().write("groups.csv", groups_csv(data));
    run.out().write("respondents.csv", respondents_csv(data));
    run.out().write("folklore.csv", folklore_counts_csv(data));
  });
  return data;
}

std::vector<std::string> resolve_controls(const RegressionSpec& spec,
                                          const std::vector<std::string>& header) {
  if (!spec.controls.empty()) return spec.controls;
  std::vector<std::string> found;
  for (const auto& h : header)
    if (h.rfind("ctrl_", 0) == 0) found.push_back(h);
  return found;
}

json verdict_json(const RegressRun& r) {
  const auto& v = r.verdict;
  return {{"is_u", v.is_u},
          {"beta1", v.beta1},
          {"beta2", v.beta2},
          {"se1", v.se1},
          {"se2", v.se2},
          {"t1", v.t1},
          {"t2", v.t2},
          {"p1", v.p1},
          {"p2", v.p2},
          {"df", v.df},
          {"level", v.level},
          {"turning_point", number_or_null(v.turning_point)},
          {"range", {r.range.first, r.range.second}},
          {"inside_range", v.inside_range},
          {"n_obs", r.fit.n_obs},
          {"n_clusters", r.fit.n_clusters}};
}

std::string fit_report(const FitResult& fit, const RegressionSpec& spec, const UShapeVerdict& v) {
  std::ostringstream out;
  const double df = fit.n_clusters >= 2 ? static_cast<double>(fit.n_clusters - 1) : 0.0;
  out << "outcome           " << spec.outcome << '\n';
  if (spec.fe_key.empty()) {
    out << "fixed effects     none\n";
  } else {
    out << "fixed effects     " << spec.fe_key << " (" << fit.n_cells << " cells, "
        << fit.n_singleton_cells << " singleton)\n";
  }
  out << "clusters          " << (spec.cluster_key.empty() ? "observation" : spec.cluster_key)
      << " (" << fit.n_clusters << ")\n";
  out << "observations      " << fit.n_obs << '\n';
  out << "R-squared         " << format_real(fit.r_squared, 6) << '\n';
  out << "adj. R-squared    " << format_real(fit.adj_r_squared, 6) << "\n\n";
  out << std::left << std::setw(24) << "term" << std::right << std::setw(14) << "coef"
      << std::setw(14) << "std.err" << std::setw(10) << "t" << std::setw(12) << "p" << '\n';
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto& name = fit.names[j];
    const double b = fit.coefficient(name), se = fit.std_error(name);
    const double t = t_statistic(b, se);
    const double p = two_sided_p(t, df);
    out << std::left << std::setw(24) << name << std::right << std::setw(14) << format_real(b, 6)
        << std::setw(14) << format_real(se, 6) << std::setw(10) << format_real(t, 4)
        << std::setw(12) << format_real(p, 4) << ' ' << stars(p) << '\n';
  }
  if (!spec.fe_key.empty()) {
    out << std::left << std::setw(24) << "intercept (implied)" << std::right << std::setw(14)
        << format_real(fit.intercept, 6) << '\n';
  }
  out << "\n*** p<0.01, ** p<0.05, * p<0.1, + p<0.15 (Student t, " << format_real(df, 6)
      << " df)\n\n";
  out << "U-shape at level " << format_real(v.level, 4) << ": " << (v.is_u ? "yes" : "no");
  if (v.turning_point) out << ", turning point " << format_real(*v.turning_point, 6);
  out << (v.inside_range ? " (inside data range)" : " (outside data range)") << '\n';
  return out.str();
}

RegressRun regress_table(const PipelineConfig& config, const DataTable& table, Run& run) {
  RegressRun r;
  r.fit = run.stage("fit", [&] {
    RegressionSpec spec = config.regression;
    return quadratic_fit(table, spec);
  });
  run.stage("margins", [&] {
    const auto& x = table.numeric(config.regression.regressor);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    r.range = {*lo, *hi};
    std::vector<double> grid;
    const int n = config.margins_points;
    for (int i = 0; i < n; ++i) grid.push_back(*lo + (*hi - *lo) * i / double(n - 1));
    grid.back() = *hi;
    r.margins = margins(r.fit, grid, {}, r.range);
    r.verdict = u_shape_test(r.fit, r.range, config.significance);
    r.code = r.verdict.is_u ? ExitCode::kOk : ExitCode::kVerdictFail;
  });
  run.stage("write fit", [&] {
    run.out().write("fit_report.txt", fit_report(r.fit, config.regression, r.verdict));
    std::ostringstream coefs;
    coefs << "term,coef,std_err,t,p,stars\n";
    const double df = r.verdict.df;
    for (const auto& name : r.fit.names) {
      const double b = r.fit.coefficient(name), se = r.fit.std_error(name);
      const double t = t_statistic(b, se), p = two_sided_p(t, df);
      csv::write_row(coefs, {name, format_real(b), format_real(se), format_real(t), format_real(p),
                             std::string(stars(p))});
    }
    run.out().write("coefficients.csv", coefs.str());
    std::ostringstream m;
    csv::write_row(m, {config.regression.regressor, "predicted"});
    for (std::size_t i = 0; i < r.margins.grid.size(); ++i) {
      csv::write_row(m, {format_real(r.margins.grid[i]), format_real(r.margins.predicted[i])});
    }
    run.out().write("margins.csv", m.str());
    Series s{"predicted " + config.regression.outcome, r.margins.grid, r.margins.predicted};
    run.out().write("plot_margins.csv", series_csv(s));
    if (config.svg) {
      run.out().write("margins.svg",
                      line_chart_svg({s}, "Predicted attention over ancestral variability",
                                     config.regression.regressor, config.regression.outcome));
    }
  });
  return r;
}

std::vector<double> sweep_grid(const SweepConfig& s) {
  return log_spaced(s.theta_min, s.theta_max, static_cast<std::size_t>(s.points));
}

}  // namespace

double trough_midpoint(const Thresholds& t) { return 0.5 * (t.theta_low + t.theta_high); }

DataTable respondent_table(const SyntheticDataset& data) {
  DataTable t;
  std::vector<std::string> group, cell;
  std::vector<double> x, y;
  std::vector<std::vector<double>> controls(static_cast<std::size_t>(data.n_controls));
  for (const auto& r : data.respondents) {
    group.push_back(r.group_id);
    cell.push_back(r.cell);
    x.push_back(r.avg_variability);
    y.push_back(r.attention);
    for (std::size_t k = 0; k < controls.size(); ++k) controls[k].push_back(r.controls[k]);
  }
  t.set_key("group_id", std::move(group));
  t.set_key("cell", std::move(cell));
  t.set_numeric("avg_variability", std::move(x));
  t.set_numeric("attention", std::move(y));
  for (std::size_t k = 0; k < controls.size(); ++k) {
    t.set_numeric("ctrl_" + std::to_string(k + 1), std::move(controls[k]));
  }
  return t;
}

IndexRun run_index(const PipelineConfig& config, std::ostream& log) {
  Run run("index", config);
  IndexRun out;
  auto series = run.stage("read anomalies", [&] {
    if (config.inputs.anomalies.empty()) throw InputError("index: no anomaly file given");
    run.input(config.inputs.anomalies);
    return read_anomalies(config.inputs.anomalies);
  });
  run.stage("index", [&] {
    for (const auto& [unit, s] : series) {
      try {
        out.units.emplace(unit, average_variability(s, config.variability));
      } catch (const InputError& e) {
        throw InputError(config.inputs.anomalies + ": unit '" + unit + "': " + e.what());
      }
    }
  });
  if (!config.inputs.links.empty()) {
    run.stage("link groups", [&] {
      run.input(config.inputs.links);
      out.groups = attach_to_groups(out.units, read_links(config.inputs.links));
    });
  }
  run.stage("write index", [&] {
    const int g = config.variability.generations();
    run.out().write("index.csv", index_csv(out.units, g, "unit_id"));
    if (!out.groups.empty()) run.out().write("group_index.csv", index_csv(out.groups, g, "group_id"));
  });
  run.finish(ExitCode::kOk);
  log << "index: " << out.units.size() << " units, " << config.variability.generations()
      << " generations\n";
  return out;
}

SolveRun run_model_solve(const PipelineConfig& config, const std::vector<double>& thetas,
                         std::ostream& log) {
  Run run("model solve", config);
  SolveRun out;
  const auto model = run.stage("model", [&] {
    auto m = config.model();
    m.validate();
    if (thetas.empty()) throw InputError("model solve: no theta given");
    return m;
  });
  run.stage("solve", [&] {
    for (double t : thetas) {
      if (!(t > 0.0) || !std::isfinite(t)) throw InputError("model solve: theta must be positive");
      out.solutions.push_back(solve_attention(model, t));
    }
  });
  run.stage("write solution", [&] {
    std::ostringstream s;
    s << "theta,xi_star,W_bar,L_bar,posterior_variance,mutual_information\n";
    for (const auto& a : out.solutions) {
      csv::write_row(s, {format_real(a.theta), format_real(a.xi_star),
                         format_real(a.expected.exploitation), format_real(a.expected.protection),
                         format_real(a.posterior_variance),
                         format_real(gaussian_mutual_information(model.stakes.sigma_sq,
                                                                 a.posterior_variance))});
    }
    run.out().write("solution.csv", s.str());
    log << s.str();
  });
  run.finish(ExitCode::kOk);
  return out;
}

SweepRun run_model_sweep(const PipelineConfig& config, std::ostream& log) {
  Run run("model sweep", config);
  SweepRun out;
  const auto model = run.stage("model", [&] {
    auto m = config.model();
    m.validate();
    return m;
  });
  run.stage("sweep", [&] {
    const auto grid = sweep_grid(config.sweep);
    out.curve = attention_curve(model, grid);
    out.trough = verify_single_trough(std::span<const AttentionSolution>(out.curve));
  });
  run.stage("thresholds", [&] { out.thresholds = find_thresholds(model); });
  out.code = out.trough.passes ? ExitCode::kOk : ExitCode::kVerdictFail;
  run.stage("write curve", [&] {
    run.out().write("curve.csv", curve_csv(out.curve));
    json t;
    t["thresholds"] = thresholds_json(out.thresholds);
    t["trough_midpoint"] = trough_midpoint(out.thresholds);
    t["single_trough"] = trough_json(out.trough);
    t["grid"] = {{"theta_min", config.sweep.theta_min},
                 {"theta_max", config.sweep.theta_max},
                 {"points", config.sweep.points}};
    run.out().write("thresholds.json", t.dump(2) + "\n");
    Series s{"xi*", {}, {}};
    for (const auto& a : out.curve) {
      s.x.push_back(a.theta);
      s.y.push_back(a.xi_star);
    }
    run.out().write("plot_curve.csv", series_csv(s));
    if (config.svg) {
      run.out().write("curve.svg", line_chart_svg({s}, "Optimal attention over prior scale",
                                                  "theta", "xi*"));
    }
  });
  run.finish(out.code);
  log << "sweep: " << out.curve.size() << " points, single trough "
      << (out.trough.passes ? "passes" : "fails") << (out.trough.reason.empty() ? "" : " (")
      << out.trough.reason << (out.trough.reason.empty() ? "" : ")") << "; theta_low "
      << format_real(out.thresholds.theta_low, 6) << ", theta_tilde "
      << format_real(out.thresholds.theta_tilde, 6) << ", theta_high "
      << format_real(out.thresholds.theta_high, 6) << '\n';
  return out;
}

SimulateRun run_simulate(const PipelineConfig& config, std::ostream& log) {
  Run run("simulate", config);
  SimulateRun out;
  out.data = simulate_into(config, run);
  run.finish(ExitCode::kOk);
  log << "simulate: " << out.data.groups.size() << " groups, " << out.data.respondents.size()
      << " respondents\n";
  return out;
}

RegressRun run_regress(const PipelineConfig& config, std::ostream& log) {
  Run run("regress", config);
  auto table = run.stage("read data", [&] {
    const auto& path = config.inputs.respondents;
    if (path.empty()) throw InputError("regress: no respondent table given");
    run.input(path);
    auto spec = config.regression;
    spec.controls = resolve_controls(spec, read_header(path));
    std::vector<std::string> numeric{spec.outcome, spec.regressor};
    numeric.insert(numeric.end(), spec.controls.begin(), spec.controls.end());
    std::vector<std::string> keys;
    if (!spec.fe_key.empty()) keys.push_back(spec.fe_key);
    if (!spec.cluster_key.empty() && spec.cluster_key != spec.fe_key) keys.push_back(spec.cluster_key);
    return std::pair{read_table(path, numeric, keys), spec};
  });
  PipelineConfig effective = config;
  effective.regression = table.second;
  auto out = regress_table(effective, table.first, run);
  run.out().write("verdict.json", verdict_json(out).dump(2) + "\n");
  run.finish(out.code);
  log << "regress: " << out.fit.n_obs << " observations, U-shape "
      << (out.verdict.is_u ? "holds" : "does not hold") << '\n';
  return out;
}

FolkloreRun run_folklore(const PipelineConfig& config, const std::string& expected_groups,
                         std::ostream& log) {
  Run run("folklore score", config);
  FolkloreRun out;
  auto inputs = run.stage("read inputs", [&] {
    if (config.inputs.catalog.empty()) throw InputError("folklore: no motif catalog given");
    run.input(config.inputs.catalog);
    if (config.inputs.dictionary.empty()) throw InputError("folklore: no dictionary given");
    run.input(config.inputs.dictionary);
    std::vector<std::string> expected;
    if (!expected_groups.empty()) {
      run.input(expected_groups);
      const auto t = csv::Table::read_file(expected_groups);
      const auto c = t.column("group_id");
      for (const auto& row : t.rows()) expected.push_back(row.fields[c]);
    }
    return std::tuple{read_catalog(config.inputs.catalog),
                      read_dictionary(config.inputs.dictionary), expected};
  });
  run.stage("score", [&] {
    out.scores = score_catalog(std::get<0>(inputs), std::get<1>(inputs), std::get<2>(inputs));
  });
  run.stage("write scores", [&] {
    std::ostringstream s;
    s << "group_id,env_motifs,total_motifs,score\n";
    for (const auto& f : out.scores) {
      csv::write_row(s, {f.group_id, std::to_string(f.env_motifs), std::to_string(f.total_motifs),
                         format_real(f.score)});
    }
    run.out().write("folklore_scores.csv", s.str());
  });
  run.finish(ExitCode::kOk);
  log << "folklore: " << out.scores.size() << " groups scored\n";
  return out;
}

ReproduceRun run_reproduce(const PipelineConfig& config, std::ostream& log) {
  Run run("reproduce", config);
  ReproduceRun out;
  const auto model = run.stage("model", [&] {
    auto m = config.model();
    m.validate();
    return m;
  });
  out.thresholds = run.stage("thresholds", [&] { return find_thresholds(model); });
  out.trough_midpoint = trough_midpoint(out.thresholds);
  out.simulate.data = simulate_into(config, run);
  const auto table = respondent_table(out.simulate.data);
  PipelineConfig effective = config;
  effective.regression.controls = resolve_controls(config.regression, table.numeric_names());
  out.regress = regress_table(effective, table, run);
  if (out.regress.verdict.turning_point) {
    out.turning_point_gap = std::abs(*out.regress.verdict.turning_point / out.trough_midpoint - 1.0);
  }
  out.code = out.regress.code;
  run.stage("write verdict", [&] {
    auto v = verdict_json(out.regress);
    v["model_trough"] = thresholds_json(out.thresholds);
    v["model_trough"]["midpoint"] = out.trough_midpoint;
    v["turning_point_relative_gap"] = number_or_null(out.turning_point_gap);
    run.out().write("verdict.json", v.dump(2) + "\n");
  });
  run.finish(out.code);
  const auto& v = out.regress.verdict;
  log << "reproduce: beta1 " << format_real(v.beta1, 6) << " (t " << format_real(v.t1, 4)
      << "), beta2 " << format_real(v.beta2, 6) << " (t " << format_real(v.t2, 4) << ")";
  if (v.turning_point) {
    log << ", turning point " << format_real(*v.turning_point, 6) << " vs model trough "
        << format_real(out.trough_midpoint, 6);
  }
  log << "; U-shape " << (v.is_u ? "holds" : "does not hold") << '\n';
  return out;
}

}  // namespace climattn::pipeline
