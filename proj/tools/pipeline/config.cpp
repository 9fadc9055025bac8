#include "pipeline/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "climattn/csv.hpp"
#include "climattn/error.hpp"

namespace climattn::pipeline {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"schema_version", "seed", "threads", "out_dir"}},
      {"variability", {"period_start", "period_end", "span_years", "alpha", "measure"}},
      {"model", {"q", "sigma_sq", "a", "b", "kappa", "prior", "log_sd"}},
      {"sweep", {"theta_min", "theta_max", "points"}},
      {"cohort",
       {"groups", "respondents", "cells", "scale_min", "scale_max", "noise_sd", "response_levels",
        "controls", "motifs_per_generation", "ar_coefficient"}},
      {"regression",
       {"outcome", "regressor", "degree", "controls", "fe_key", "cluster_key", "level",
        "margins_points"}},
      {"inputs", {"anomalies", "links", "groups", "respondents", "catalog", "dictionary"}},
      {"output", {"svg"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  template <class T>
  void get(const char* section, const char* key, T& target) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return;
    const auto value = sec->get_optional<std::string>(key);
    if (!value) return;
    target = convert<T>(*value, section, key);
  }

 private:
  template <class T>
  T convert(const std::string& text, const char* section, const char* key) const {
    const std::string where = source_ + ": [" + section + "] " + key;
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw InputError(where + ": expected true or false, found '" + text + "'");
    } else if constexpr (std::is_floating_point_v<T>) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v)) {
        throw InputError(where + ": expected a finite number, found '" + text + "'");
      }
      return v;
    } else {
      T v{};
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || p != text.data() + text.size()) {
        throw InputError(where + ": expected an integer, found '" + text + "'");
      }
      return v;
    }
  }

  const pt::ptree& tree_;
  std::string source_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = item.find_last_not_of(" \t");
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty()) return path;
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty()) return path;
  return (base / p).lexically_normal().string();
}

}  // namespace

AttentionModel PipelineConfig::model() const {
  AttentionModel m;
  m.stakes = stakes;
  m.cost = cost;
  if (prior_kind == "lognormal") {
    m.prior = PriorScaleFamily::lognormal(prior_log_sd);
  } else if (prior_kind == "point_mass") {
    m.prior = PriorScaleFamily::point_mass();
  } else {
    throw InputError("config: [model] prior must be lognormal or point_mass, found '" +
                     prior_kind + "'");
  }
  return m;
}

CohortConfig PipelineConfig::cohort() const {
  CohortConfig c;
  c.variability = variability;
  c.noise_sd = noise_sd;
  c.response_levels = response_levels;
  c.n_controls = n_controls;
  c.motifs_per_generation = motifs_per_generation;
  c.ar_coefficient = ar_coefficient;
  c.seed = seed;
  c.threads = threads;
  return c;
}

void PipelineConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw InputError("config: schema_version " + std::to_string(schema_version) +
                     " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (threads < 1) throw InputError("config: [run] threads must be at least 1");
  model().validate();
  if (!(prior_log_sd > 0.0)) throw InputError("config: [model] log_sd must be positive");
  cohort().validate();
  if (!(sweep.theta_min > 0.0 && sweep.theta_max >= sweep.theta_min)) {
    throw InputError("config: [sweep] need 0 < theta_min <= theta_max");
  }
  if (sweep.points < 1) throw InputError("config: [sweep] points must be at least 1");
  if (shape.groups < 1 || shape.respondents < 1 || shape.cells < 1) {
    throw InputError("config: [cohort] groups, respondents and cells must be at least 1");
  }
  if (!(shape.scale_min > 0.0 && shape.scale_max >= shape.scale_min)) {
    throw InputError("config: [cohort] need 0 < scale_min <= scale_max");
  }
  regression.validate();
  if (!(significance > 0.0 && significance < 1.0)) {
    throw InputError("config: [regression] level must lie in (0, 1)");
  }
  if (margins_points < 2) throw InputError("config: [regression] margins_points must be at least 2");
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::echo() const {
  using csv::format_real;
  return {
      {"run.schema_version", std::to_string(schema_version)},
      {"run.seed", std::to_string(seed)},
      {"variability.period_start", std::to_string(variability.period_start)},
      {"variability.period_end", std::to_string(variability.period_end)},
      {"variability.span_years", std::to_string(variability.span_years)},
      {"variability.alpha", format_real(variability.alpha)},
      {"variability.measure", std::string(to_string(variability.measure))},
      {"model.q", format_real(stakes.q)},
      {"model.sigma_sq", format_real(stakes.sigma_sq)},
      {"model.a", format_real(stakes.a)},
      {"model.b", format_real(stakes.b)},
      {"model.kappa", format_real(cost.kappa)},
      {"model.prior", prior_kind},
      {"model.log_sd", format_real(prior_log_sd)},
      {"sweep.theta_min", format_real(sweep.theta_min)},
      {"sweep.theta_max", format_real(sweep.theta_max)},
      {"sweep.points", std::to_string(sweep.points)},
      {"cohort.groups", std::to_string(shape.groups)},
      {"cohort.respondents", std::to_string(shape.respondents)},
      {"cohort.cells", std::to_string(shape.cells)},
      {"cohort.scale_min", format_real(shape.scale_min)},
      {"cohort.scale_max", format_real(shape.scale_max)},
      {"cohort.noise_sd", format_real(noise_sd)},
      {"cohort.response_levels", std::to_string(response_levels)},
      {"cohort.controls", std::to_string(n_controls)},
      {"cohort.motifs_per_generation", std::to_string(motifs_per_generation)},
      {"cohort.ar_coefficient", format_real(ar_coefficient)},
      {"regression.outcome", regression.outcome},
      {"regression.regressor", regression.regressor},
      {"regression.degree", std::to_string(regression.degree)},
      {"regression.controls", join_list(regression.controls)},
      {"regression.fe_key", regression.fe_key},
      {"regression.cluster_key", regression.cluster_key},
      {"regression.level", format_real(significance)},
      {"regression.margins_points", std::to_string(margins_points)},
      {"inputs.anomalies", inputs.anomalies},
      {"inputs.links", inputs.links},
      {"inputs.groups", inputs.groups},
      {"inputs.respondents", inputs.respondents},
      {"inputs.catalog", inputs.catalog},
      {"inputs.dictionary", inputs.dictionary},
      {"output.svg", svg ? "true" : "false"},
  };
}

PipelineConfig parse_config(const std::string& text, const std::string& source,
                            const std::filesystem::path& base) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    auto known = schema().find(section);
    if (known == schema().end()) {
      throw InputError(source + ": unknown section [" + section + "]");
    }
    if (!body.data().empty()) throw InputError(source + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) {
        throw InputError(source + ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
  const auto version = tree.get_optional<std::string>("run.schema_version");
  if (!version) throw InputError(source + ": [run] schema_version is required");

  PipelineConfig c;
  Reader r(tree, source);
  r.get("run", "schema_version", c.schema_version);
  r.get("run", "seed", c.seed);
  r.get("run", "threads", c.threads);
  std::string out_dir = c.out_dir.string();
  r.get("run", "out_dir", out_dir);
  c.out_dir = resolve(out_dir, base);

  r.get("variability", "period_start", c.variability.period_start);
  r.get("variability", "period_end", c.variability.period_end);
  r.get("variability", "span_years", c.variability.span_years);
  r.get("variability", "alpha", c.variability.alpha);
  std::string measure(to_string(c.variability.measure));
  r.get("variability", "measure", measure);
  c.variability.measure = parse_measure(measure);

  r.get("model", "q", c.stakes.q);
  r.get("model", "sigma_sq", c.stakes.sigma_sq);
  r.get("model", "a", c.stakes.a);
  r.get("model", "b", c.stakes.b);
  r.get("model", "kappa", c.cost.kappa);
  r.get("model", "prior", c.prior_kind);
  r.get("model", "log_sd", c.prior_log_sd);

  r.get("sweep", "theta_min", c.sweep.theta_min);
  r.get("sweep", "theta_max", c.sweep.theta_max);
  r.get("sweep", "points", c.sweep.points);

  r.get("cohort", "groups", c.shape.groups);
  r.get("cohort", "respondents", c.shape.respondents);
  r.get("cohort", "cells", c.shape.cells);
  r.get("cohort", "scale_min", c.shape.scale_min);
  r.get("cohort", "scale_max", c.shape.scale_max);
  r.get("cohort", "noise_sd", c.noise_sd);
  r.get("cohort", "response_levels", c.response_levels);
  r.get("cohort", "controls", c.n_controls);
  r.get("cohort", "motifs_per_generation", c.motifs_per_generation);
  r.get("cohort", "ar_coefficient", c.ar_coefficient);

  r.get("regression", "outcome", c.regression.outcome);
  r.get("regression", "regressor", c.regression.regressor);
  r.get("regression", "degree", c.regression.degree);
  std::string controls = join_list(c.regression.controls);
  r.get("regression", "controls", controls);
  c.regression.controls = split_list(controls);
  r.get("regression", "fe_key", c.regression.fe_key);
  r.get("regression", "cluster_key", c.regression.cluster_key);
  r.get("regression", "level", c.significance);
  r.get("regression", "margins_points", c.margins_points);

  r.get("inputs", "anomalies", c.inputs.anomalies);
  r.get("inputs", "links", c.inputs.links);
  r.get("inputs", "groups", c.inputs.groups);
  r.get("inputs", "respondents", c.inputs.respondents);
  r.get("inputs", "catalog", c.inputs.catalog);
  r.get("inputs", "dictionary", c.inputs.dictionary);
  for (auto* p : {&c.inputs.anomalies, &c.inputs.links, &c.inputs.groups, &c.inputs.respondents,
                  &c.inputs.catalog, &c.inputs.dictionary}) {
    *p = resolve(*p, base);
  }

  r.get("output", "svg", c.svg);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string(), path.parent_path());
}

std::string render_config(const PipelineConfig& config) {
  std::ostringstream out;
  std::string section;
  auto pairs = config.echo();
  pairs.insert(pairs.begin() + 2, {"run.threads", std::to_string(config.threads)});
  for (const auto& [dotted, value] : pairs) {
    const auto dot = dotted.find('.');
    const auto sec = dotted.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    out << dotted.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

}  // namespace climattn::pipeline
