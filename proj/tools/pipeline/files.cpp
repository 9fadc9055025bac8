#include "pipeline/files.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "climattn/csv.hpp"
#include "climattn/error.hpp"

namespace climattn::pipeline {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256: digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

namespace {

csv::Table load(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("no ") + what + " file given");
  return csv::Table::read_file(path);
}

}  // namespace

std::map<std::string, TemperatureSeries> read_anomalies(const std::string& path) {
  const auto t = load(path, "anomaly");
  t.require_columns({"unit_id", "year", "anomaly"});
  const auto cu = t.column("unit_id"), cy = t.column("year"), ca = t.column("anomaly");
  std::map<std::string, std::vector<std::pair<YearAnomaly, std::size_t>>> by_unit;
  for (const auto& row : t.rows()) {
    const auto& unit = row.fields[cu];
    if (unit.empty()) throw InputError(t.where(row, cu) + ": empty unit_id");
    const auto year = t.integer(row, cy);
    by_unit[unit].push_back({{static_cast<int>(year), t.real(row, ca)}, row.line});
  }
  std::map<std::string, TemperatureSeries> out;
  for (auto& [unit, obs] : by_unit) {
    std::stable_sort(obs.begin(), obs.end(),
                     [](const auto& l, const auto& r) { return l.first.year < r.first.year; });
    std::vector<YearAnomaly> series;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (i > 0 && obs[i].first.year == obs[i - 1].first.year) {
        throw InputError(path + ":" + std::to_string(obs[i].second) + ": unit '" + unit +
                         "' repeats year " + std::to_string(obs[i].first.year));
      }
      series.push_back(obs[i].first);
    }
    out.emplace(unit, TemperatureSeries(unit, std::move(series)));
  }
  if (out.empty()) throw InputError(path + ": no observations");
  return out;
}

std::map<std::string, std::string> read_links(const std::string& path) {
  const auto t = load(path, "link");
  t.require_columns({"group_id", "unit_id"});
  const auto cg = t.column("group_id"), cu = t.column("unit_id");
  std::map<std::string, std::string> out;
  for (const auto& row : t.rows()) {
    if (!out.emplace(row.fields[cg], row.fields[cu]).second) {
      throw InputError(t.where(row, cg) + ": duplicate group '" + row.fields[cg] + "'");
    }
  }
  return out;
}

std::vector<GroupSpec> read_groups(const std::string& path) {
  const auto t = load(path, "group spec");
  t.require_columns({"group_id", "true_scale", "cell", "n_respondents"});
  const auto cg = t.column("group_id"), cs = t.column("true_scale"), cc = t.column("cell"),
             cn = t.column("n_respondents");
  std::vector<GroupSpec> out;
  for (const auto& row : t.rows()) {
    GroupSpec g{row.fields[cg], t.real(row, cs), row.fields[cc],
                static_cast<int>(t.integer(row, cn))};
    try {
      g.validate();
    } catch (const InputError& e) {
      throw InputError(path + ":" + std::to_string(row.line) + ": " + e.what());
    }
    out.push_back(std::move(g));
  }
  if (out.empty()) throw InputError(path + ": no groups");
  return out;
}

DataTable read_table(const std::string& path, const std::vector<std::string>& numeric,
                     const std::vector<std::string>& keys) {
  const auto t = load(path, "data");
  DataTable out;
  for (const auto& name : keys) {
    const auto c = t.column(name);
    std::vector<std::string> col;
    for (const auto& row : t.rows()) col.push_back(row.fields[c]);
    out.set_key(name, std::move(col));
  }
  for (const auto& name : numeric) {
    const auto c = t.column(name);
    std::vector<double> col;
    for (const auto& row : t.rows()) col.push_back(t.real(row, c));
    out.set_numeric(name, std::move(col));
  }
  if (t.rows().empty()) throw InputError(path + ": no data rows");
  return out;
}

std::vector<std::string> read_header(const std::string& path) {
  return load(path, "data").header();
}

MotifCatalog read_catalog(const std::string& path) {
  const auto t = load(path, "motif catalog");
  t.require_columns({"group_id", "motif_id", "description"});
  const auto cg = t.column("group_id"), cm = t.column("motif_id"), cd = t.column("description");
  std::vector<MotifEntry> entries;
  for (const auto& row : t.rows()) {
    entries.push_back({row.fields[cg], row.fields[cm], row.fields[cd]});
  }
  return MotifCatalog(std::move(entries));
}

TermDictionary read_dictionary(const std::string& path) {
  if (path.empty()) throw InputError("no dictionary file given");
  try {
    return TermDictionary::parse(read_text(path));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw InputError(root_.string() + ": cannot create output directory: " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& bytes) {
  for (const auto& w : written_) {
    if (w.path == name) throw InputError("output '" + name + "' written twice");
  }
  const auto path = root_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path.string() + ": cannot write file");
  out << bytes;
  out.close();
  if (!out) throw InputError(path.string() + ": write failed");
  written_.push_back({name, sha256_hex(bytes)});
}

}  // namespace climattn::pipeline
