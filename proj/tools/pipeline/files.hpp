#pragma once

// Input readers for the pipeline's delimited files and an output directory
// that records what it writes for the run manifest.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "climattn/econometrics.hpp"
#include "climattn/folklore.hpp"
#include "climattn/transmission.hpp"
#include "climattn/variability.hpp"

namespace climattn::pipeline {

std::string sha256_hex(const std::string& bytes);
std::string read_text(const std::filesystem::path& path);

struct FileDigest {
  std::string path;  // as given for inputs, relative to the run directory for outputs
  std::string sha256;
};

/// Long-format anomalies `unit_id,year,anomaly`, one series per unit. Rows of
/// a unit may appear in any order; the series is sorted by year.
std::map<std::string, TemperatureSeries> read_anomalies(const std::string& path);

/// `group_id,unit_id`.
std::map<std::string, std::string> read_links(const std::string& path);

/// `group_id,true_scale,cell,n_respondents`.
std::vector<GroupSpec> read_groups(const std::string& path);

/// Any delimited table; columns named in `keys` are read as text, the rest
/// that appear in `numeric` as reals. Other columns are carried unchecked.
DataTable read_table(const std::string& path, const std::vector<std::string>& numeric,
                     const std::vector<std::string>& keys);

/// Header of a delimited file.
std::vector<std::string> read_header(const std::string& path);

/// `group_id,motif_id,description`.
MotifCatalog read_catalog(const std::string& path);

TermDictionary read_dictionary(const std::string& path);

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Writes `bytes` to root/name and records its digest. Names are unique.
  void write(const std::string& name, const std::string& bytes);

  const std::vector<FileDigest>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<FileDigest> written_;
};

}  // namespace climattn::pipeline
