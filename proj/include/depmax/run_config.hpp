#pragma once

#include "depmax/drn.hpp"

#include <map>
#include <string>
#include <vector>

namespace depmax::cli {

/// Raised for unknown keys, malformed values or schema violations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration with '#' comments. Every key must
/// appear in the published schema; unknown keys are rejected by name.
class RunConfig {
 public:
  RunConfig() = default;

  /// Parses a config file and validates each key against the schema.
  static RunConfig from_file(const std::string& path);
  /// Parses config text (used by tests and for defaults-only configs).
  static RunConfig from_string(const std::string& text);

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  bool is_set(const std::string& key) const;

  /// Key, default and description for every schema entry, for --help
  /// style documentation.
  static std::string schema_doc();

 private:
  std::map<std::string, std::string> values_;
};

/// Materialize typed configs from the flat key-value view.
lsmi::Config build_lsmi_config(const RunConfig& rc);
drn::TrainConfig build_train_config(const RunConfig& rc, int input_dim,
                                    int n_classes);

}  // namespace depmax::cli
