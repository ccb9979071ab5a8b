#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stgcn/synthetic.hpp"
#include "stgcn/trainer.hpp"

namespace stgcn {

/// Sectioned key-value text format:
///   [section]
///   key = value        # comment
/// Blank lines and #-comments are ignored.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KvConfig parse_file(const std::string& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

struct DatasetConfig {
  enum class Kind { Files, Synthetic } kind = Kind::Synthetic;
  std::string content_path, cites_path;  // Files
  SyntheticSpec synthetic;               // Synthetic
  double split_train = 0.6, split_val = 0.2, split_test = 0.2;
  std::string name() const;
};

struct MethodConfig {
  // st / pst
  int max_epochs = 400;
  // pst / pbt
  int population = 20;
  int warmup_epochs = 200;
  int step_epochs = 1;
  int total_epochs = 400;
  // rs
  int trials = 200;
  int budget_epochs = 400;
  // hb
  int hb_max_budget = 81;
  int hb_eta = 3;
};

struct ExperimentConfig {
  std::string method;  // rs | hb | pbt | st | pst
  DatasetConfig dataset;
  int layers = 4;
  int hidden = 128;
  TrainOptions train;
  double init_sigma = 0.5;
  MethodConfig method_params;
  std::uint64_t seed = 1;
  int workers = 1;
  bool deterministic = true;
  std::string out_root;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_kv(const KvConfig& kv);
  void validate() const;
  /// Fully-resolved INI snapshot; parsing it back reproduces this config.
  std::string to_ini() const;
};

SyntheticSpec synthetic_spec_from_kv(const KvConfig& kv, const std::string& section = "synthetic");

}  // namespace stgcn
