#include "stgcn/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

const std::vector<std::string> kMethods{"rs", "hb", "pbt", "st", "pst"};

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(origin + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

bool KvConfig::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string KvConfig::get(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw ConfigError(origin_ + ": missing key '" + key + "' in section [" + section + "]");
  return sections_.at(section).at(key);
}

std::string KvConfig::get_or(const std::string& section, const std::string& key,
                             const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double KvConfig::get_double(const std::string& section, const std::string& key,
                            double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' in [" + section + "] is not a number: " + v);
  }
}

int KvConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(origin_ + ": key '" + key + "' in [" + section + "] is not an integer: " + v);
  return out;
}

bool KvConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get(section, key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "' in [" + section + "] is not a boolean: " + v);
}

std::string DatasetConfig::name() const {
  if (kind == Kind::Synthetic) return "synthetic";
  return std::filesystem::path(content_path).stem().string();
}

SyntheticSpec synthetic_spec_from_kv(const KvConfig& kv, const std::string& section) {
  SyntheticSpec spec;
  spec.nodes = kv.get_int(section, "nodes", spec.nodes);
  spec.classes = kv.get_int(section, "classes", spec.classes);
  spec.communities = kv.get_int(section, "communities", spec.communities);
  spec.p_in = kv.get_double(section, "p_in", spec.p_in);
  spec.p_out = kv.get_double(section, "p_out", spec.p_out);
  spec.feature_dim = kv.get_int(section, "feature_dim", spec.feature_dim);
  spec.noise = kv.get_double(section, "noise", spec.noise);
  spec.validate();
  return spec;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_kv(KvConfig::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
  ExperimentConfig cfg;
  cfg.method = kv.get("experiment", "method");
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("experiment", "seed", 1));
  cfg.workers = kv.get_int("experiment", "workers", 1);
  cfg.deterministic = kv.get_bool("experiment", "deterministic", true);
  cfg.out_root = kv.get_or("experiment", "out", "");

  const std::string kind = kv.get_or("dataset", "kind", "synthetic");
  if (kind == "files") {
    cfg.dataset.kind = DatasetConfig::Kind::Files;
    cfg.dataset.content_path = kv.get("dataset", "content");
    cfg.dataset.cites_path = kv.get("dataset", "cites");
  } else if (kind == "synthetic") {
    cfg.dataset.kind = DatasetConfig::Kind::Synthetic;
    cfg.dataset.synthetic = synthetic_spec_from_kv(kv, "dataset");
  } else {
    throw ConfigError("dataset kind must be 'files' or 'synthetic', got '" + kind + "'");
  }
  cfg.dataset.split_train = kv.get_double("dataset", "split_train", 0.6);
  cfg.dataset.split_val = kv.get_double("dataset", "split_val", 0.2);
  cfg.dataset.split_test = kv.get_double("dataset", "split_test", 0.2);

  cfg.layers = kv.get_int("model", "layers", 4);
  cfg.hidden = kv.get_int("model", "hidden", 128);

  cfg.train.sigma_min = kv.get_double("hyper", "sigma_min", cfg.train.sigma_min);
  cfg.train.sigma_max = kv.get_double("hyper", "sigma_max", cfg.train.sigma_max);
  cfg.init_sigma = kv.get_double("hyper", "init_sigma", cfg.init_sigma);

  const std::string& m = cfg.method;
  if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
    throw ConfigError("unknown method '" + m + "'");
  if (!kv.has_section(m))
    throw ConfigError("config must contain a [" + m + "] section matching the method");

  cfg.train.lr_theta = kv.get_double(m, "lr_theta", cfg.train.lr_theta);
  cfg.train.lr_mu = kv.get_double(m, "lr_mu", cfg.train.lr_mu);
  cfg.train.lr_sigma = kv.get_double(m, "lr_sigma", cfg.train.lr_sigma);
  cfg.train.tau = kv.get_double(m, "tau", cfg.train.tau);
  cfg.train.t_trn = kv.get_int(m, "t_trn", cfg.train.t_trn);
  cfg.train.t_val = kv.get_int(m, "t_val", cfg.train.t_val);
  cfg.train.dropout_temperature =
      kv.get_double(m, "dropout_temperature", cfg.train.dropout_temperature);

  cfg.method_params.max_epochs = kv.get_int(m, "max_epochs", cfg.method_params.max_epochs);
  cfg.method_params.population = kv.get_int(m, "population", cfg.method_params.population);
  cfg.method_params.warmup_epochs =
      kv.get_int(m, "warmup_epochs", cfg.method_params.warmup_epochs);
  cfg.method_params.step_epochs = kv.get_int(m, "step_epochs", cfg.method_params.step_epochs);
  cfg.method_params.total_epochs =
      kv.get_int(m, "total_epochs", kv.get_int(m, "max_epochs", cfg.method_params.total_epochs));
  cfg.method_params.trials = kv.get_int(m, "trials", cfg.method_params.trials);
  cfg.method_params.budget_epochs =
      kv.get_int(m, "budget_epochs", cfg.method_params.budget_epochs);
  cfg.method_params.hb_max_budget = kv.get_int(m, "max_budget", cfg.method_params.hb_max_budget);
  cfg.method_params.hb_eta = kv.get_int(m, "eta", cfg.method_params.hb_eta);

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (layers < 2) throw ConfigError("model: layers must be at least 2");
  if (hidden < 1) throw ConfigError("model: hidden width must be positive");
  if (workers < 1) throw ConfigError("experiment: workers must be positive");
  if (dataset.kind == DatasetConfig::Kind::Files) {
    if (!std::filesystem::exists(dataset.content_path))
      throw ConfigError("dataset content path does not exist: " + dataset.content_path);
    if (!std::filesystem::exists(dataset.cites_path))
      throw ConfigError("dataset cites path does not exist: " + dataset.cites_path);
  } else {
    dataset.synthetic.validate();
  }
  const double split_sum = dataset.split_train + dataset.split_val + dataset.split_test;
  if (split_sum > 1.0 + 1e-12) throw ConfigError("dataset splits sum above 1");
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream out;
  out.precision(17);
  out << "[experiment]\n";
  out << "method = " << method << "\n";
  out << "seed = " << seed << "\n";
  out << "workers = " << workers << "\n";
  out << "deterministic = " << (deterministic ? "true" : "false") << "\n";
  if (!out_root.empty()) out << "out = " << out_root << "\n";
  out << "\n[dataset]\n";
  if (dataset.kind == DatasetConfig::Kind::Files) {
    out << "kind = files\n";
    out << "content = " << dataset.content_path << "\n";
    out << "cites = " << dataset.cites_path << "\n";
  } else {
    const auto& s = dataset.synthetic;
    out << "kind = synthetic\n";
    out << "nodes = " << s.nodes << "\n";
    out << "classes = " << s.classes << "\n";
    out << "communities = " << s.communities << "\n";
    out << "p_in = " << s.p_in << "\n";
    out << "p_out = " << s.p_out << "\n";
    out << "feature_dim = " << s.feature_dim << "\n";
    out << "noise = " << s.noise << "\n";
  }
  out << "split_train = " << dataset.split_train << "\n";
  out << "split_val = " << dataset.split_val << "\n";
  out << "split_test = " << dataset.split_test << "\n";
  out << "\n[model]\n";
  out << "layers = " << layers << "\n";
  out << "hidden = " << hidden << "\n";
  out << "\n[hyper]\n";
  out << "sigma_min = " << train.sigma_min << "\n";
  out << "sigma_max = " << train.sigma_max << "\n";
  out << "init_sigma = " << init_sigma << "\n";
  out << "\n[" << method << "]\n";
  out << "lr_theta = " << train.lr_theta << "\n";
  out << "lr_mu = " << train.lr_mu << "\n";
  out << "lr_sigma = " << train.lr_sigma << "\n";
  out << "tau = " << train.tau << "\n";
  out << "t_trn = " << train.t_trn << "\n";
  out << "t_val = " << train.t_val << "\n";
  out << "dropout_temperature = " << train.dropout_temperature << "\n";
  if (method == "st" || method == "pst") {
    out << "max_epochs = " << method_params.max_epochs << "\n";
  }
  if (method == "pst" || method == "pbt") {
    out << "population = " << method_params.population << "\n";
    out << "warmup_epochs = " << method_params.warmup_epochs << "\n";
    out << "step_epochs = " << method_params.step_epochs << "\n";
    out << "total_epochs = " << method_params.total_epochs << "\n";
  }
  if (method == "rs") {
    out << "trials = " << method_params.trials << "\n";
    out << "budget_epochs = " << method_params.budget_epochs << "\n";
  }
  if (method == "hb") {
    out << "max_budget = " << method_params.hb_max_budget << "\n";
    out << "eta = " << method_params.hb_eta << "\n";
  }
  return out.str();
}

}  // namespace stgcn
