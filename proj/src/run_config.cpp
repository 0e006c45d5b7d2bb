#include "depmax/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace depmax::cli {

namespace {

struct SchemaEntry {
  const char* key;
  const char* def;
  const char* doc;
};

// The published configuration schema. Defaults follow the paper-scale
// training values where those exist and desk-scale choices elsewhere.
const SchemaEntry kSchema[] = {
    {"lsmi.sigma_s_rule", "grid", "bandwidth rule for the student side: fixed | median | grid"},
    {"lsmi.sigma_s_value", "1.0", "sigma when rule = fixed"},
    {"lsmi.sigma_s_factors", "0.25,0.5,1,2", "median multipliers when rule = grid"},
    {"lsmi.sigma_t_rule", "grid", "bandwidth rule for the teacher side"},
    {"lsmi.sigma_t_value", "1.0", "sigma when rule = fixed"},
    {"lsmi.sigma_t_factors", "0.25,0.5,1,2", "median multipliers when rule = grid"},
    {"lsmi.delta_grid", "1e-4,1e-3,1e-2,1e-1", "regularizer candidates; a single value fixes delta"},
    {"lsmi.grad_mode", "full", "full | frozen_alpha"},
    {"lsmi.cv_folds", "2", "cross-validation folds"},
    {"lsmi.cv_max_n", "1000", "cap on rows used for hyperparameter selection (0 = all)"},
    {"ksg.k", "5", "neighbor count for the KSG estimator"},
    {"train.lambda_max", "0.5", "consistency weight after ramp-up"},
    {"train.beta_max", "0.1", "dependence weight after ramp-up"},
    {"train.ramp_epochs", "30", "linear ramp length for lambda and beta"},
    {"train.eta", "0.99", "EMA teacher decay (0.9998 at full scale)"},
    {"train.epochs", "300", "max training epochs"},
    {"train.warmup_epochs", "20", "linear lr warmup length"},
    {"train.lr_peak", "4e-5", "peak learning rate"},
    {"train.wd_start", "2e-5", "weight decay at epoch 0"},
    {"train.wd_end", "2e-2", "weight decay at the final epoch"},
    {"train.label_eps", "0.4", "label smoothing"},
    {"train.patience", "100", "early-stopping patience in epochs"},
    {"train.dep_measure", "lsmi", "lsmi | kl | jsd | none"},
    {"train.eval", "student", "network scored on validation: student | teacher"},
    {"train.seed", "0", "run seed"},
    {"train.batch_size", "64", "minibatch size"},
    {"net.trunk_widths", "32,32", "hidden layer widths"},
    {"net.proj_hidden", "32", "projection head hidden width"},
    {"net.proj_dim", "16", "projection dimension (256 at full scale)"},
    {"aug.noise_std", "0.0", "additive Gaussian noise std"},
    {"aug.smooth_radius", "0", "moving-average radius over coordinates"},
    {"aug.scale_range", "0.0", "multiplicative contrast range"},
    {"aug.shift_range", "0.0", "additive intensity range"},
    {"aug.zoom_range", "0.0", "coordinate zoom range"},
    {"data.n_train", "400", "two-moons training samples"},
    {"data.n_val", "400", "two-moons validation samples"},
    {"data.noise", "0.3", "two-moons noise std"},
    {"data.seed", "7", "dataset seed (validation uses seed + 1)"},
    {"data.train_path", "", "labeled csv path when --dataset csv"},
    {"data.val_path", "", "labeled csv path when --dataset csv"},
};

const SchemaEntry* find_entry(const std::string& key) {
  for (const auto& e : kSchema)
    if (key == e.key) return &e;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
  return out;
}

}  // namespace

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!find_entry(key))
      throw ConfigError("unknown config key: " + key);
    rc.values_[key] = value;
  }
  return rc;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

bool RunConfig::is_set(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const SchemaEntry* e = find_entry(key);
  if (!e) throw ConfigError("unknown config key: " + key);
  return e->def;
}

double RunConfig::get_double(const std::string& key) const {
  return to_double(key, get_string(key));
}

int RunConfig::get_int(const std::string& key) const {
  return static_cast<int>(to_long(key, get_string(key)));
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const long v = to_long(key, get_string(key));
  if (v < 0) throw ConfigError("config key " + key + ": must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const std::string cell =
        trim(pos == std::string::npos ? s.substr(start)
                                      : s.substr(start, pos - start));
    if (!cell.empty()) out.push_back(to_double(key, cell));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_list(key)) out.push_back(static_cast<int>(v));
  return out;
}

std::string RunConfig::schema_doc() {
  std::ostringstream ss;
  for (const auto& e : kSchema)
    ss << e.key << " = " << e.def << "\n    " << e.doc << '\n';
  return ss.str();
}

lsmi::Config build_lsmi_config(const RunConfig& rc) {
  lsmi::Config cfg;
  auto rule = [&](const std::string& side) {
    const std::string r = rc.get_string("lsmi.sigma_" + side + "_rule");
    if (r == "fixed")
      return lsmi::BandwidthRule::fixed(
          rc.get_double("lsmi.sigma_" + side + "_value"));
    if (r == "median") return lsmi::BandwidthRule::median();
    if (r == "grid")
      return lsmi::BandwidthRule::median_grid(
          rc.get_list("lsmi.sigma_" + side + "_factors"));
    throw ConfigError("lsmi.sigma_" + side + "_rule: expected fixed|median|grid");
  };
  cfg.sigma_s = rule("s");
  cfg.sigma_t = rule("t");
  cfg.delta_grid = rc.get_list("lsmi.delta_grid");
  const std::string gm = rc.get_string("lsmi.grad_mode");
  if (gm == "full") cfg.grad_mode = lsmi::GradMode::full;
  else if (gm == "frozen_alpha") cfg.grad_mode = lsmi::GradMode::frozen_alpha;
  else throw ConfigError("lsmi.grad_mode: expected full|frozen_alpha");
  cfg.cv_folds = rc.get_int("lsmi.cv_folds");
  cfg.cv_max_n = rc.get_int("lsmi.cv_max_n");
  return cfg;
}

drn::TrainConfig build_train_config(const RunConfig& rc, int input_dim,
                                    int n_classes) {
  drn::TrainConfig cfg;
  cfg.lambda_max = rc.get_double("train.lambda_max");
  cfg.beta_max = rc.get_double("train.beta_max");
  cfg.ramp_epochs = rc.get_int("train.ramp_epochs");
  cfg.eta = rc.get_double("train.eta");
  cfg.epochs = rc.get_int("train.epochs");
  cfg.warmup_epochs = rc.get_int("train.warmup_epochs");
  cfg.lr_peak = rc.get_double("train.lr_peak");
  cfg.wd_start = rc.get_double("train.wd_start");
  cfg.wd_end = rc.get_double("train.wd_end");
  cfg.label_eps = rc.get_double("train.label_eps");
  cfg.early_stop_patience = rc.get_int("train.patience");
  const std::string dm = rc.get_string("train.dep_measure");
  if (dm == "lsmi") cfg.dep_measure = drn::DepMeasure::lsmi;
  else if (dm == "kl") cfg.dep_measure = drn::DepMeasure::kl;
  else if (dm == "jsd") cfg.dep_measure = drn::DepMeasure::jsd;
  else if (dm == "none") cfg.dep_measure = drn::DepMeasure::none;
  else throw ConfigError("train.dep_measure: expected lsmi|kl|jsd|none");
  const std::string ev = rc.get_string("train.eval");
  if (ev == "teacher") cfg.eval = drn::TrainConfig::Eval::teacher;
  else if (ev == "student") cfg.eval = drn::TrainConfig::Eval::student;
  else throw ConfigError("train.eval: expected teacher|student");
  cfg.lsmi_cfg = build_lsmi_config(rc);
  cfg.aug.noise_std = rc.get_double("aug.noise_std");
  cfg.aug.smooth_radius = rc.get_int("aug.smooth_radius");
  cfg.aug.scale_range = rc.get_double("aug.scale_range");
  cfg.aug.shift_range = rc.get_double("aug.shift_range");
  cfg.aug.zoom_range = rc.get_double("aug.zoom_range");
  cfg.seed = rc.get_u64("train.seed");
  cfg.batch_size = rc.get_int("train.batch_size");
  cfg.net_cfg.input_dim = input_dim;
  cfg.net_cfg.n_classes = n_classes;
  cfg.net_cfg.trunk_widths = rc.get_int_list("net.trunk_widths");
  cfg.net_cfg.proj_hidden = rc.get_int("net.proj_hidden");
  cfg.net_cfg.proj_dim = rc.get_int("net.proj_dim");
  return cfg;
}

}  // namespace depmax::cli
