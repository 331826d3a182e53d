#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <thread>

#include "mdp_tcm/cli.hpp"
#include "mdp_tcm/rng.hpp"

namespace mdp_tcm::cli {

const std::map<std::string, std::string>& builtin_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"seed", "0"},
      {"out", ""},
      {"data", ""},
      {"model", ""},
      {"run", ""},
      {"runs", "20"},
      {"kind", "multistate"},
      {"preset", "auto"},
      {"channels", "all"},
      {"subsets", "all,groups"},
      {"trials", "1"},
      {"desk_scale", "true"},
      {"run_seconds", "90"},
      {"imbalance_skew", "10"},
      {"wear_end_um", "400"},
      {"spindle_rpm", "1650"},
      {"sampling_rate_hz", ""},
      {"multiple", "1"},
      {"stride", ""},
      {"split", "frame"},
      {"train_ratio", "0.85"},
      {"test_runs", ""},
      {"de_population", "30"},
      {"de_generations", "50"},
      {"de_p", "0.1"},
      {"de_c", "0.1"},
      {"evolve_costs", "true"},
      {"min_samples", "50"},
      {"smoothing_window", "50"},
      {"sticky_count", "1"},
  };
  return defaults;
}

const std::set<std::string>& training_keys() {
  static const std::set<std::string> keys = {"pretrain_epochs", "finetune_epochs", "learning_rate",
                                             "batch_size",      "hidden_min",      "hidden_max",
                                             "hidden_layers",   "hidden_sizes",    "gibbs_steps",
                                             "weight_decay"};
  return keys;
}

bool is_known_key(const std::string& key) {
  return builtin_defaults().count(key) > 0 || training_keys().count(key) > 0;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw std::logic_error("RunConfig: no value for '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  const std::string& s = get(key);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) throw UsageError(key + ": expected an integer, got '" + s + "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw UsageError(key + ": expected a number, got '" + s + "'");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw UsageError(key + ": expected true or false, got '" + s + "'");
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
  const std::string& s = get(key);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0 || s.front() == '-') {
    throw UsageError(key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string& s = get(key);
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = std::min(s.find(',', start), s.size());
    std::string item = s.substr(start, comma - start);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
    start = comma + 1;
  }
  return out;
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values) {
  RunConfig out;
  out.values = builtin_defaults();
  for (const auto& [k, v] : file_values) {
    if (!is_known_key(k)) throw UsageError("unknown config key '" + k + "'");
    out.values[k] = v;
    out.from_file.insert(k);
  }
  for (const auto& [k, v] : flag_values) {
    if (!is_known_key(k)) throw UsageError("unknown option '" + k + "'");
    out.values[k] = v;
    out.from_flags.insert(k);
  }
  return out;
}

TrainConfig train_config(const RunConfig& config, std::string_view role) {
  std::string preset = config.get("preset");
  if (preset == "auto") {
    if (role == "classifier") {
      preset = "diagnosis-default";
    } else if (role == "regressor") {
      preset = "prognosis-default";
    } else {
      throw std::logic_error("train_config: unknown role");
    }
  }
  TrainConfig c;
  try {
    c = TrainConfig::preset(preset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto int_key = [&](const char* key, int& field) {
    if (config.has(key)) field = static_cast<int>(config.get_int(key));
  };
  int_key("pretrain_epochs", c.pretrain_epochs);
  int_key("finetune_epochs", c.finetune_epochs);
  int_key("batch_size", c.batch_size);
  int_key("hidden_min", c.hidden_min);
  int_key("hidden_max", c.hidden_max);
  int_key("hidden_layers", c.hidden_layers);
  int_key("gibbs_steps", c.gibbs_steps);
  if (config.has("learning_rate")) c.learning_rate = config.get_double("learning_rate");
  if (config.has("weight_decay")) c.weight_decay = config.get_double("weight_decay");
  if (config.has("hidden_sizes")) {
    c.hidden_sizes.clear();
    for (const auto& s : config.get_list("hidden_sizes")) {
      char* end = nullptr;
      const long v = std::strtol(s.c_str(), &end, 10);
      if (*end != '\0' || v < 1) throw UsageError("hidden_sizes: bad layer size '" + s + "'");
      c.hidden_sizes.push_back(static_cast<std::size_t>(v));
    }
  }
  c.seed = derive_seed(config.get_seed("seed"), role);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

MdpConfig mdp_config(const RunConfig& config) {
  MdpConfig m;
  m.classifier = train_config(config, "classifier");
  m.regressor = train_config(config, "regressor");
  m.de.population_size = static_cast<int>(config.get_int("de_population"));
  m.de.max_generations = static_cast<int>(config.get_int("de_generations"));
  m.de.p_best_fraction = config.get_double("de_p");
  m.de.adaptation_rate = config.get_double("de_c");
  m.de.seed = derive_seed(config.get_seed("seed"), "de");
  m.evolve_costs = config.get_bool("evolve_costs");
  const long long min_samples = config.get_int("min_samples");
  const long long window = config.get_int("smoothing_window");
  m.sticky_count = static_cast<int>(config.get_int("sticky_count"));
  if (min_samples < 1 || window < 1 || m.sticky_count < 1) {
    throw UsageError("min_samples, smoothing_window and sticky_count must be >= 1");
  }
  m.min_samples = static_cast<std::size_t>(min_samples);
  m.smoothing_window = static_cast<std::size_t>(window);
  try {
    m.de.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return m;
}

SynthConfig synth_config(const RunConfig& config) {
  SynthConfig s = SynthConfig::defaults(config.get_bool("desk_scale"));
  s.spindle_rpm = config.get_double("spindle_rpm");
  if (!config.get("sampling_rate_hz").empty()) s.sampling_rate_hz = config.get_double("sampling_rate_hz");
  s.run_seconds = config.get_double("run_seconds");
  s.wear_end_um = config.get_double("wear_end_um");
  s.seed = config.get_seed("seed");
  try {
    s.apply_skew(config.get_double("imbalance_skew"));
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

WindowSpec window_spec(const RunConfig& config) {
  WindowSpec w;
  w.spindle_rpm = config.get_double("spindle_rpm");
  w.sampling_rate_hz = config.get("sampling_rate_hz").empty() ? (config.get_bool("desk_scale") ? 200.0 : 20000.0)
                                                              : config.get_double("sampling_rate_hz");
  w.multiple = static_cast<int>(config.get_int("multiple"));
  if (w.multiple < 1) throw UsageError("multiple must be >= 1");
  if (!config.get("stride").empty()) {
    const long long stride = config.get_int("stride");
    if (stride < 1) throw UsageError("stride must be >= 1");
    w.stride = static_cast<std::size_t>(stride);
  }
  return w;
}

unsigned worker_count(std::size_t tasks) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MDP_TCM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env != '\0' && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(cap, tasks)));
}

}  // namespace mdp_tcm::cli
