#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdp_tcm/dbn.hpp"
#include "mdp_tcm/multistate.hpp"
#include "mdp_tcm/signal.hpp"
#include "mdp_tcm/synth.hpp"

namespace mdp_tcm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every accepted key with its built-in default. Training keys
/// (pretrain_epochs, learning_rate, ...) have no entry here: their
/// defaults come from the selected preset.
const std::map<std::string, std::string>& builtin_defaults();
const std::set<std::string>& training_keys();
bool is_known_key(const std::string& key);

/// Resolved command parameters: built-in or preset default < config file < flags.
struct RunConfig {
  std::map<std::string, std::string> values;
  std::set<std::string> from_file;
  std::set<std::string> from_flags;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_seed(const std::string& key) const;
  /// Comma-separated list; empty string gives an empty list.
  std::vector<std::string> get_list(const std::string& key) const;
};

/// Throws UsageError on any unknown key.
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values);

/// role is "classifier" or "regressor". preset=auto picks diagnosis-default
/// for the classifier and prognosis-default for regressors.
TrainConfig train_config(const RunConfig& config, std::string_view role);
MdpConfig mdp_config(const RunConfig& config);
SynthConfig synth_config(const RunConfig& config);
WindowSpec window_spec(const RunConfig& config);

/// Worker cap from MDP_TCM_THREADS (unset or invalid: hardware concurrency).
unsigned worker_count(std::size_t tasks);

/// Entry point of the mdp-tcm executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace mdp_tcm::cli
