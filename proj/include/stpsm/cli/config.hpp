#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stpsm/core/errors.hpp"
#include "stpsm/psm/optimizer_config.hpp"
#include "stpsm/surfaces/synthetic.hpp"

namespace stpsm {

/// Bad configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct OptimizeSection {
  std::string manifest;
  OptimizerConfig optimizer;
  int checkpoint_every = 50;
  /// Stops after this many iterations, leaving a checkpoint (0 runs to completion).
  int halt_after = 0;
};

struct LdsSection {
  std::string manifest;
  int latent_dim = 64;
  int iterations = 50;
};

struct EvalInput {
  std::string approach;
  std::string manifest;
};

struct EvalSection {
  std::vector<EvalInput> inputs;
  std::vector<std::string> metrics{"full", "partial", "specificity"};
  int folds = 5;
  int latent_dim = 64;
  int iterations = 50;
  std::vector<double> mask_fractions{0.25};
  int trials = 5;
  int specificity_samples = 100;
  bool score_full = false;
};

struct ModesSection {
  std::string manifest;
  int k = 3;
};

/// Every setting of every command. Defaults, then the config file, then flags.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = "out";
  SynthSpec synth;
  OptimizeSection optimize;
  LdsSection lds;
  EvalSection eval;
  ModesSection modes;
};

/// Overlays a JSON document on `base`. Unknown keys and ill-typed values throw ConfigError.
RunConfig merge_config(RunConfig base, const nlohmann::json& doc);
RunConfig load_config(const std::string& path, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& config);

/// Value checks for one command ("synth", "optimize", "lds-fit", "eval", "modes").
void validate_config(const RunConfig& config, const std::string& command);

}  // namespace stpsm
