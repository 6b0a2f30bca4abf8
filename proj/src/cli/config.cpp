#include "stpsm/cli/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace stpsm {

namespace {

using json = nlohmann::json;

/// Reads typed entries of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

  const json* find(const char* name) {
    used_.insert(name);
    auto it = j_.find(name);
    return it == j_.end() ? nullptr : &*it;
  }

  void integer(const char* name, int& out) {
    if (const json* v = find(name)) {
      if (!v->is_number_integer()) throw ConfigError(key(name), "expected an integer");
      const auto value = v->get<long long>();
      if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
        throw ConfigError(key(name), "integer out of range");
      out = static_cast<int>(value);
    }
  }

  void unsigned64(const char* name, std::uint64_t& out) {
    if (const json* v = find(name)) {
      if (!v->is_number_unsigned()) throw ConfigError(key(name), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void real(const char* name, double& out) {
    if (const json* v = find(name)) {
      if (!v->is_number()) throw ConfigError(key(name), "expected a number");
      out = v->get<double>();
    }
  }

  void boolean(const char* name, bool& out) {
    if (const json* v = find(name)) {
      if (!v->is_boolean()) throw ConfigError(key(name), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* name, std::string& out) {
    if (const json* v = find(name)) {
      if (!v->is_string()) throw ConfigError(key(name), "expected a string");
      out = v->get<std::string>();
    }
  }

  void vec3(const char* name, Eigen::Vector3d& out) {
    if (const json* v = find(name)) {
      if (!v->is_array() || v->size() != 3) throw ConfigError(key(name), "expected an array of three numbers");
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) throw ConfigError(key(name), "expected an array of three numbers");
        out(i) = (*v)[i].get<double>();
      }
    }
  }

  void reals(const char* name, std::vector<double>& out) {
    if (const json* v = find(name)) {
      if (!v->is_array()) throw ConfigError(key(name), "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(key(name), "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void strings(const char* name, std::vector<std::string>& out) {
    if (const json* v = find(name)) {
      if (!v->is_array()) throw ConfigError(key(name), "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) throw ConfigError(key(name), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  template <class Fn>
  void object(const char* name, Fn&& fn) {
    if (const json* v = find(name)) {
      Section sub(*v, key(name));
      fn(sub);
      sub.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require_file(const std::string& path, const std::string& key) {
  if (path.empty()) throw ConfigError(key, "is required");
  if (!std::filesystem::is_regular_file(path)) throw ConfigError(key, "file '" + path + "' does not exist");
}

/// Library messages start with the field name; reuse it as the key suffix.
[[noreturn]] void rethrow_as_config(const std::string& section, const std::exception& e) {
  std::string msg = e.what();
  if (const auto colon = msg.find(": "); colon != std::string::npos) msg.erase(0, colon + 2);
  throw ConfigError(section + "." + msg.substr(0, msg.find(' ')), msg);
}

}  // namespace

RunConfig merge_config(RunConfig c, const json& doc) {
  Section root(doc, "");
  root.unsigned64("seed", c.seed);
  root.integer("threads", c.threads);
  root.string("out", c.out);
  root.object("synth", [&](Section& s) {
    SynthSpec& p = c.synth;
    s.integer("n_subjects", p.n_subjects);
    s.integer("n_timepoints", p.n_timepoints);
    s.vec3("radii_mean", p.radii_mean);
    s.vec3("radii_stdev", p.radii_stdev);
    s.vec3("amplitude", p.amplitude);
    s.vec3("phase", p.phase);
    s.real("noise_stdev", p.noise_stdev);
    s.integer("truth_points", p.truth_points);
    s.real("surface_tol", p.surface_tol);
  });
  root.object("optimize", [&](Section& s) {
    OptimizerConfig& o = c.optimize.optimizer;
    s.string("manifest", c.optimize.manifest);
    s.real("alpha_start", o.alpha_start);
    s.real("alpha_end", o.alpha_end);
    std::string text;
    s.string("alpha_schedule", text);
    if (!text.empty()) {
      try {
        o.alpha_schedule = parse_schedule(text);
      } catch (const std::exception& e) {
        throw ConfigError("optimize.alpha_schedule", e.what());
      }
    }
    text.clear();
    s.string("mode", text);
    if (!text.empty()) {
      try {
        o.mode = parse_mode(text);
      } catch (const std::exception& e) {
        throw ConfigError("optimize.mode", e.what());
      }
    }
    s.integer("iterations_per_split", o.iterations_per_split);
    s.integer("target_particles", o.target_particles);
    s.real("step_size", o.step_size);
    s.real("step_decay", o.step_decay);
    s.object("sampling_kernel", [&](Section& k) {
      k.integer("neighbors", o.sampling_kernel.neighbors);
      k.real("sigma_min", o.sampling_kernel.sigma_min);
      k.real("sigma_max", o.sampling_kernel.sigma_max);
      k.integer("intrinsic_dim", o.sampling_kernel.intrinsic_dim);
    });
    s.integer("procrustes_cadence", o.procrustes_cadence);
    s.real("split_offset", o.split_offset);
    s.integer("max_halvings", o.max_halvings);
    s.integer("projection_steps", o.projection_steps);
    s.integer("checkpoint_every", c.optimize.checkpoint_every);
    s.integer("halt_after", c.optimize.halt_after);
  });
  root.object("lds", [&](Section& s) {
    s.string("manifest", c.lds.manifest);
    s.integer("latent_dim", c.lds.latent_dim);
    s.integer("iterations", c.lds.iterations);
  });
  root.object("eval", [&](Section& s) {
    EvalSection& e = c.eval;
    if (const json* v = s.find("inputs")) {
      if (!v->is_array()) throw ConfigError("eval.inputs", "expected an array of {approach, manifest} objects");
      e.inputs.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        Section item((*v)[i], "eval.inputs[" + std::to_string(i) + "]");
        EvalInput in;
        item.string("approach", in.approach);
        item.string("manifest", in.manifest);
        item.finish();
        e.inputs.push_back(in);
      }
    }
    s.strings("metrics", e.metrics);
    s.integer("folds", e.folds);
    s.integer("latent_dim", e.latent_dim);
    s.integer("iterations", e.iterations);
    s.reals("mask_fractions", e.mask_fractions);
    s.integer("trials", e.trials);
    s.integer("specificity_samples", e.specificity_samples);
    s.boolean("score_full", e.score_full);
  });
  root.object("modes", [&](Section& s) {
    s.string("manifest", c.modes.manifest);
    s.integer("k", c.modes.k);
  });
  root.finish();
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
  }
  return merge_config(std::move(base), doc);
}

nlohmann::json config_to_json(const RunConfig& c) {
  auto v3 = [](const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); };
  const OptimizerConfig& o = c.optimize.optimizer;
  json inputs = json::array();
  for (const auto& in : c.eval.inputs) inputs.push_back({{"approach", in.approach}, {"manifest", in.manifest}});
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"out", c.out},
      {"synth",
       {{"n_subjects", c.synth.n_subjects},
        {"n_timepoints", c.synth.n_timepoints},
        {"radii_mean", v3(c.synth.radii_mean)},
        {"radii_stdev", v3(c.synth.radii_stdev)},
        {"amplitude", v3(c.synth.amplitude)},
        {"phase", v3(c.synth.phase)},
        {"noise_stdev", c.synth.noise_stdev},
        {"truth_points", c.synth.truth_points},
        {"surface_tol", c.synth.surface_tol}}},
      {"optimize",
       {{"manifest", c.optimize.manifest},
        {"alpha_start", o.alpha_start},
        {"alpha_end", o.alpha_end},
        {"alpha_schedule", to_string(o.alpha_schedule)},
        {"mode", to_string(o.mode)},
        {"iterations_per_split", o.iterations_per_split},
        {"target_particles", o.target_particles},
        {"step_size", o.step_size},
        {"step_decay", o.step_decay},
        {"sampling_kernel",
         {{"neighbors", o.sampling_kernel.neighbors},
          {"sigma_min", o.sampling_kernel.sigma_min},
          {"sigma_max", o.sampling_kernel.sigma_max},
          {"intrinsic_dim", o.sampling_kernel.intrinsic_dim}}},
        {"procrustes_cadence", o.procrustes_cadence},
        {"split_offset", o.split_offset},
        {"max_halvings", o.max_halvings},
        {"projection_steps", o.projection_steps},
        {"checkpoint_every", c.optimize.checkpoint_every},
        {"halt_after", c.optimize.halt_after}}},
      {"lds", {{"manifest", c.lds.manifest}, {"latent_dim", c.lds.latent_dim}, {"iterations", c.lds.iterations}}},
      {"eval",
       {{"inputs", inputs},
        {"metrics", c.eval.metrics},
        {"folds", c.eval.folds},
        {"latent_dim", c.eval.latent_dim},
        {"iterations", c.eval.iterations},
        {"mask_fractions", c.eval.mask_fractions},
        {"trials", c.eval.trials},
        {"specificity_samples", c.eval.specificity_samples},
        {"score_full", c.eval.score_full}}},
      {"modes", {{"manifest", c.modes.manifest}, {"k", c.modes.k}}},
  };
}

void validate_config(const RunConfig& c, const std::string& command) {
  if (c.threads < 0) throw ConfigError("threads", "must be non-negative");
  if (c.out.empty()) throw ConfigError("out", "must not be empty");
  if (command == "synth") {
    try {
      c.synth.validate();
    } catch (const InvalidSpec& e) {
      rethrow_as_config("synth", e);
    }
  } else if (command == "optimize") {
    require_file(c.optimize.manifest, "optimize.manifest");
    try {
      c.optimize.optimizer.validate();
    } catch (const InvalidArgument& e) {
      rethrow_as_config("optimize", e);
    }
    if (c.optimize.checkpoint_every < 0) throw ConfigError("optimize.checkpoint_every", "must be non-negative");
    if (c.optimize.halt_after < 0) throw ConfigError("optimize.halt_after", "must be non-negative");
  } else if (command == "lds-fit") {
    require_file(c.lds.manifest, "lds.manifest");
    if (c.lds.latent_dim < 1) throw ConfigError("lds.latent_dim", "must be at least 1");
    if (c.lds.iterations < 1) throw ConfigError("lds.iterations", "must be at least 1");
  } else if (command == "eval") {
    const EvalSection& e = c.eval;
    if (e.inputs.empty()) throw ConfigError("eval.inputs", "needs at least one PDM");
    std::set<std::string> names;
    for (std::size_t i = 0; i < e.inputs.size(); ++i) {
      const std::string key = "eval.inputs[" + std::to_string(i) + "]";
      if (e.inputs[i].approach.empty()) throw ConfigError(key + ".approach", "must not be empty");
      if (e.inputs[i].approach.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError(key + ".approach", "must not contain commas, quotes or newlines");
      if (!names.insert(e.inputs[i].approach).second) throw ConfigError(key + ".approach", "duplicate approach name");
      require_file(e.inputs[i].manifest, key + ".manifest");
    }
    for (const auto& m : e.metrics)
      if (m != "full" && m != "partial" && m != "specificity")
        throw ConfigError("eval.metrics", "unknown metric '" + m + "' (use full, partial, specificity)");
    if (e.folds < 2) throw ConfigError("eval.folds", "must be at least 2");
    if (e.latent_dim < 1) throw ConfigError("eval.latent_dim", "must be at least 1");
    if (e.iterations < 1) throw ConfigError("eval.iterations", "must be at least 1");
    for (double f : e.mask_fractions)
      if (!(f > 0.0 && f < 1.0)) throw ConfigError("eval.mask_fractions", "every fraction must lie in (0, 1)");
    if (e.trials < 1) throw ConfigError("eval.trials", "must be at least 1");
    if (e.specificity_samples < 1) throw ConfigError("eval.specificity_samples", "must be at least 1");
  } else if (command == "modes") {
    require_file(c.modes.manifest, "modes.manifest");
    if (c.modes.k < 1) throw ConfigError("modes.k", "must be at least 1");
  } else {
    throw ConfigError("<command>", "unknown command '" + command + "'");
  }
}

}  // namespace stpsm
