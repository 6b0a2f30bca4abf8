#include "stpsm/cli/app.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stpsm/cli/config.hpp"
#include "stpsm/cli/manifest.hpp"
#include "stpsm/core/parallel.hpp"
#include "stpsm/core/particle_io.hpp"
#include "stpsm/core/seeds.hpp"
#include "stpsm/eval/metrics.hpp"
#include "stpsm/eval/modes.hpp"
#include "stpsm/eval/report_io.hpp"
#include "stpsm/lds/em.hpp"
#include "stpsm/lds/params_io.hpp"
#include "stpsm/psm/optimizer.hpp"
#include "stpsm/surfaces/domain_io.hpp"

namespace stpsm {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Failure of a pipeline stage, carrying its exit code.
struct StageFailure {
  ExitCode code;
  std::string message;
};

struct Invocation {
  std::string command;
  RunConfig config;
  bool dry_run = false;
  bool resume = false;
};

std::string stem(int n, int t) {
  const std::string name = particle_file_name(n, t);
  return name.substr(0, name.find('.'));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

json derived_seeds(const RunConfig& c) {
  return {{"synth", derive_seed(c.seed, "synth")},
          {"optimize", derive_seed(c.seed, "optimize")},
          {"lds", derive_seed(c.seed, "lds")},
          {"eval", derive_seed(c.seed, "eval")}};
}

RunConfig with_derived_seeds(RunConfig c) {
  c.synth.seed = derive_seed(c.seed, "synth");
  c.optimize.optimizer.rng_seed = derive_seed(c.seed, "optimize");
  return c;
}

Grid2D<fs::path> particle_paths(const fs::path& dir, int n_count, int t_count) {
  Grid2D<fs::path> g(n_count, t_count);
  for (int n = 0; n < n_count; ++n)
    for (int t = 0; t < t_count; ++t) g(n, t) = dir / particle_file_name(n, t);
  return g;
}

void write_cohort(const Cohort& c, const Grid2D<fs::path>& paths) {
  for (int n = 0; n < c.subjects(); ++n)
    for (int t = 0; t < c.timepoints(); ++t) write_particles(paths(n, t), c.at(n, t).points);
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig& c, std::ostream& out) {
  const SynthCohort cohort = generate_synthetic_cohort(c.synth);
  const fs::path root = c.out;
  fs::create_directories(root / "domains");
  fs::create_directories(root / "truth");
  const int n_count = c.synth.n_subjects, t_count = c.synth.n_timepoints;
  Manifest m;
  m.kind = "synthetic";
  m.subjects = cohort.truth.subject_ids;
  m.times = cohort.truth.time_labels;
  m.domains = Grid2D<fs::path>(n_count, t_count);
  m.particles = particle_paths(root / "truth", n_count, t_count);
  json radii = json::array();
  for (int n = 0; n < n_count; ++n) {
    json row = json::array();
    for (int t = 0; t < t_count; ++t) {
      m.domains(n, t) = root / "domains" / (stem(n, t) + ".domain");
      write_domain(m.domains(n, t), cohort.domains(n, t));
      const Eigen::Vector3d& r = cohort.radii(n, t);
      row.push_back({r(0), r(1), r(2)});
    }
    radii.push_back(row);
  }
  write_cohort(cohort.truth, *m.particles);
  write_manifest(root / "manifest.json", m);
  json meta = {{"radii", radii}, {"seed", c.synth.seed}};
  write_text(root / "synth_meta.json", meta.dump(2) + "\n");
  out << "wrote " << n_count * t_count << " domains and truth particle sets to " << root.string() << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------- optimize

json optimize_fingerprint(const RunConfig& c) {
  json j = config_to_json(c).at("optimize");
  j.erase("halt_after");
  j.erase("checkpoint_every");
  j["manifest"] = fs::absolute(c.optimize.manifest).lexically_normal().string();
  j["rng_seed"] = c.optimize.optimizer.rng_seed;
  return j;
}

void write_trace(const fs::path& path, const std::vector<ObjectiveBreakdown>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,alpha,total,inter_entropy,intra_entropy,sampling_entropy,step\n";
  for (const auto& b : trace)
    out << b.iteration << ',' << format_decimal(b.alpha) << ',' << format_decimal(b.total) << ','
        << format_decimal(b.inter_subject_entropy_sum) << ',' << format_decimal(b.intra_subject_entropy_sum) << ','
        << format_decimal(b.sampling_entropy_sum) << ',' << format_decimal(b.step) << '\n';
}

json breakdown_json(const ObjectiveBreakdown& b) {
  return {{"total", b.total},
          {"inter_subject_entropy_sum", b.inter_subject_entropy_sum},
          {"intra_subject_entropy_sum", b.intra_subject_entropy_sum},
          {"sampling_entropy_sum", b.sampling_entropy_sum},
          {"alpha", b.alpha},
          {"iteration", b.iteration},
          {"particles", b.particles}};
}

int cmd_optimize(const RunConfig& c, bool resume, std::ostream& out) {
  const Manifest input = read_manifest(c.optimize.manifest);
  const DomainGrid domains = load_domains(input);
  const fs::path root = c.out;
  const fs::path checkpoint = root / "checkpoint.json";
  const fs::path fingerprint_path = root / "checkpoint_config.json";
  const json fingerprint = optimize_fingerprint(c);

  RunControl control;
  if (resume) {
    if (!fs::exists(checkpoint)) throw ConfigError("--resume", "no checkpoint at " + checkpoint.string());
    std::ifstream fin(fingerprint_path);
    json saved;
    if (fin) fin >> saved;
    if (saved != fingerprint) throw ConfigError("--resume", "checkpoint was written with a different optimize config");
    std::ifstream cin(checkpoint);
    json state;
    cin >> state;
    control.resume = state_from_json(state);
  }
  fs::create_directories(root);
  write_text(fingerprint_path, fingerprint.dump(2) + "\n");
  control.checkpoint_path = checkpoint;
  control.checkpoint_every = c.optimize.checkpoint_every;
  control.halt_after = c.optimize.halt_after;
  const fs::path dump = root / "diagnostic_state.json";
  control.on_failure = [&](const OptimizerState& s) { write_text(dump, state_to_json(s).dump() + "\n"); };

  OptimizeResult result;
  try {
    result = optimize(domains, c.optimize.optimizer, control);
  } catch (const std::exception& e) {
    throw StageFailure{exit_optimizer, std::string(e.what()) + " (diagnostic dump: " + dump.string() + ")"};
  }
  write_trace(root / "trace.csv", result.trace);
  json summary = {{"mode", to_string(c.optimize.optimizer.mode)},
                  {"finished", result.finished},
                  {"iterations", static_cast<int>(result.trace.size())},
                  {"subjects", domains.rows()},
                  {"timepoints", domains.cols()},
                  {"particles", result.local.particles()},
                  {"final", result.trace.empty() ? json(nullptr) : breakdown_json(result.trace.back())}};
  write_text(root / "summary.json", summary.dump(2) + "\n");
  if (!result.finished) {
    out << "halted after " << result.trace.size() << " iterations; resume with --resume\n";
    return exit_ok;
  }
  fs::create_directories(root / "particles");
  fs::create_directories(root / "local");
  Manifest m;
  m.kind = "pdm";
  m.mode = to_string(c.optimize.optimizer.mode);
  m.subjects = input.subjects;
  m.times = input.times;
  m.domains = input.domains;
  m.particles = particle_paths(root / "particles", domains.rows(), domains.cols());
  write_cohort(result.world, *m.particles);
  write_cohort(result.local, particle_paths(root / "local", domains.rows(), domains.cols()));
  write_manifest(root / "manifest.json", m);
  out << "optimized " << domains.rows() << "x" << domains.cols() << " shapes to " << result.local.particles()
      << " particles (" << m.mode << ")\n";
  return exit_ok;
}

// ---------------------------------------------------------------- lds-fit

Sequences load_scaled(const std::string& manifest, UniformScaling& scaling) {
  const Cohort pdm = load_particles(read_manifest(manifest));
  const Sequences raw = to_sequences(pdm);
  scaling = UniformScaling::fit(raw);
  return scaling.apply(raw);
}

int cmd_lds(const RunConfig& c, std::ostream& out) {
  UniformScaling scaling;
  const Sequences data = load_scaled(c.lds.manifest, scaling);
  EmOptions options;
  options.latent_dim = c.lds.latent_dim;
  options.iterations = c.lds.iterations;
  options.init_seed = derive_seed(c.seed, "lds");
  EmResult fit;
  try {
    fit = em_fit(data, options);
  } catch (const std::exception& e) {
    throw StageFailure{exit_em, e.what()};
  }
  const fs::path root = c.out;
  fs::create_directories(root);
  write_params(root / "lds_params.json", fit.params, scaling);
  std::string csv = "iteration,loglik\n";
  for (std::size_t i = 0; i < fit.loglik_trace.size(); ++i)
    csv += std::to_string(i + 1) + "," + format_decimal(fit.loglik_trace[i]) + "\n";
  write_text(root / "loglik.csv", csv);
  json summary = {{"latent_dim", options.latent_dim},
                  {"iterations", options.iterations},
                  {"sequences", static_cast<int>(data.size())},
                  {"obs_dim", fit.params.obs_dim()},
                  {"length", fit.params.length()},
                  {"final_loglik", fit.loglik_trace.back()},
                  {"scaling", {{"offset", scaling.offset}, {"scale", scaling.scale}}}};
  write_text(root / "summary.json", summary.dump(2) + "\n");
  out << "fitted LDS (L=" << options.latent_dim << ") final log-likelihood " << format_decimal(fit.loglik_trace.back())
      << '\n';
  return exit_ok;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const RunConfig& c, std::ostream& out) {
  const EvalSection& e = c.eval;
  std::vector<Sequences> inputs;
  for (const auto& in : e.inputs) {
    UniformScaling scaling;
    inputs.push_back(load_scaled(in.manifest, scaling));
  }
  auto wants = [&](const char* m) { return std::find(e.metrics.begin(), e.metrics.end(), m) != e.metrics.end(); };
  EmOptions fit;
  fit.latent_dim = e.latent_dim;
  fit.iterations = e.iterations;
  const std::uint64_t seed = derive_seed(c.seed, "eval");
  std::vector<ApproachSummary> rows;
  try {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      ApproachSummary row;
      row.approach = e.inputs[i].approach;
      if (wants("full")) row.full = full_sequence_generalization(inputs[i], e.folds, fit, seed);
      if (wants("partial"))
        row.partial = partial_sequence_reconstruction(inputs[i], e.mask_fractions, e.trials, e.folds, fit, seed, e.score_full);
      if (wants("specificity")) {
        EmOptions all = fit;
        all.init_seed = derive_seed(seed, "specificity-fit");
        const EmResult model = em_fit(inputs[i], all);
        row.specificity = specificity(model.params, inputs[i], e.specificity_samples, derive_seed(seed, "specificity"));
      }
      rows.push_back(std::move(row));
    }
  } catch (const std::exception& ex) {
    throw StageFailure{exit_metric, ex.what()};
  }
  const fs::path root = c.out;
  fs::create_directories(root);
  write_metrics_csv(root / "metrics.csv", rows);
  write_summary_json(root / "summary.json", rows);
  for (const auto& row : rows) {
    out << row.approach;
    if (!row.full.empty()) out << "  full " << format_decimal(*row.full.back().overall_rmse);
    for (const auto& p : row.partial)
      out << "  partial@" << format_decimal(*p.mask_fraction) << ' '
          << (p.overall_rmse ? format_decimal(*p.overall_rmse) : std::string("null"));
    if (row.specificity) out << "  specificity " << format_decimal(*row.specificity->overall_rmse);
    out << '\n';
  }
  return exit_ok;
}

// ---------------------------------------------------------------- modes

int cmd_modes(const RunConfig& c, std::ostream& out) {
  const Cohort pdm = load_particles(read_manifest(c.modes.manifest));
  PcaModes modes;
  try {
    modes = modes_of_variation(pdm, c.modes.k);
  } catch (const std::exception& e) {
    throw StageFailure{exit_metric, e.what()};
  }
  const fs::path root = c.out;
  fs::create_directories(root);
  write_modes_csv(root / "modes_sweep.csv", root / "modes_eigen.csv", modes);
  out << "wrote " << modes.eigenvalues.size() << " modes\n";
  return exit_ok;
}

int dispatch(const Invocation& inv, std::ostream& out) {
  const RunConfig& c = inv.config;
  if (inv.command == "synth") return cmd_synth(c, out);
  if (inv.command == "optimize") return cmd_optimize(c, inv.resume, out);
  if (inv.command == "lds-fit") return cmd_lds(c, out);
  if (inv.command == "eval") return cmd_eval(c, out);
  return cmd_modes(c, out);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatiotemporal particle-based shape modeling"};
  app.require_subcommand(1);
  std::string config_path, input;
  std::vector<std::string> eval_inputs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  bool dry_run = false, resume = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker thread cap, 0 = hardware default");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_flag("--dry-run", dry_run, "Print the resolved configuration and exit");
  };
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic ellipsoid cohort");
  CLI::App* optimize_cmd = app.add_subcommand("optimize", "Optimize particle correspondences");
  CLI::App* lds = app.add_subcommand("lds-fit", "Fit a time-variant LDS to a PDM");
  CLI::App* eval = app.add_subcommand("eval", "Generalization, reconstruction and specificity metrics");
  CLI::App* modes = app.add_subcommand("modes", "PCA modes of variation");
  for (CLI::App* sub : {synth, optimize_cmd, lds, eval, modes}) add_common(sub);
  optimize_cmd->add_option("--input", input, "Cohort manifest");
  optimize_cmd->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");
  lds->add_option("--input", input, "PDM manifest");
  modes->add_option("--input", input, "PDM manifest");
  eval->add_option("--input", eval_inputs, "approach=manifest (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_config;
  }

  Invocation inv;
  for (CLI::App* sub : {synth, optimize_cmd, lds, eval, modes})
    if (sub->parsed()) inv.command = sub->get_name();
  inv.dry_run = dry_run;
  inv.resume = resume;

  try {
    RunConfig c;
    if (!config_path.empty()) c = load_config(config_path, c);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (out_dir) c.out = *out_dir;
    if (!input.empty()) {
      if (inv.command == "optimize") c.optimize.manifest = input;
      if (inv.command == "lds-fit") c.lds.manifest = input;
      if (inv.command == "modes") c.modes.manifest = input;
    }
    if (!eval_inputs.empty()) {
      c.eval.inputs.clear();
      for (const auto& spec : eval_inputs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--input", "expected approach=manifest, got '" + spec + "'");
        c.eval.inputs.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
      }
    }
    inv.config = with_derived_seeds(c);
    if (inv.dry_run) {
      json echo = config_to_json(inv.config);
      echo["command"] = inv.command;
      echo["derived_seeds"] = derived_seeds(inv.config);
      out << echo.dump(2) << '\n';
      return exit_ok;
    }
    validate_config(inv.config, inv.command);
    set_max_threads(inv.config.threads);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    return dispatch(inv, out);
  } catch (const StageFailure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const Error& e) {
    // Unreadable or inconsistent inputs.
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace stpsm
