#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stpsm/cli/app.hpp"
#include "stpsm/cli/manifest.hpp"
#include "stpsm/core/point_set.hpp"
#include "stpsm/lds/kalman.hpp"
#include "stpsm/lds/params_io.hpp"

using namespace stpsm;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("stpsm_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& s) const { return path / s; }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "stpsm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

/// Relative path -> contents of every regular file under `root` whose extension is in `exts` (all when empty).
std::map<std::string, std::string> snapshot(const fs::path& root, const std::vector<std::string>& exts = {}) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (!exts.empty() && std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

int count_ext(const fs::path& dir, const std::string& ext) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ext) ++n;
  return n;
}

json small_synth(int n, int t, int points = 16) {
  return {{"synth", {{"n_subjects", n}, {"n_timepoints", t}, {"truth_points", points}}}};
}

json small_optimize(const std::string& mode, int particles = 16, int iterations = 10) {
  return {{"optimize",
           {{"mode", mode},
            {"target_particles", particles},
            {"iterations_per_split", iterations},
            {"alpha_end", 1.0},
            {"checkpoint_every", 0}}}};
}

void synth_into(const TempDir& dir, const fs::path& out, const json& config, std::uint64_t seed = 3) {
  const fs::path cfg = dir / (out.filename().string() + "_synth.json");
  write_json(cfg, config);
  const Outcome r = run({"synth", "--config", cfg.string(), "--seed", std::to_string(seed), "--out", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_CASE("synth writes one domain and one truth file per cell") {
  TempDir dir("synth_count");
  synth_into(dir, dir / "a", small_synth(2, 3));
  CHECK(count_ext(dir / "a" / "domains", ".domain") == 6);
  CHECK(count_ext(dir / "a" / "truth", ".particles") == 6);
  for (const auto& e : fs::directory_iterator(dir / "a" / "truth")) CHECK(count_lines(e.path()) == 16);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(fs::exists(dir / "a" / "synth_meta.json"));

  const Manifest m = read_manifest(dir / "a" / "manifest.json");
  CHECK(m.subjects.size() == 2);
  CHECK(m.times.size() == 3);
  REQUIRE(m.particles.has_value());
  CHECK(load_particles(m).particles() == 16);
}

TEST_CASE("synth reruns are byte-identical") {
  TempDir dir("synth_rerun");
  synth_into(dir, dir / "a", small_synth(2, 3));
  synth_into(dir, dir / "b", small_synth(2, 3));
  const auto a = snapshot(dir / "a");
  const auto b = snapshot(dir / "b");
  CHECK(a.size() == 2 + 6 + 6);
  CHECK(a == b);

  synth_into(dir, dir / "c", small_synth(2, 3), 4);
  CHECK(snapshot(dir / "c") != a);
}

TEST_CASE("config errors exit 2, name the key and write nothing") {
  TempDir dir("config_err");
  const fs::path cfg = dir / "bad.json";
  const fs::path out = dir / "never";

  write_json(cfg, {{"synth", {{"n_subjectz", 2}}}});
  Outcome r = run({"synth", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("synth.n_subjectz") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  write_json(cfg, {{"optimize", {{"sampling_kernel", {{"neighbours", 4}}}}}});
  r = run({"optimize", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("optimize.sampling_kernel.neighbours") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  write_json(cfg, {{"synth", {{"n_subjects", "two"}}}});
  r = run({"synth", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("synth.n_subjects") != std::string::npos);

  write_json(cfg, {{"synth", {{"n_subjects", 0}}}});
  r = run({"synth", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("synth.n_subjects") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  r = run({"optimize", "--input", (dir / "missing.json").string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("optimize.manifest") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  write_json(cfg, {{"optimize", {{"target_particles", 100}}}});
  r = run({"optimize", "--config", cfg.string(), "--input", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("optimize.target_particles") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  write_json(cfg, {{"optimize", {{"mode", "sideways"}}}});
  r = run({"optimize", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("optimize.mode") != std::string::npos);

  r = run({"eval", "--input", "no_equals_sign", "--out", out.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(out));

  std::ofstream(cfg) << "{ not json";
  r = run({"synth", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(out));

  r = run({"synth", "--no-such-flag"});
  CHECK(r.code == 2);
  r = run({});
  CHECK(r.code == 2);
}

TEST_CASE("dry run echoes the protocol defaults without writing") {
  TempDir dir("dry_run");
  const fs::path out = dir / "never";
  const Outcome r = run({"optimize", "--dry-run", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK_FALSE(fs::exists(out));
  const json echo = json::parse(r.out);
  CHECK(echo.at("command") == "optimize");
  CHECK(echo.at("optimize").at("target_particles") == 256);
  CHECK(echo.at("optimize").at("alpha_start").get<double>() == 100.0);
  CHECK(echo.at("optimize").at("alpha_end").get<double>() == 0.1);
  CHECK(echo.at("optimize").at("mode") == "spatiotemporal");
  CHECK(echo.at("lds").at("latent_dim") == 64);
  CHECK(echo.at("lds").at("iterations") == 50);
  CHECK(echo.at("eval").at("folds") == 5);
  CHECK(echo.at("eval").at("latent_dim") == 64);
  CHECK(echo.at("eval").at("iterations") == 50);
  CHECK(echo.at("eval").at("specificity_samples") == 100);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  TempDir dir("precedence");
  const fs::path cfg = dir / "c.json";
  write_json(cfg, {{"seed", 5}, {"out", "from_config"}, {"lds", {{"latent_dim", 3}}}, {"threads", 2}});
  Outcome r = run({"lds-fit", "--config", cfg.string(), "--dry-run"});
  REQUIRE(r.code == 0);
  json echo = json::parse(r.out);
  CHECK(echo.at("seed") == 5);
  CHECK(echo.at("out") == "from_config");
  CHECK(echo.at("threads") == 2);
  CHECK(echo.at("lds").at("latent_dim") == 3);
  CHECK(echo.at("lds").at("iterations") == 50);

  r = run({"lds-fit", "--config", cfg.string(), "--seed", "9", "--out", "from_flag", "--threads", "1", "--input", "m.json",
           "--dry-run"});
  REQUIRE(r.code == 0);
  echo = json::parse(r.out);
  CHECK(echo.at("seed") == 9);
  CHECK(echo.at("out") == "from_flag");
  CHECK(echo.at("threads") == 1);
  CHECK(echo.at("lds").at("manifest") == "m.json");
  CHECK(echo.at("derived_seeds").at("lds") != echo.at("derived_seeds").at("optimize"));

  r = run({"eval", "--input", "st=a.json", "--input", "cs=b.json", "--dry-run"});
  REQUIRE(r.code == 0);
  echo = json::parse(r.out);
  REQUIRE(echo.at("eval").at("inputs").size() == 2);
  CHECK(echo.at("eval").at("inputs")[1].at("approach") == "cs");
  CHECK(echo.at("eval").at("inputs")[1].at("manifest") == "b.json");
}

TEST_CASE("cross-sectional optimize on single-time data labels its mode") {
  TempDir dir("cs_t1");
  synth_into(dir, dir / "data", small_synth(3, 1));
  const fs::path cfg = dir / "opt.json";
  write_json(cfg, small_optimize("cross_sectional"));
  const Outcome r = run({"optimize", "--config", cfg.string(), "--input", (dir / "data" / "manifest.json").string(), "--out",
                         (dir / "pdm").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json summary = read_json(dir / "pdm" / "summary.json");
  CHECK(summary.at("mode") == "cross_sectional");
  CHECK(summary.at("finished") == true);
  CHECK(summary.at("timepoints") == 1);
  CHECK(summary.at("particles") == 16);
  CHECK(std::isfinite(summary.at("final").at("total").get<double>()));
  CHECK(read_json(dir / "pdm" / "manifest.json").at("mode") == "cross_sectional");
  CHECK(count_ext(dir / "pdm" / "particles", ".particles") == 3);
  CHECK(count_lines(dir / "pdm" / "trace.csv") == 1 + summary.at("iterations").get<int>());
}

TEST_CASE("optimize writes target_particles lines per file") {
  TempDir dir("m256");
  synth_into(dir, dir / "data", small_synth(2, 2));
  const fs::path cfg = dir / "opt.json";
  write_json(cfg, small_optimize("spatiotemporal", 256, 2));
  const Outcome r = run({"optimize", "--config", cfg.string(), "--input", (dir / "data" / "manifest.json").string(), "--out",
                         (dir / "pdm").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(count_ext(dir / "pdm" / "particles", ".particles") == 4);
  for (const auto& e : fs::directory_iterator(dir / "pdm" / "particles")) CHECK(count_lines(e.path()) == 256);
  for (const auto& e : fs::directory_iterator(dir / "pdm" / "local")) CHECK(count_lines(e.path()) == 256);
}

TEST_CASE("resumed optimize matches an uninterrupted run") {
  TempDir dir("resume");
  synth_into(dir, dir / "data", small_synth(3, 2));
  const std::string manifest = (dir / "data" / "manifest.json").string();
  const fs::path full_cfg = dir / "full.json";
  const fs::path halt_cfg = dir / "halt.json";
  json config = small_optimize("spatiotemporal", 16, 8);
  write_json(full_cfg, config);
  config["optimize"]["halt_after"] = 13;
  write_json(halt_cfg, config);

  Outcome r = run({"optimize", "--config", full_cfg.string(), "--input", manifest, "--seed", "7", "--out", (dir / "full").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  r = run({"optimize", "--config", halt_cfg.string(), "--input", manifest, "--seed", "7", "--out", (dir / "part").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("halted") != std::string::npos);
  CHECK(fs::exists(dir / "part" / "checkpoint.json"));
  CHECK_FALSE(fs::exists(dir / "part" / "particles"));
  CHECK(read_json(dir / "part" / "summary.json").at("finished") == false);

  // A different optimize config cannot pick up the checkpoint.
  const fs::path other_cfg = dir / "other.json";
  json other = small_optimize("spatiotemporal", 16, 8);
  other["optimize"]["step_size"] = 0.25;
  write_json(other_cfg, other);
  r = run({"optimize", "--config", other_cfg.string(), "--input", manifest, "--seed", "7", "--out", (dir / "part").string(),
           "--resume"});
  CHECK(r.code == 2);
  r = run({"optimize", "--config", full_cfg.string(), "--input", manifest, "--seed", "8", "--out", (dir / "part").string(),
           "--resume"});
  CHECK(r.code == 2);

  r = run({"optimize", "--config", full_cfg.string(), "--input", manifest, "--seed", "7", "--out", (dir / "part").string(),
           "--resume"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(snapshot(dir / "part" / "particles") == snapshot(dir / "full" / "particles"));
  CHECK(snapshot(dir / "part" / "local") == snapshot(dir / "full" / "local"));
  CHECK(slurp(dir / "part" / "trace.csv") == slurp(dir / "full" / "trace.csv"));

  r = run({"optimize", "--config", full_cfg.string(), "--input", manifest, "--out", (dir / "fresh").string(), "--resume"});
  CHECK(r.code == 2);
}

TEST_CASE("optimizer failure exits 3 and leaves a diagnostic dump") {
  TempDir dir("fail3");
  synth_into(dir, dir / "data", small_synth(3, 2));
  const std::string manifest = (dir / "data" / "manifest.json").string();
  const fs::path cfg = dir / "halt.json";
  json config = small_optimize("spatiotemporal", 16, 8);
  config["optimize"]["halt_after"] = 5;
  write_json(cfg, config);
  Outcome r = run({"optimize", "--config", cfg.string(), "--input", manifest, "--out", (dir / "pdm").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  // Same manifest path, different grid: the checkpoint no longer fits.
  synth_into(dir, dir / "data", small_synth(2, 2));
  r = run({"optimize", "--config", cfg.string(), "--input", manifest, "--out", (dir / "pdm").string(), "--resume"});
  CHECK(r.code == 3);
  CHECK(r.err.find("diagnostic dump") != std::string::npos);
  CHECK(fs::exists(dir / "pdm" / "diagnostic_state.json"));
}

TEST_CASE("lds-fit writes one loglik row per iteration and reloadable params") {
  TempDir dir("lds");
  synth_into(dir, dir / "data", small_synth(4, 3));
  const fs::path cfg = dir / "lds.json";
  write_json(cfg, {{"lds", {{"latent_dim", 2}, {"iterations", 7}}}});
  const std::string manifest = (dir / "data" / "manifest.json").string();
  const Outcome r = run({"lds-fit", "--config", cfg.string(), "--input", manifest, "--out", (dir / "fit").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(count_lines(dir / "fit" / "loglik.csv") == 1 + 7);

  const json summary = read_json(dir / "fit" / "summary.json");
  const double final_ll = summary.at("final_loglik").get<double>();
  const LdsModelFile model = read_params(dir / "fit" / "lds_params.json");
  REQUIRE(model.scaling.has_value());
  CHECK(model.params.latent_dim() == 2);
  const Sequences data = model.scaling->apply(to_sequences(load_particles(read_manifest(manifest))));
  CHECK(std::abs(log_likelihood(model.params, data) - final_ll) <= 1e-9);

  // The last CSV row carries the same value.
  std::ifstream in(dir / "fit" / "loglik.csv");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  CHECK(last.rfind("7,", 0) == 0);
  CHECK(std::abs(std::stod(last.substr(2)) - final_ll) <= 1e-9 * std::max(1.0, std::abs(final_ll)));
}

TEST_CASE("EM failure exits 4") {
  TempDir dir("fail4");
  synth_into(dir, dir / "data", small_synth(1, 3));
  const fs::path cfg = dir / "lds.json";
  write_json(cfg, {{"lds", {{"latent_dim", 2}, {"iterations", 3}}}});
  const Outcome r = run({"lds-fit", "--config", cfg.string(), "--input", (dir / "data" / "manifest.json").string(), "--out",
                         (dir / "fit").string()});
  CHECK(r.code == 4);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("metric failure exits 5") {
  TempDir dir("fail5");
  json config = small_synth(3, 2);
  config["synth"]["radii_stdev"] = {0.0, 0.0, 0.0};
  config["synth"]["amplitude"] = {0.0, 0.0, 0.0};
  synth_into(dir, dir / "data", config);
  const Outcome r = run({"modes", "--input", (dir / "data" / "manifest.json").string(), "--out", (dir / "modes").string()});
  CHECK(r.code == 5);
}

TEST_CASE("full pipeline: two-row comparison, modes, end-to-end determinism") {
  TempDir dir("pipeline");
  const fs::path cfg = dir / "pipeline.json";
  write_json(cfg, {{"synth", {{"n_subjects", 4}, {"n_timepoints", 3}, {"truth_points", 16}}},
                   {"optimize", {{"target_particles", 16}, {"iterations_per_split", 8}, {"alpha_end", 1.0}}},
                   {"lds", {{"latent_dim", 2}, {"iterations", 5}}},
                   {"eval",
                    {{"folds", 2},
                     {"latent_dim", 2},
                     {"iterations", 5},
                     {"trials", 2},
                     {"specificity_samples", 10}}},
                   {"modes", {{"k", 2}}}});

  auto pipeline = [&](const fs::path& root) {
    const std::string c = cfg.string();
    auto step = [&](std::vector<std::string> args) {
      args.insert(args.end(), {"--config", c, "--seed", "11"});
      const Outcome r = run(args);
      REQUIRE_MESSAGE(r.code == 0, r.err);
    };
    const std::string data = (root / "data" / "manifest.json").string();
    const std::string st = (root / "st" / "manifest.json").string();
    const std::string cs = (root / "cs" / "manifest.json").string();
    step({"synth", "--out", (root / "data").string()});
    step({"optimize", "--input", data, "--out", (root / "st").string()});
    const fs::path cs_cfg = root / "cs_mode.json";
    json j = read_json(cfg);
    j["optimize"]["mode"] = "cross_sectional";
    write_json(cs_cfg, j);
    const Outcome r = run({"optimize", "--config", cs_cfg.string(), "--seed", "11", "--input", data, "--out",
                           (root / "cs").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    step({"lds-fit", "--input", st, "--out", (root / "lds").string()});
    step({"eval", "--input", "spatiotemporal=" + st, "--input", "cross_sectional=" + cs, "--out", (root / "eval").string()});
    step({"modes", "--input", st, "--out", (root / "modes").string()});
  };

  pipeline(dir / "a");
  const json summary = read_json(dir / "a" / "eval" / "summary.json");
  REQUIRE(summary.at("rows").size() == 2);
  CHECK(summary.at("rows")[0].at("approach") == "spatiotemporal");
  CHECK(summary.at("rows")[1].at("approach") == "cross_sectional");
  for (const auto& row : summary.at("rows")) {
    CHECK(row.at("full_sequence").at("rmse").get<double>() > 0.0);
    CHECK(row.contains("partial_sequence"));
    CHECK(row.at("specificity").at("rmse").get<double>() > 0.0);
  }
  CHECK(read_json(dir / "a" / "cs" / "summary.json").at("mode") == "cross_sectional");
  CHECK(count_lines(dir / "a" / "modes" / "modes_eigen.csv") >= 3);
  CHECK(fs::exists(dir / "a" / "modes" / "modes_sweep.csv"));

  pipeline(dir / "b");
  const auto a = snapshot(dir / "a", {".csv", ".particles"});
  const auto b = snapshot(dir / "b", {".csv", ".particles"});
  CHECK(a.size() > 20);
  CHECK(a == b);
  CHECK(slurp(dir / "a" / "eval" / "summary.json") == slurp(dir / "b" / "eval" / "summary.json"));
  CHECK(slurp(dir / "a" / "lds" / "lds_params.json") == slurp(dir / "b" / "lds" / "lds_params.json"));
}
