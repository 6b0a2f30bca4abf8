#include "stpsm/psm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "stpsm/core/ensemble.hpp"
#include "stpsm/core/errors.hpp"
#include "stpsm/core/parallel.hpp"
#include "stpsm/core/procrustes.hpp"
#include "stpsm/core/seeds.hpp"
#include "stpsm/psm/annealing.hpp"
#include "stpsm/psm/entropy.hpp"
#include "stpsm/psm/sampling.hpp"
#include "stpsm/psm/splitting.hpp"
#include "stpsm/surfaces/projection.hpp"

namespace stpsm {

namespace {

using json = nlohmann::json;

int level_count(const OptimizerConfig& config) {
  int levels = 1;
  for (int m = 1; m < config.target_particles; m *= 2) ++levels;
  return levels;
}

Grid2D<RigidTransform> identity_transforms(int rows, int cols) {
  return Grid2D<RigidTransform>(rows, cols, RigidTransform::identity(3));
}

/// Procrustes needs enough points to fix a rotation; below that the identity is used.
Grid2D<RigidTransform> alignment(const Cohort& local) {
  if (local.particles() < 4) return identity_transforms(local.subjects(), local.timepoints());
  return procrustes_align(local).transforms;
}

Cohort to_world(const Cohort& local, const Grid2D<RigidTransform>& transforms) {
  Cohort world = local;
  for (int n = 0; n < local.subjects(); ++n)
    for (int t = 0; t < local.timepoints(); ++t) world.at(n, t) = apply_transform(transforms(n, t), local.at(n, t));
  return world;
}

Eigen::MatrixXd flattened_columns(const Cohort& world, EnsembleAxis axis, int index) {
  const bool inter = axis == EnsembleAxis::inter_subject;
  const int k = inter ? world.subjects() : world.timepoints();
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(world.particles()) * world.dim(), k);
  for (int j = 0; j < k; ++j) cols.col(j) = (inter ? world.at(j, index) : world.at(index, j)).flatten();
  return cols;
}

bool uses_intra(const OptimizerConfig& config) { return config.mode == OptimizationMode::spatiotemporal; }

/// Sum over every ensemble member of dH/dX, in each cell's local frame, weighted by -alpha.
Grid2D<Eigen::MatrixXd> correspondence_updates(const Cohort& local, const Grid2D<RigidTransform>& transforms,
                                               const OptimizerConfig& config, double alpha) {
  const int n_count = local.subjects(), t_count = local.timepoints(), m_count = local.particles();
  const Cohort world = to_world(local, transforms);
  Grid2D<Eigen::MatrixXd> world_grad(n_count, t_count, Eigen::MatrixXd::Zero(3 * m_count, 1));
  std::vector<Eigen::MatrixXd> inter(t_count), intra(uses_intra(config) ? n_count : 0);
  parallel_for(t_count, [&](int t) {
    inter[t] = correspondence_gradient(make_ensemble(flattened_columns(world, EnsembleAxis::inter_subject, t),
                                                     EnsembleAxis::inter_subject),
                                       alpha);
  });
  parallel_for(static_cast<int>(intra.size()), [&](int n) {
    intra[n] = correspondence_gradient(make_ensemble(flattened_columns(world, EnsembleAxis::intra_subject, n),
                                                     EnsembleAxis::intra_subject),
                                       alpha);
  });
  Grid2D<Eigen::MatrixXd> out(n_count, t_count);
  for (int n = 0; n < n_count; ++n) {
    for (int t = 0; t < t_count; ++t) {
      Eigen::VectorXd g = inter[t].col(n);
      if (!intra.empty()) g += intra[n].col(t);
      const Eigen::MatrixXd g_world = PointSet::unflatten(g, 3).points;
      // Row vectors: (R^T g)^T = g^T R.
      out(n, t) = -alpha * g_world * transforms(n, t).rotation;
    }
  }
  return out;
}

Cohort sweep(const Cohort& local, const DomainGrid& domains, const Grid2D<Eigen::MatrixXd>& corr,
             const Grid2D<Eigen::VectorXd>& bandwidths, const OptimizerConfig& config, double step) {
  Cohort next = local;
  const int cols = local.timepoints();
  parallel_for(local.subjects() * cols, [&](int cell) {
    const int n = cell / cols, t = cell % cols;
    const ShapeDomain& domain = domains(n, t);
    const double max_move = 0.1 * domain.diagonal();
    Eigen::MatrixXd& pts = next.at(n, t).points;
    const Eigen::VectorXd& sigma = bandwidths(n, t);
    // Gauss-Seidel: later particles see earlier particles' new positions.
    for (int m = 0; m < pts.rows(); ++m) {
      const Eigen::Vector3d p = pts.row(m).transpose();
      Eigen::Vector3d dir = corr(n, t).row(m).transpose() + sampling_update(pts, m, config.sampling_kernel, sigma(m));
      const Eigen::Vector3d normal = surface_normal(domain, p);
      dir -= normal * normal.dot(dir);
      Eigen::Vector3d delta = step * dir;
      const double len = delta.norm();
      if (len > max_move) delta *= max_move / len;
      pts.row(m) = project_to_surface(domain, p + delta, config.projection_steps).transpose();
    }
  });
  return next;
}

json cohort_to_json(const Cohort& c) {
  json cells = json::array();
  for (int n = 0; n < c.subjects(); ++n) {
    for (int t = 0; t < c.timepoints(); ++t) {
      const Eigen::MatrixXd& p = c.at(n, t).points;
      cells.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    }
  }
  return {{"subjects", c.subjects()}, {"timepoints", c.timepoints()}, {"particles", c.particles()}, {"cells", cells}};
}

Cohort cohort_from_json(const json& j) {
  const int n_count = j.at("subjects"), t_count = j.at("timepoints"), m_count = j.at("particles");
  Cohort c(n_count, t_count);
  const json& cells = j.at("cells");
  if (static_cast<int>(cells.size()) != n_count * t_count) throw DimensionMismatch("checkpoint cell count mismatch");
  for (int n = 0; n < n_count; ++n) {
    for (int t = 0; t < t_count; ++t) {
      const auto values = cells[n * t_count + t].get<std::vector<double>>();
      if (static_cast<int>(values.size()) != 3 * m_count) throw DimensionMismatch("checkpoint cell size mismatch");
      c.at(n, t).points = Eigen::Map<const Eigen::MatrixXd>(values.data(), m_count, 3);
      c.at(n, t).domain_id = n * t_count + t;
    }
  }
  return c;
}

json bandwidths_to_json(const Grid2D<Eigen::VectorXd>& g) {
  json cells = json::array();
  for (const auto& v : g.cells()) cells.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"cells", cells}};
}

Grid2D<Eigen::VectorXd> bandwidths_from_json(const json& j) {
  Grid2D<Eigen::VectorXd> g(j.at("rows"), j.at("cols"));
  const json& cells = j.at("cells");
  if (cells.size() != g.cells().size()) throw DimensionMismatch("checkpoint bandwidth count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto v = cells[i].get<std::vector<double>>();
    g.cells()[i] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return g;
}

json transforms_to_json(const Grid2D<RigidTransform>& g) {
  json cells = json::array();
  for (const RigidTransform& tr : g.cells()) {
    cells.push_back({{"rotation", std::vector<double>(tr.rotation.data(), tr.rotation.data() + 9)},
                     {"translation", std::vector<double>(tr.translation.data(), tr.translation.data() + 3)}});
  }
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"cells", cells}};
}

Grid2D<RigidTransform> transforms_from_json(const json& j) {
  Grid2D<RigidTransform> g(j.at("rows").get<int>(), j.at("cols").get<int>());
  const json& cells = j.at("cells");
  if (cells.size() != g.cells().size()) throw DimensionMismatch("checkpoint transform count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto r = cells[i].at("rotation").get<std::vector<double>>();
    const auto t = cells[i].at("translation").get<std::vector<double>>();
    if (r.size() != 9 || t.size() != 3) throw DimensionMismatch("checkpoint transform has wrong size");
    g.cells()[i] = RigidTransform(Eigen::Map<const Eigen::Matrix3d>(r.data()), Eigen::Map<const Eigen::Vector3d>(t.data()));
  }
  return g;
}

json breakdown_to_json(const ObjectiveBreakdown& b) {
  return {{"total", b.total},
          {"inter_subject_entropy_sum", b.inter_subject_entropy_sum},
          {"intra_subject_entropy_sum", b.intra_subject_entropy_sum},
          {"sampling_entropy_sum", b.sampling_entropy_sum},
          {"alpha", b.alpha},
          {"iteration", b.iteration},
          {"particles", b.particles},
          {"step", b.step},
          {"step_halved", b.step_halved}};
}

ObjectiveBreakdown breakdown_from_json(const json& j) {
  ObjectiveBreakdown b;
  b.total = j.at("total");
  b.inter_subject_entropy_sum = j.at("inter_subject_entropy_sum");
  b.intra_subject_entropy_sum = j.at("intra_subject_entropy_sum");
  b.sampling_entropy_sum = j.at("sampling_entropy_sum");
  b.alpha = j.at("alpha");
  b.iteration = j.at("iteration");
  b.particles = j.at("particles");
  b.step = j.at("step");
  b.step_halved = j.at("step_halved");
  return b;
}

void write_checkpoint(const std::filesystem::path& path, const OptimizerState& state) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out << state_to_json(state).dump();
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DomainGrid working_domains(const DomainGrid& domains, const OptimizerConfig& config) {
  if (config.mode == OptimizationMode::spatiotemporal) return domains;
  DomainGrid first(domains.rows(), 1);
  for (int n = 0; n < domains.rows(); ++n) first(n, 0) = domains(n, 0);
  return first;
}

OptimizerState initial_state(const DomainGrid& domains, const OptimizerConfig& config) {
  OptimizerState state;
  state.local = Cohort(domains.rows(), domains.cols());
  for (int n = 0; n < domains.rows(); ++n) {
    for (int t = 0; t < domains.cols(); ++t) {
      const ShapeDomain& d = domains(n, t);
      Eigen::MatrixXd p(1, 3);
      p.row(0) = project_to_surface(d, d.centroid(), config.projection_steps).transpose();
      state.local.at(n, t) = PointSet(p, n * domains.cols() + t);
    }
  }
  state.transforms = identity_transforms(domains.rows(), domains.cols());
  state.step = config.step_size;
  return state;
}

double median_diagonal(const DomainGrid& domains) {
  std::vector<double> diags;
  for (const ShapeDomain& d : domains.cells()) diags.push_back(d.diagonal());
  std::nth_element(diags.begin(), diags.begin() + diags.size() / 2, diags.end());
  return diags[diags.size() / 2];
}

}  // namespace

nlohmann::json state_to_json(const OptimizerState& state) {
  json trace = json::array();
  for (const auto& b : state.trace) trace.push_back(breakdown_to_json(b));
  return {{"format", "stpsm-optimizer-state"},
          {"version", 1},
          {"local", cohort_to_json(state.local)},
          {"transforms", transforms_to_json(state.transforms)},
          {"bandwidths", bandwidths_to_json(state.bandwidths)},
          {"level", state.level},
          {"iteration_in_level", state.iteration_in_level},
          {"global_iteration", state.global_iteration},
          {"step", state.step},
          {"halvings", state.halvings},
          {"level_started", state.level_started},
          {"finished", state.finished},
          {"trace", trace}};
}

OptimizerState state_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "stpsm-optimizer-state") throw IoError("not an optimizer checkpoint");
    OptimizerState s;
    s.local = cohort_from_json(j.at("local"));
    s.transforms = transforms_from_json(j.at("transforms"));
    s.bandwidths = bandwidths_from_json(j.at("bandwidths"));
    s.level = j.at("level");
    s.iteration_in_level = j.at("iteration_in_level");
    s.global_iteration = j.at("global_iteration");
    s.step = j.at("step");
    s.halvings = j.at("halvings");
    s.level_started = j.at("level_started");
    s.finished = j.at("finished");
    for (const auto& b : j.at("trace")) s.trace.push_back(breakdown_from_json(b));
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed optimizer checkpoint: ") + e.what());
  }
}

int annealing_iterations(const OptimizerConfig& config) {
  const int levels = level_count(config);
  return levels > 1 ? (levels - 1) * config.iterations_per_split : config.iterations_per_split;
}

Grid2D<Eigen::VectorXd> level_bandwidths(const Cohort& local, const SamplingKernel& kernel) {
  Grid2D<Eigen::VectorXd> out(local.subjects(), local.timepoints());
  parallel_for(static_cast<int>(out.size()), [&](int i) {
    out.cells()[i] = adaptive_bandwidths(local.shapes.cells()[i].points, kernel);
  });
  return out;
}

ObjectiveBreakdown evaluate_objective(const Cohort& local, const Grid2D<RigidTransform>& transforms,
                                      const OptimizerConfig& config, double alpha,
                                      const Grid2D<Eigen::VectorXd>* bandwidths) {
  const Cohort world = to_world(local, transforms);
  ObjectiveBreakdown b;
  b.alpha = alpha;
  b.particles = local.particles();
  for (int t = 0; t < world.timepoints(); ++t)
    b.inter_subject_entropy_sum += shape_entropy(
        make_ensemble(flattened_columns(world, EnsembleAxis::inter_subject, t), EnsembleAxis::inter_subject), alpha);
  if (uses_intra(config)) {
    for (int n = 0; n < world.subjects(); ++n)
      b.intra_subject_entropy_sum += shape_entropy(
          make_ensemble(flattened_columns(world, EnsembleAxis::intra_subject, n), EnsembleAxis::intra_subject), alpha);
  }
  std::vector<double> sampling(local.shapes.cells().size());
  parallel_for(static_cast<int>(sampling.size()), [&](int i) {
    sampling[i] = sampling_entropy(local.shapes.cells()[i].points, config.sampling_kernel,
                                   bandwidths ? bandwidths->cells()[i] : Eigen::VectorXd());
  });
  b.sampling_entropy_sum = std::accumulate(sampling.begin(), sampling.end(), 0.0);
  b.total = alpha * (b.inter_subject_entropy_sum + b.intra_subject_entropy_sum) - b.sampling_entropy_sum;
  if (!std::isfinite(b.total)) throw NonFiniteObjective("objective is not finite");
  return b;
}

Cohort propagate_particles(const DomainGrid& domains, const Cohort& first_frame, int projection_steps) {
  if (first_frame.timepoints() < 1 || first_frame.subjects() != domains.rows())
    throw DimensionMismatch("first frame does not match the domain grid");
  Cohort out(domains.rows(), domains.cols());
  for (int n = 0; n < domains.rows(); ++n) {
    out.at(n, 0) = first_frame.at(n, 0);
    out.at(n, 0).domain_id = n * domains.cols();
    for (int t = 1; t < domains.cols(); ++t) {
      const Eigen::MatrixXd& prev = out.at(n, t - 1).points;
      Eigen::MatrixXd next(prev.rows(), 3);
      for (Eigen::Index m = 0; m < prev.rows(); ++m)
        next.row(m) = project_to_surface(domains(n, t), prev.row(m).transpose(), projection_steps).transpose();
      out.at(n, t) = PointSet(std::move(next), n * domains.cols() + t);
    }
  }
  return out;
}

OptimizeResult optimize(const DomainGrid& domains, const OptimizerConfig& config, const RunControl& control) {
  config.validate();
  if (domains.rows() < 1 || domains.cols() < 1) throw InvalidArgument("empty domain grid");
  const DomainGrid work = working_domains(domains, config);
  const int levels = level_count(config);
  const int anneal_total = annealing_iterations(config);
  const double split_scale = config.split_offset * median_diagonal(work);

  OptimizerState state = control.resume ? *control.resume : initial_state(work, config);

  int performed = 0;
  bool halted = false;
  try {
    if (state.local.subjects() != work.rows() || state.local.timepoints() != work.cols())
      throw DimensionMismatch("resumed state does not match the domain grid");
    while (!state.finished) {
      if (!state.level_started) {
        state.transforms = alignment(state.local);
        state.bandwidths = level_bandwidths(state.local, config.sampling_kernel);
        state.level_started = true;
        state.iteration_in_level = 0;
        state.step = config.step_size;
        state.halvings = 0;
      }
      while (state.iteration_in_level < config.iterations_per_split) {
        if (control.halt_after > 0 && performed >= control.halt_after) {
          halted = true;
          break;
        }
        const double alpha = anneal_alpha(config, std::min(state.global_iteration, anneal_total), anneal_total);
        ObjectiveBreakdown before = evaluate_objective(state.local, state.transforms, config, alpha, &state.bandwidths);
        if (config.procrustes_cadence > 0 && state.iteration_in_level > 0 &&
            state.global_iteration % config.procrustes_cadence == 0 && state.local.particles() >= 4) {
          Grid2D<RigidTransform> candidate = alignment(state.local);
          const ObjectiveBreakdown realigned = evaluate_objective(state.local, candidate, config, alpha, &state.bandwidths);
          if (realigned.total <= before.total) {
            state.transforms = std::move(candidate);
            before = realigned;
          }
        }
        const Grid2D<Eigen::MatrixXd> corr = correspondence_updates(state.local, state.transforms, config, alpha);
        Cohort moved = sweep(state.local, work, corr, state.bandwidths, config, state.step);
        ObjectiveBreakdown after = evaluate_objective(moved, state.transforms, config, alpha, &state.bandwidths);
        after.step = state.step;
        if (after.total > before.total) {
          if (state.halvings < config.max_halvings) {
            state.step *= 0.5;
            ++state.halvings;
            after.step_halved = true;
            state.local = std::move(moved);
          } else {
            after = before;
            after.step = state.step;
          }
        } else {
          state.local = std::move(moved);
        }
        after.iteration = state.global_iteration;
        state.trace.push_back(after);
        if (control.on_iteration) control.on_iteration(after);
        state.step *= config.step_decay;
        ++state.iteration_in_level;
        ++state.global_iteration;
        ++performed;
        if (control.checkpoint_path && control.checkpoint_every > 0 && state.global_iteration % control.checkpoint_every == 0)
          write_checkpoint(*control.checkpoint_path, state);
      }
      if (halted) break;
      if (state.level + 1 < levels) {
        state.local = split_particles(state.local, work, split_scale, derive_seed(config.rng_seed, static_cast<std::uint64_t>(state.level)),
                                      config.projection_steps);
      } else {
        state.finished = true;
      }
      ++state.level;
      state.level_started = false;
    }
  } catch (...) {
    if (control.on_failure) control.on_failure(state);
    throw;
  }

  OptimizeResult result;
  result.finished = state.finished;
  result.trace = state.trace;
  if (state.finished) {
    result.local = config.mode == OptimizationMode::cross_sectional
                       ? propagate_particles(domains, state.local, config.projection_steps)
                       : state.local;
    result.transforms = alignment(result.local);
    result.world = to_world(result.local, result.transforms);
  } else {
    result.local = state.local;
    result.transforms = state.transforms;
    result.world = to_world(state.local, state.transforms);
  }
  if (control.checkpoint_path && (halted || state.finished)) write_checkpoint(*control.checkpoint_path, state);
  result.state = std::move(state);
  return result;
}

}  // namespace stpsm
