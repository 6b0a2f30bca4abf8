#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stpsm/core/grid.hpp"
#include "stpsm/core/point_set.hpp"
#include "stpsm/core/rigid_transform.hpp"
#include "stpsm/psm/optimizer_config.hpp"
#include "stpsm/surfaces/shape_domain.hpp"

namespace stpsm {

/// Everything needed to continue an interrupted run bit-for-bit.
struct OptimizerState {
  Cohort local;
  Grid2D<RigidTransform> transforms;
  /// Per-particle sampling bandwidths, fixed for the duration of a level.
  Grid2D<Eigen::VectorXd> bandwidths;
  int level = 0;
  int iteration_in_level = 0;
  int global_iteration = 0;
  double step = 0.0;
  int halvings = 0;
  bool level_started = false;
  bool finished = false;
  std::vector<ObjectiveBreakdown> trace;
};

nlohmann::json state_to_json(const OptimizerState& state);
OptimizerState state_from_json(const nlohmann::json& j);

struct RunControl {
  /// Checkpoint file written every `checkpoint_every` iterations (0 disables).
  std::optional<std::filesystem::path> checkpoint_path;
  int checkpoint_every = 0;
  /// Stop (unfinished) after this many iterations in this call; 0 runs to completion.
  int halt_after = 0;
  std::optional<OptimizerState> resume;
  std::function<void(const ObjectiveBreakdown&)> on_iteration;
  /// Called with the last consistent state before an exception leaves optimize().
  std::function<void(const OptimizerState&)> on_failure;
};

struct OptimizeResult {
  /// Particles in each domain's own coordinates.
  Cohort local;
  /// Procrustes-aligned particles.
  Cohort world;
  Grid2D<RigidTransform> transforms;
  std::vector<ObjectiveBreakdown> trace;
  OptimizerState state;
  bool finished = false;
};

/// Evaluates the objective for the given particles, transforms and weight. Without
/// bandwidths the sampling term uses each particle's adaptive bandwidth.
ObjectiveBreakdown evaluate_objective(const Cohort& local, const Grid2D<RigidTransform>& transforms,
                                      const OptimizerConfig& config, double alpha,
                                      const Grid2D<Eigen::VectorXd>* bandwidths = nullptr);

/// Adaptive bandwidths of every particle in every cell.
Grid2D<Eigen::VectorXd> level_bandwidths(const Cohort& local, const SamplingKernel& kernel);

/// Gradient-descent particle optimization. In spatiotemporal mode every cell is optimized
/// against its timepoint and subject ensembles; in cross-sectional mode only t = 1 is
/// optimized against the t = 1 ensemble and later frames are filled by propagate_particles.
OptimizeResult optimize(const DomainGrid& domains, const OptimizerConfig& config, const RunControl& control = {});

/// Index-tracked propagation: frame t is frame t-1 projected onto domain (n, t).
Cohort propagate_particles(const DomainGrid& domains, const Cohort& first_frame, int projection_steps = 100);

/// Number of iterations over which alpha is annealed (the final level runs at alpha_end).
int annealing_iterations(const OptimizerConfig& config);

}  // namespace stpsm
