#pragma once

#include <cstdint>
#include <string>

namespace stpsm {

/// Adaptive Gaussian Parzen kernel used by the sampling term.
struct SamplingKernel {
  int neighbors = 6;
  double sigma_min = 1e-8;
  double sigma_max = 1e8;
  /// Dimension of the density normalization; particles live on 2-D surfaces.
  int intrinsic_dim = 2;
};

enum class OptimizationMode { cross_sectional, spatiotemporal };
enum class AlphaSchedule { geometric, linear };

std::string to_string(OptimizationMode mode);
std::string to_string(AlphaSchedule schedule);
OptimizationMode parse_mode(const std::string& text);
AlphaSchedule parse_schedule(const std::string& text);

struct OptimizerConfig {
  double alpha_start = 100.0;
  double alpha_end = 0.1;
  AlphaSchedule alpha_schedule = AlphaSchedule::geometric;
  int iterations_per_split = 100;
  int target_particles = 256;
  double step_size = 0.5;
  double step_decay = 1.0;
  SamplingKernel sampling_kernel;
  /// Realign every this many iterations, and always at the start of a level.
  int procrustes_cadence = 32;
  OptimizationMode mode = OptimizationMode::spatiotemporal;
  std::uint64_t rng_seed = 0;
  /// Split offset as a fraction of the median domain diagonal.
  double split_offset = 0.02;
  /// Step halvings allowed per level.
  int max_halvings = 5;
  int projection_steps = 100;

  /// Throws InvalidArgument.
  void validate() const;
};

struct ObjectiveBreakdown {
  double total = 0.0;
  double inter_subject_entropy_sum = 0.0;
  double intra_subject_entropy_sum = 0.0;
  double sampling_entropy_sum = 0.0;
  double alpha = 0.0;
  int iteration = 0;
  int particles = 0;
  double step = 0.0;
  bool step_halved = false;
};

}  // namespace stpsm
