#include "stpsm/psm/optimizer_config.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"
#include "stpsm/psm/splitting.hpp"

namespace stpsm {

std::string to_string(OptimizationMode mode) {
  return mode == OptimizationMode::cross_sectional ? "cross_sectional" : "spatiotemporal";
}

std::string to_string(AlphaSchedule schedule) { return schedule == AlphaSchedule::linear ? "linear" : "geometric"; }

OptimizationMode parse_mode(const std::string& text) {
  if (text == "cross_sectional") return OptimizationMode::cross_sectional;
  if (text == "spatiotemporal") return OptimizationMode::spatiotemporal;
  throw InvalidArgument("unknown optimization mode '" + text + "'");
}

AlphaSchedule parse_schedule(const std::string& text) {
  if (text == "geometric") return AlphaSchedule::geometric;
  if (text == "linear") return AlphaSchedule::linear;
  throw InvalidArgument("unknown alpha schedule '" + text + "'");
}

void OptimizerConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(alpha_start)) throw InvalidArgument("alpha_start must be positive");
  if (!positive(alpha_end)) throw InvalidArgument("alpha_end must be positive");
  if (alpha_start < alpha_end) throw InvalidArgument("alpha_start must not be below alpha_end");
  if (iterations_per_split < 1) throw InvalidArgument("iterations_per_split must be at least 1");
  if (!is_power_of_two(target_particles)) throw InvalidArgument("target_particles must be a power of two");
  if (!positive(step_size)) throw InvalidArgument("step_size must be positive");
  if (!positive(step_decay) || step_decay > 1.0) throw InvalidArgument("step_decay must lie in (0, 1]");
  if (sampling_kernel.neighbors < 1) throw InvalidArgument("sampling_kernel.neighbors must be at least 1");
  if (!positive(sampling_kernel.sigma_min) || !(sampling_kernel.sigma_max >= sampling_kernel.sigma_min))
    throw InvalidArgument("sampling_kernel sigma bounds must satisfy 0 < sigma_min <= sigma_max");
  if (sampling_kernel.intrinsic_dim < 1) throw InvalidArgument("sampling_kernel.intrinsic_dim must be at least 1");
  if (procrustes_cadence < 0) throw InvalidArgument("procrustes_cadence must be non-negative");
  if (!positive(split_offset)) throw InvalidArgument("split_offset must be positive");
  if (max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
  if (projection_steps < 1) throw InvalidArgument("projection_steps must be at least 1");
}

}  // namespace stpsm
