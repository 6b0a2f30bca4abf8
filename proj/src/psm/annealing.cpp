#include "stpsm/psm/annealing.hpp"

#include <cmath>

#include "stpsm/core/errors.hpp"

namespace stpsm {

double anneal_alpha(const OptimizerConfig& config, int iteration, int total_iterations) {
  if (total_iterations <= 0 || iteration >= total_iterations) {
    if (iteration > total_iterations && total_iterations > 0)
      throw InvalidArgument("iteration " + std::to_string(iteration) + " beyond schedule length " +
                            std::to_string(total_iterations));
    return config.alpha_end;
  }
  if (iteration <= 0) return config.alpha_start;
  const double fraction = static_cast<double>(iteration) / total_iterations;
  if (config.alpha_schedule == AlphaSchedule::linear)
    return config.alpha_start + (config.alpha_end - config.alpha_start) * fraction;
  return config.alpha_start * std::pow(config.alpha_end / config.alpha_start, fraction);
}

}  // namespace stpsm
