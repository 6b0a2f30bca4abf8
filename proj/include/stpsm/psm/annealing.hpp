#pragma once

#include "stpsm/psm/optimizer_config.hpp"

namespace stpsm {

/// Weight schedule from alpha_start at iteration 0 to alpha_end at total_iterations.
/// Geometric: alpha_start * (alpha_end / alpha_start)^(i / total).
double anneal_alpha(const OptimizerConfig& config, int iteration, int total_iterations);

}  // namespace stpsm
