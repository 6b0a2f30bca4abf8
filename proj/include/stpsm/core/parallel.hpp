#pragma once

#include <functional>

namespace stpsm {

/// Caps worker threads used by parallel_for. 0 restores the hardware default.
void set_max_threads(int threads);
int max_threads();

/// Runs body(i) for i in [0, count). Each index is processed exactly once; callers
/// write only to index-owned storage so results do not depend on scheduling.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace stpsm
