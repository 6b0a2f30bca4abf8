#pragma once

#include <cstdint>

#include "stpsm/lds/params.hpp"

namespace stpsm {

/// x_hat_{n,t} = W_t E[s_{n,t} | observed data], masked frames included.
Sequences reconstruct(const LdsParams& params, const Sequences& obs, const ObservationMask* mask = nullptr);

/// Ancestral sampling of whole sequences. Deterministic given the seed.
Sequences sample(const LdsParams& params, int n_sequences, std::uint64_t seed);

}  // namespace stpsm
