#pragma once

#include "transformer.hpp"

namespace khop {

// Straight-line forward pass evaluated in float64, returning the masked mean
// cross entropy. Used as the finite-difference target in grad_check: the
// same architecture at higher precision, so central differences approximate
// the true gradient instead of float32 rounding noise. `perturb_index` (into
// the flattened named-tensor order) is adjusted by `perturb_delta` before
// evaluation; pass a negative index for no perturbation.
double reference_loss(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
                      std::int64_t perturb_index = -1, double perturb_delta = 0.0);

} // namespace khop
