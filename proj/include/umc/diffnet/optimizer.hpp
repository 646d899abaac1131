#pragma once

#include <cstdint>
#include <vector>

#include "umc/diffnet/autoencoder.hpp"

namespace umc::diffnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  OptimizerState() = default;
  OptimizerState(AdamConfig cfg, const AutoencoderBundle& bundle);
};

/// One bias-corrected adaptive-moment update of every bundle parameter.
/// Throws NumericError on non-finite gradients and ShapeError on mismatch;
/// nothing is modified in either case.
void step(OptimizerState& opt, AutoencoderBundle& bundle, const GradientSet& grads);

}  // namespace umc::diffnet
