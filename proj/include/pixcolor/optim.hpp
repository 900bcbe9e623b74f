#pragma once

#include <cstdint>
#include <vector>

#include "pixcolor/rng.hpp"
#include "pixcolor/tensor.hpp"

namespace pixcolor {

/// Draws from N(0, stddev^2), redrawing anything outside +/- 2 stddev.
Tensor truncated_normal_init(const Shape& shape, double stddev, Rng& rng,
                             bool requires_grad = true);

struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected Adam update applied in place to every parameter.
/// Moments are allocated on first use and must keep matching the parameter
/// shapes afterwards.
void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace pixcolor
