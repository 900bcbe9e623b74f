#include "pixcolor/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace pixcolor {

Tensor truncated_normal_init(const Shape& shape, double stddev, Rng& rng,
                             bool requires_grad) {
  if (!(stddev > 0)) throw std::invalid_argument("truncated_normal_init: stddev must be > 0");
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) {
    double z;
    do {
      z = rng.normal();
    } while (std::abs(z) > 2.0);
    v = z * stddev;
  }
  return Tensor::from_values(shape, std::move(values), requires_grad);
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (auto& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " +
                                std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad()) {
      throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " has no grad");
    }
    if (state.first_moment[i].size() != params[i].numel()) {
      throw ShapeError("adam_step: moment size mismatch for parameter " + std::to_string(i));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].data();
    auto grad = std::as_const(params[i]).grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      value[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace pixcolor
