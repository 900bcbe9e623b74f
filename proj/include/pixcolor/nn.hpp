#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pixcolor/ops.hpp"
#include "pixcolor/rng.hpp"
#include "pixcolor/tensor.hpp"

namespace pixcolor {

inline constexpr double kWeightInitStddev = 0.1;

/// Ordered name -> parameter registry shared by the networks of one model.
class ParameterSet {
 public:
  /// Weight init: truncated normal, stddev kWeightInitStddev.
  Tensor add_weight(const std::string& name, const Shape& shape, Rng& rng);
  Tensor add_zeros(const std::string& name, const Shape& shape);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<std::string> names() const;
  std::vector<Tensor> tensors() const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Sets every parameter value to 0.
  void fill_zero();

 private:
  Tensor& insert(const std::string& name, Tensor t);
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Convolution with its own weight/bias parameters.
struct ConvLayer {
  ConvSpec spec;
  Tensor weight;
  Tensor bias;

  ConvLayer() = default;
  ConvLayer(ParameterSet& params, const std::string& name, const ConvSpec& spec, Rng& rng);
  Tensor operator()(const Tensor& x) const { return conv2d(x, spec, weight, bias); }
};

inline ConvSpec conv_spec(int kernel, int stride, int in, int out) {
  ConvSpec s;
  s.kernel_h = s.kernel_w = kernel;
  s.stride = stride;
  s.in_channels = in;
  s.out_channels = out;
  return s;
}

/// Channel count scaled by a width multiplier, rounded to a positive multiple
/// of `multiple`.
int scaled_channels(int base, double width_multiplier, int multiple = 1);

}  // namespace pixcolor
