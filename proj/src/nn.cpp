#include "pixcolor/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pixcolor/optim.hpp"

namespace pixcolor {

Tensor& ParameterSet::insert(const std::string& name, Tensor t) {
  if (contains(name)) throw std::logic_error("duplicate parameter name: " + name);
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor ParameterSet::add_weight(const std::string& name, const Shape& shape, Rng& rng) {
  return insert(name, truncated_normal_init(shape, kWeightInitStddev, rng, true));
}

Tensor ParameterSet::add_zeros(const std::string& name, const Shape& shape) {
  return insert(name, Tensor(shape, 0.0, true));
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  for (auto& e : entries_) out.push_back(e.first);
  return out;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  for (auto& e : entries_) out.push_back(e.second);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (auto& e : entries_) n += e.second.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParameterSet::fill_zero() {
  for (auto& e : entries_) {
    auto d = e.second.data();
    std::fill(d.begin(), d.end(), 0.0);
  }
}

ConvLayer::ConvLayer(ParameterSet& params, const std::string& name, const ConvSpec& s, Rng& rng)
    : spec(s) {
  spec.validate();
  weight = params.add_weight(name + "/w", spec.weight_shape(), rng);
  bias = params.add_zeros(name + "/b", {static_cast<std::size_t>(spec.out_channels)});
}

int scaled_channels(int base, double width_multiplier, int multiple) {
  if (!(width_multiplier > 0)) throw std::invalid_argument("width multiplier must be > 0");
  int c = static_cast<int>(std::lround(base * width_multiplier / multiple)) * multiple;
  return std::max(c, multiple);
}

}  // namespace pixcolor
