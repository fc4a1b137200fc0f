#include "ramdepth/nn.hpp"

#include <algorithm>
#include <cmath>

namespace ramdepth::inline RAMDEPTH_PRECISION {

Tensor ParameterStore::add(const std::string& name, Tensor value) {
  if (params_.count(name)) throw ShapeError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  params_.emplace(name, value);
  return value;
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

std::int64_t ParameterStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) {
    Tensor p = t;
    p.mutable_grad();
    p.zero_grad();
  }
}

void ParameterStore::fill(real value) {
  for (auto& [name, t] : params_) {
    Tensor p = t;
    auto d = p.mutable_data();
    std::fill(d.begin(), d.end(), value);
  }
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) throw ShapeError("parameter stores differ in size");
  for (auto& [name, t] : params_) {
    const Tensor src = other.get(name);
    if (src.shape() != t.shape()) throw ShapeError("parameter '" + name + "' shape mismatch");
    Tensor dst = t;
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
}

bool ParameterStore::values_equal(const ParameterStore& other) const {
  if (other.params_.size() != params_.size()) return false;
  for (const auto& [name, t] : params_) {
    if (!other.contains(name)) return false;
    const Tensor o = other.get(name);
    if (o.shape() != t.shape()) return false;
    if (!std::equal(t.data().begin(), t.data().end(), o.data().begin())) return false;
  }
  return true;
}

Tensor init_normal(Shape shape, std::int64_t fan_in, real gain, Rng& rng) {
  std::normal_distribution<double> dist(0.0, static_cast<double>(gain) / std::sqrt(static_cast<double>(fan_in)));
  std::vector<real> values(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : values) v = static_cast<real>(dist(rng));
  return Tensor::from_data(std::move(shape), std::move(values));
}

Conv2d::Conv2d(ParameterStore& store, const std::string& name, std::int64_t in_channels,
               std::int64_t out_channels, IntPair kernel, Rng& rng, IntPair stride, real gain)
    : stride_(stride), padding_{kernel[0] / 2, kernel[1] / 2} {
  const std::int64_t fan_in = in_channels * kernel[0] * kernel[1];
  weight_ = store.add(name + ".weight", init_normal({out_channels, in_channels, kernel[0], kernel[1]},
                                                    fan_in, gain, rng));
  bias_ = store.add(name + ".bias", Tensor::zeros({out_channels}));
}

Tensor Conv2d::operator()(const Tensor& x) const { return conv2d(x, weight_, bias_, stride_, padding_); }

int default_groups(std::int64_t channels) {
  for (int g = 8; g > 1; --g) {
    if (channels % g == 0) return g;
  }
  return 1;
}

Norm2d::Norm2d(ParameterStore& store, const std::string& name, std::int64_t channels, NormMode mode)
    : mode_(mode), groups_(default_groups(channels)) {
  gamma_ = store.add(name + ".gamma", Tensor::full({channels}, real(1)));
  beta_ = store.add(name + ".beta", Tensor::zeros({channels}));
}

Tensor Norm2d::operator()(const Tensor& x) const { return norm2d(x, gamma_, beta_, mode_, groups_); }

ConvGru::ConvGru(ParameterStore& store, const std::string& name, std::int64_t input_channels,
                 std::int64_t hidden_channels, IntPair kernel, Rng& rng)
    : kernel_(kernel) {
  const std::int64_t in = input_channels + hidden_channels;
  const std::int64_t fan_in = in * kernel[0] * kernel[1];
  const Shape ws{hidden_channels, in, kernel[0], kernel[1]};
  weights_.update_weight = store.add(name + ".update.weight", init_normal(ws, fan_in, real(1), rng));
  weights_.update_bias = store.add(name + ".update.bias", Tensor::zeros({hidden_channels}));
  weights_.reset_weight = store.add(name + ".reset.weight", init_normal(ws, fan_in, real(1), rng));
  weights_.reset_bias = store.add(name + ".reset.bias", Tensor::zeros({hidden_channels}));
  weights_.cand_weight = store.add(name + ".cand.weight", init_normal(ws, fan_in, real(1), rng));
  weights_.cand_bias = store.add(name + ".cand.bias", Tensor::zeros({hidden_channels}));
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
