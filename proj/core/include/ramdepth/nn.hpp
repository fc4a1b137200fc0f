#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "ramdepth/ops.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

using Rng = std::mt19937_64;

// Named trainable tensors, iterated in sorted name order.
class ParameterStore {
 public:
  // Registers a new parameter; names must be unique.
  Tensor add(const std::string& name, Tensor value);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::int64_t scalar_count() const;

  void zero_grad();
  void fill(real value);
  // Copies values (not identity) from another store with identical layout.
  void copy_values_from(const ParameterStore& other);
  bool values_equal(const ParameterStore& other) const;

 private:
  std::map<std::string, Tensor> params_;
};

// Gaussian weights with standard deviation gain / sqrt(fan_in).
Tensor init_normal(Shape shape, std::int64_t fan_in, real gain, Rng& rng);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, std::int64_t in_channels,
         std::int64_t out_channels, IntPair kernel, Rng& rng, IntPair stride = {1, 1},
         real gain = real(1.41421356));

  Tensor operator()(const Tensor& x) const;

  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  std::int64_t out_channels() const { return weight_.dim(0); }

 private:
  Tensor weight_, bias_;
  IntPair stride_{1, 1};
  IntPair padding_{0, 0};
};

class Norm2d {
 public:
  Norm2d() = default;
  Norm2d(ParameterStore& store, const std::string& name, std::int64_t channels, NormMode mode);

  Tensor operator()(const Tensor& x) const;

 private:
  Tensor gamma_, beta_;
  NormMode mode_ = NormMode::kGroup;
  int groups_ = 8;
};

// Largest group count <= 8 dividing `channels`.
int default_groups(std::int64_t channels);

class ConvGru {
 public:
  ConvGru() = default;
  ConvGru(ParameterStore& store, const std::string& name, std::int64_t input_channels,
          std::int64_t hidden_channels, IntPair kernel, Rng& rng);

  Tensor operator()(const Tensor& x, const Tensor& h) const { return conv_gru(x, h, weights_, kernel_); }
  const GruWeights& weights() const { return weights_; }

 private:
  GruWeights weights_;
  IntPair kernel_{1, 1};
};

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
