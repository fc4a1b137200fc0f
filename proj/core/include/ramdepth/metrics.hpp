#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ramdepth/tensor.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

// 1 where ground truth is present (finite and > 0), 0 elsewhere.
using Mask = std::vector<std::uint8_t>;

Mask valid_depth_mask(const Tensor& gt);

struct Metrics {
  double mae = 0;
  double rmse = 0;
  // (tau, fraction of valid pixels with |error| > tau), in the order requested.
  std::vector<std::pair<double, double>> threshold_fractions;
  std::int64_t valid_pixels = 0;

  double fraction_above(double tau) const;
};

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> taus{0.1, 0.5, 1.0, 2.0};
  return taus;
}

Metrics compute_metrics(const Tensor& pred, const Tensor& gt, const Mask& mask,
                        const std::vector<double>& thresholds = default_thresholds());

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
