#include "ramdepth/metrics.hpp"

#include <cmath>

namespace ramdepth::inline RAMDEPTH_PRECISION {

Mask valid_depth_mask(const Tensor& gt) {
  Mask m(static_cast<std::size_t>(gt.numel()));
  auto d = gt.data();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = (std::isfinite(d[i]) && d[i] > 0) ? 1 : 0;
  return m;
}

double Metrics::fraction_above(double tau) const {
  for (const auto& [t, f] : threshold_fractions) {
    if (t == tau) return f;
  }
  throw std::out_of_range("threshold not evaluated: " + std::to_string(tau));
}

Metrics compute_metrics(const Tensor& pred, const Tensor& gt, const Mask& mask, const std::vector<double>& thresholds) {
  if (pred.numel() != gt.numel() || static_cast<std::int64_t>(mask.size()) != gt.numel()) {
    throw ShapeError("compute_metrics: prediction " + shape_str(pred.shape()) + ", ground truth " +
                     shape_str(gt.shape()) + " and mask sizes differ");
  }
  auto p = pred.data();
  auto g = gt.data();
  double abs_sum = 0, sq_sum = 0;
  std::vector<std::int64_t> above(thresholds.size(), 0);
  std::int64_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double e = std::abs(static_cast<double>(p[i]) - static_cast<double>(g[i]));
    abs_sum += e;
    sq_sum += e * e;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      if (e > thresholds[t]) ++above[t];
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("compute_metrics: empty valid mask");
  Metrics m;
  m.valid_pixels = count;
  m.mae = abs_sum / static_cast<double>(count);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(count));
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    m.threshold_fractions.emplace_back(thresholds[t], static_cast<double>(above[t]) / static_cast<double>(count));
  }
  return m;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
