#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "ramdepth/geometry.hpp"
#include "ramdepth/nn.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {
namespace testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<real> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<real>(dist(rng));
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

// Values with magnitude in [lo, hi] and random sign; keeps inputs away from
// kinks at zero.
inline Tensor signed_away_from_zero(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  std::vector<real> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<real>(sign(rng) ? mag(rng) : -mag(rng));
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(static_cast<double>(x[i]) - y[i]));
  return m;
}

inline Eigen::Matrix3d random_rotation(Rng& rng, double max_angle) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> a(-max_angle, max_angle);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(a(rng), axis).toRotationMatrix();
}

// Camera looking roughly down +z from a random nearby position.
inline Camera random_camera(Rng& rng, double max_angle = 0.3, double max_shift = 1.0) {
  std::uniform_real_distribution<double> f(60, 120), c(20, 40), t(-max_shift, max_shift);
  Camera cam;
  cam.intrinsics = {f(rng), f(rng), c(rng), c(rng)};
  cam.pose.rotation = random_rotation(rng, max_angle);
  cam.pose.translation = Eigen::Vector3d(t(rng), t(rng), t(rng));
  return cam;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ramdepth_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct GradCheck {
  double max_rel_error = 0;
  std::size_t coordinates = 0;
  std::string worst;
};

// Compares reverse-mode gradients of L = sum(f(inputs) * P), P a fixed
// random projection, against central differences. Up to `max_coords`
// coordinates are probed per input.
inline GradCheck check_gradients(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                                 std::vector<Tensor> inputs, Rng& rng, double step = 1e-3,
                                 std::size_t max_coords = 24, double abs_floor = 1e-6) {
  for (auto& t : inputs) t.set_requires_grad(true);
  Tensor probe = f(inputs);
  const Tensor projection = random_tensor(probe.shape(), rng);
  auto loss_value = [&] {
    const Tensor out = f(inputs);
    double acc = 0;
    auto o = out.data();
    auto p = projection.data();
    for (std::size_t i = 0; i < o.size(); ++i) acc += static_cast<double>(o[i]) * p[i];
    return acc;
  };

  Tape tape;
  {
    TapeScope scope(tape);
    const Tensor out = f(inputs);
    backward(sum_all(mul(out, projection)), tape);
  }
  std::vector<std::vector<real>> analytic;
  for (const auto& t : inputs) {
    if (t.has_grad()) {
      analytic.emplace_back(t.grad().begin(), t.grad().end());
    } else {
      analytic.emplace_back(static_cast<std::size_t>(t.numel()), real(0));
    }
  }

  GradCheck result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k];
    const auto n = static_cast<std::size_t>(t.numel());
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (n > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (std::size_t i : coords) {
      auto data = t.mutable_data();
      const real saved = data[i];
      data[i] = static_cast<real>(saved + step);
      const double up = loss_value();
      data[i] = static_cast<real>(saved - step);
      const double down = loss_value();
      data[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic[k][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
      ++result.coordinates;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = "input " + std::to_string(k) + "[" + std::to_string(i) + "] analytic " +
                       std::to_string(a) + " numeric " + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace testing
}  // namespace ramdepth::inline RAMDEPTH_PRECISION
