#include "ramdepth/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ramdepth::inline RAMDEPTH_PRECISION {

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw ShapeError("intrinsics need positive focal lengths");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw ShapeError("intrinsics principal point not finite");
}

Intrinsics Intrinsics::downscaled(double factor) const {
  return {fx / factor, fy / factor, (cx + 0.5) / factor - 0.5, (cy + 0.5) / factor - 0.5};
}

void Pose::validate() const {
  if (std::abs(rotation.determinant() - 1.0) >= 1e-6) throw ShapeError("pose rotation determinant is not 1");
  if (!(rotation.transpose() * rotation).isApprox(Eigen::Matrix3d::Identity(), 1e-6)) {
    throw ShapeError("pose rotation is not orthonormal");
  }
  if (!translation.allFinite()) throw ShapeError("pose translation not finite");
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -p.rotation * translation;
  return p;
}

Pose relative_pose(const Pose& ref, const Pose& src) {
  Pose rel;
  rel.rotation = src.rotation * ref.rotation.transpose();
  rel.translation = src.translation - rel.rotation * ref.translation;
  return rel;
}

Projection project(const Eigen::Vector2d& q0, double depth, const Camera& ref, const Camera& src) {
  if (!(depth > 0)) throw std::invalid_argument("project: depth must be positive");
  const auto& k0 = ref.intrinsics;
  const auto& ki = src.intrinsics;
  const Eigen::Vector3d x_ref(depth * (q0.x() - k0.cx) / k0.fx, depth * (q0.y() - k0.cy) / k0.fy, depth);
  const Eigen::Vector3d world = ref.pose.rotation.transpose() * (x_ref - ref.pose.translation);
  const Eigen::Vector3d x_src = src.pose.rotation * world + src.pose.translation;
  Projection p;
  p.z = x_src.z();
  p.in_front = p.z > kMinCameraZ;
  p.u = ki.fx * x_src.x() / x_src.z() + ki.cx;
  p.v = ki.fy * x_src.y() / x_src.z() + ki.cy;
  return p;
}

Tensor project_map(const Tensor& depth, const Camera& ref, const Camera& src, double scale) {
  if (depth.rank() != 4 || depth.dim(0) != 1 || depth.dim(1) != 1) {
    throw ShapeError("project_map: depth must be 1x1xHxW, got " + shape_str(depth.shape()));
  }
  const std::int64_t h = depth.dim(2), w = depth.dim(3), plane = h * w;
  const Intrinsics k0 = ref.intrinsics.downscaled(scale);
  const Intrinsics ki = src.intrinsics.downscaled(scale);
  const Pose rel = relative_pose(ref.pose, src.pose);
  const Eigen::Matrix3d& m = rel.rotation;
  const Eigen::Vector3d& b = rel.translation;

  // Per pixel: x_src(D) = D * a + b with a = M * K0^-1 q.
  std::vector<Eigen::Vector3d> rays(static_cast<std::size_t>(plane));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const Eigen::Vector3d r((static_cast<double>(x) - k0.cx) / k0.fx, (static_cast<double>(y) - k0.cy) / k0.fy, 1.0);
      rays[static_cast<std::size_t>(y * w + x)] = m * r;
    }
  }
  auto dd = depth.data();
  std::vector<real> out(static_cast<std::size_t>(2 * plane));
  std::vector<real> du_dd(static_cast<std::size_t>(plane), real(0));
  std::vector<real> dv_dd(static_cast<std::size_t>(plane), real(0));
  for (std::int64_t p = 0; p < plane; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const double raw = static_cast<double>(dd[i]);
    const bool clamped = !(raw >= kMinProjectionDepth);
    const double d = clamped ? kMinProjectionDepth : raw;
    const Eigen::Vector3d& a = rays[i];
    const Eigen::Vector3d x = d * a + b;
    if (!(x.z() > kMinCameraZ)) {
      out[i] = static_cast<real>(kInvalidCoordinate);
      out[i + static_cast<std::size_t>(plane)] = static_cast<real>(kInvalidCoordinate);
      continue;
    }
    out[i] = static_cast<real>(ki.fx * x.x() / x.z() + ki.cx);
    out[i + static_cast<std::size_t>(plane)] = static_cast<real>(ki.fy * x.y() / x.z() + ki.cy);
    if (!clamped) {
      const double z2 = x.z() * x.z();
      du_dd[i] = static_cast<real>(ki.fx * (a.x() * x.z() - x.x() * a.z()) / z2);
      dv_dd[i] = static_cast<real>(ki.fy * (a.y() * x.z() - x.y() * a.z()) / z2);
    }
  }
  Tensor coords = Tensor::from_data({1, 2, h, w}, std::move(out));
  if (needs_grad({&depth})) {
    record_op("project_map", coords, {depth},
              [depth, du_dd = std::move(du_dd), dv_dd = std::move(dv_dd), plane](std::span<const real> g) {
                auto gd = grad_buffer(depth);
                for (std::int64_t p = 0; p < plane; ++p) {
                  const auto i = static_cast<std::size_t>(p);
                  gd[i] += g[i] * du_dd[i] + g[i + static_cast<std::size_t>(plane)] * dv_dd[i];
                }
              });
  }
  return coords;
}

double mean_baseline(const std::vector<View>& views) {
  if (views.size() < 2) throw std::invalid_argument("pose normalization needs at least one source view");
  double total = 0;
  for (std::size_t i = 1; i < views.size(); ++i) {
    total += relative_pose(views[0].camera.pose, views[i].camera.pose).translation.norm();
  }
  return total / static_cast<double>(views.size() - 1);
}

PoseNormalization normalize_poses(const std::vector<View>& views) {
  const double scale = mean_baseline(views);
  // Identical poses still leave rounding residue in the relative translation.
  double magnitude = 1;
  for (const auto& v : views) magnitude = std::max(magnitude, v.camera.pose.translation.norm());
  if (!(scale > 1e-12 * magnitude) || !std::isfinite(scale)) {
    throw DegenerateBaselineError("all reference-to-source translations are zero; depth scale is unobservable");
  }
  PoseNormalization result;
  result.scale = scale;
  result.views = views;
  for (auto& v : result.views) v.camera.pose.translation /= scale;
  return result;
}

Eigen::Vector3d backproject_pixel(const Eigen::Vector2d& q, double depth, const Camera& camera) {
  const auto& k = camera.intrinsics;
  const Eigen::Vector3d x_cam(depth * (q.x() - k.cx) / k.fx, depth * (q.y() - k.cy) / k.fy, depth);
  return camera.pose.rotation.transpose() * (x_cam - camera.pose.translation);
}

std::vector<ColoredPoint> backproject(const Tensor& depth, const View& view) {
  if (depth.rank() != 4 || depth.dim(0) != 1 || depth.dim(1) != 1) {
    throw ShapeError("backproject: depth must be 1x1xHxW, got " + shape_str(depth.shape()));
  }
  const std::int64_t h = depth.dim(2), w = depth.dim(3);
  const bool has_color = view.image.defined() && view.image.dim(2) == h && view.image.dim(3) == w;
  auto dd = depth.data();
  std::vector<ColoredPoint> points;
  points.reserve(static_cast<std::size_t>(h * w));
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double d = dd[static_cast<std::size_t>(y * w + x)];
      if (!(d > 0) || !std::isfinite(d)) continue;
      ColoredPoint pt;
      pt.position = backproject_pixel({static_cast<double>(x), static_cast<double>(y)}, d, view.camera);
      if (has_color) {
        auto img = view.image.data();
        for (int c = 0; c < 3; ++c) {
          const double v = img[static_cast<std::size_t>((c * h + y) * w + x)];
          pt.rgb[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }
      }
      points.push_back(pt);
    }
  }
  return points;
}

void write_cameras_file(const std::filesystem::path& path, const std::vector<NamedCamera>& cameras) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& c : cameras) {
    const auto& k = c.camera.intrinsics;
    const auto& r = c.camera.pose.rotation;
    const auto& t = c.camera.pose.translation;
    out << c.id << ' ' << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ' ' << r(i, j);
    }
    out << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<NamedCamera> read_cameras_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<NamedCamera> cameras;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    NamedCamera c;
    auto& k = c.camera.intrinsics;
    auto& r = c.camera.pose.rotation;
    auto& t = c.camera.pose.translation;
    ls >> c.id >> k.fx >> k.fy >> k.cx >> k.cy;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ls >> r(i, j);
    }
    ls >> t.x() >> t.y() >> t.z();
    if (!ls) throw ParseError("malformed camera line in " + path.string(), line_start);
    std::string extra;
    if (ls >> extra) throw ParseError("trailing tokens on camera line in " + path.string(), line_start);
    cameras.push_back(std::move(c));
  }
  return cameras;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
