#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ramdepth/tensor.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

// Pinhole intrinsics in pixels. Pixel (0, 0) is the centre of the top-left pixel.
struct Intrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;

  void validate() const;
  // Intrinsics of the same camera on a grid downsampled by `factor`,
  // preserving pixel centres: c' = (c + 0.5) / factor - 0.5.
  Intrinsics downscaled(double factor) const;
};

// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
  Pose inverse() const;
  Eigen::Vector3d camera_center() const { return -rotation.transpose() * translation; }
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;
};

struct View {
  Tensor image;  // 1 x 3 x H x W, values in [0, 1]
  Camera camera;
  std::string id;

  std::int64_t height() const { return image.dim(2); }
  std::int64_t width() const { return image.dim(3); }
};

// Pose of `src` relative to `ref`: maps ref-camera points to src-camera points.
Pose relative_pose(const Pose& ref, const Pose& src);

inline constexpr double kMinCameraZ = 1e-6;
inline constexpr double kMinProjectionDepth = 1e-4;
// Coordinate assigned to projections that land behind the source camera;
// far enough outside any image that bilinear sampling reads zeros.
inline constexpr double kInvalidCoordinate = -1e4;

struct Projection {
  double u = 0, v = 0;
  double z = 0;             // source-camera depth before perspective division
  bool in_front = false;    // z > kMinCameraZ
};

// Maps reference pixel q0 at `depth` into the source image.
Projection project(const Eigen::Vector2d& q0, double depth, const Camera& ref, const Camera& src);

// Dense projection of a 1 x 1 x Hc x Wc depth map into the source view on the
// coarse grid (intrinsics downscaled by `scale`). Returns 1 x 2 x Hc x Wc
// (u, v) coordinates, differentiable with respect to depth. Depths are
// clamped to kMinProjectionDepth; behind-camera pixels get
// kInvalidCoordinate.
Tensor project_map(const Tensor& depth, const Camera& ref, const Camera& src, double scale);

struct PoseNormalization {
  std::vector<View> views;  // reference first, translations divided by scale
  double scale = 1;         // mean reference-to-source baseline in scene units
};

// Rescales all translations so that reference-to-source baselines have mean
// length 1. Depth in normalized units times `scale` gives scene units.
PoseNormalization normalize_poses(const std::vector<View>& views);

double mean_baseline(const std::vector<View>& views);

// World point seen at pixel q with camera-z `depth`.
Eigen::Vector3d backproject_pixel(const Eigen::Vector2d& q, double depth, const Camera& camera);

struct ColoredPoint {
  Eigen::Vector3d position;
  std::array<std::uint8_t, 3> rgb{};
};

// One world point per pixel with positive finite depth, coloured from the view image.
std::vector<ColoredPoint> backproject(const Tensor& depth, const View& view);

struct NamedCamera {
  std::string id;
  Camera camera;
};

// cameras.txt: `view_id fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz`
void write_cameras_file(const std::filesystem::path& path, const std::vector<NamedCamera>& cameras);
std::vector<NamedCamera> read_cameras_file(const std::filesystem::path& path);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
