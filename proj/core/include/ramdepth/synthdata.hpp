#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ramdepth/geometry.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

struct SceneSpec {
  std::uint64_t seed = 0;
  int width = 96;
  int height = 64;
  int n_views = 4;  // reference plus n_views - 1 sources
  // Generation-side content depth range; never stored with the dataset.
  double min_depth = 2.0;
  double max_depth = 50.0;
  // Reference-to-source baseline as a fraction of the median reference depth.
  double min_baseline = 0.06;
  double max_baseline = 0.2;
  int max_spheres = 3;
  bool untextured = false;  // flat-coloured primitives, for robustness tests
  double min_overlap = 0.5;
  int max_retries = 64;

  void validate() const;
};

struct Scene {
  std::string name;
  std::vector<View> views;    // views[0] is the reference
  std::vector<Tensor> depths; // 1 x 1 x H x W camera-z ground truth per view
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raycasts textured planes and spheres through pinhole cameras. Pure
// function of the spec; images are quantized to 8 bits.
Scene generate_scene(const SceneSpec& spec);

// Scenes seeded base_seed, base_seed + 1, ...
std::vector<Scene> generate_scenes(const SceneSpec& base, int count);

// Fraction of reference pixels whose ground-truth point projects inside the
// source image and is not occluded there.
double covisible_fraction(const Scene& scene, std::size_t source_index, double depth_tolerance = 0.02);

// Separable Gaussian blur with radius ceil(3 sigma) and edge replication.
Tensor gaussian_blur(const Tensor& image, double sigma);
View blur_view(const View& view, double sigma);
std::vector<double> gaussian_kernel(double sigma);

// Multiplies every pose translation and depth map by s (a uniformly rescaled world).
Scene scale_scene(const Scene& scene, double s);

// Directory per scene: view_k.ppm, depth_k.pfm, cameras.txt; manifest scenes.txt.
void save_scene(const std::filesystem::path& dir, const Scene& scene);
Scene load_scene(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& root, const std::vector<Scene>& scenes);
std::vector<Scene> load_dataset(const std::filesystem::path& root);
std::vector<std::string> read_manifest(const std::filesystem::path& root);

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
