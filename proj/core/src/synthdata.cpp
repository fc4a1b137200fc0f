#include "ramdepth/synthdata.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "ramdepth/image_io.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

namespace {

constexpr int kOctaves = 4;
constexpr double kBaseFrequency = 0.5;  // lattice cells per canonical scene unit

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(x) * 0x8CB92BA72F3D8DD7ull);
  h = splitmix64(h ^ static_cast<std::uint64_t>(y) * 0x9E3779B185EBCA87ull);
  h = splitmix64(h ^ static_cast<std::uint64_t>(z) * 0xC2B2AE3D27D4EB4Full);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

double value_noise(const Eigen::Vector3d& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy), iz = static_cast<std::int64_t>(fz);
  const double tx = fade(p.x() - fx), ty = fade(p.y() - fy), tz = fade(p.z() - fz);
  double acc = 0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
    acc += w * lattice(ix + dx, iy + dy, iz + dz, seed);
  }
  return acc;
}

// Multi-octave value noise in [0, 1].
double fractal_noise(const Eigen::Vector3d& p, std::uint64_t seed) {
  double total = 0, norm = 0, amp = 1, freq = 1;
  for (int o = 0; o < kOctaves; ++o) {
    total += amp * value_noise(p * freq, seed + static_cast<std::uint64_t>(o) * 7919);
    norm += amp;
    amp *= 0.5;
    freq *= 2;
  }
  return total / norm;
}

struct Primitive {
  enum class Kind { kPlane, kRect, kSphere } kind = Kind::kPlane;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();   // plane point or sphere centre
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX(), axis_v = Eigen::Vector3d::UnitY();
  double half_u = 0, half_v = 0, radius = 0;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  std::uint64_t texture_seed = 0;

  std::optional<double> intersect(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const {
    constexpr double kEps = 1e-9;
    if (kind == Kind::kSphere) {
      const Eigen::Vector3d oc = o - point;
      const double a = d.squaredNorm(), b = 2 * oc.dot(d), c = oc.squaredNorm() - radius * radius;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return std::nullopt;
      const double sq = std::sqrt(disc);
      double t = (-b - sq) / (2 * a);
      if (t <= kEps) t = (-b + sq) / (2 * a);
      if (t <= kEps) return std::nullopt;
      return t;
    }
    const double denom = normal.dot(d);
    if (std::abs(denom) < kEps) return std::nullopt;
    const double t = normal.dot(point - o) / denom;
    if (t <= kEps) return std::nullopt;
    if (kind == Kind::kRect) {
      const Eigen::Vector3d rel = o + t * d - point;
      if (std::abs(rel.dot(axis_u)) > half_u || std::abs(rel.dot(axis_v)) > half_v) return std::nullopt;
    }
    return t;
  }
};

struct CanonicalScene {
  std::vector<Primitive> primitives;
  bool untextured = false;

  // Parametric hit distance along o + t d and the primitive hit.
  std::optional<std::pair<double, const Primitive*>> trace(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const {
    std::optional<std::pair<double, const Primitive*>> best;
    for (const auto& p : primitives) {
      if (auto t = p.intersect(o, d); t && (!best || *t < best->first)) best = std::make_pair(*t, &p);
    }
    return best;
  }

  Eigen::Vector3d shade(const Primitive& p, const Eigen::Vector3d& x) const {
    if (untextured) return p.color;
    Eigen::Vector3d rgb;
    for (int c = 0; c < 3; ++c) {
      const double n = fractal_noise(x * kBaseFrequency, p.texture_seed + static_cast<std::uint64_t>(c) * 104729);
      rgb[c] = std::clamp(p.color[c] * (0.25 + 1.5 * n), 0.0, 1.0);
    }
    return rgb;
  }
};

struct Rendered {
  Tensor image;
  Tensor depth;
};

// Renders in canonical coordinates; `camera` maps canonical points to camera coordinates.
Rendered render(const CanonicalScene& scene, const Camera& camera, int width, int height) {
  const auto& k = camera.intrinsics;
  const Eigen::Matrix3d rt = camera.pose.rotation.transpose();
  const Eigen::Vector3d origin = camera.pose.camera_center();
  const std::int64_t plane = static_cast<std::int64_t>(width) * height;
  std::vector<real> img(static_cast<std::size_t>(3 * plane), real(0));
  std::vector<real> depth(static_cast<std::size_t>(plane), real(0));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Direction with unit camera-z, so the hit parameter is the camera depth.
      const Eigen::Vector3d dir = rt * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const auto hit = scene.trace(origin, dir);
      if (!hit) continue;
      const std::int64_t i = static_cast<std::int64_t>(y) * width + x;
      depth[static_cast<std::size_t>(i)] = static_cast<real>(hit->first);
      const Eigen::Vector3d rgb = scene.shade(*hit->second, origin + hit->first * dir);
      for (int c = 0; c < 3; ++c) {
        img[static_cast<std::size_t>(c * plane + i)] = static_cast<real>(std::lround(rgb[c] * 255.0) / 255.0);
      }
    }
  }
  return {Tensor::from_data({1, 3, height, width}, std::move(img)),
          Tensor::from_data({1, 1, height, width}, std::move(depth))};
}

Eigen::Matrix3d look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target, double roll) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d down = Eigen::AngleAxisd(roll, z) * Eigen::Vector3d::UnitY();
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

double covisible(const Tensor& ref_depth, const Camera& ref, const Tensor& src_depth, const Camera& src,
                 double tol) {
  const std::int64_t h = ref_depth.dim(2), w = ref_depth.dim(3);
  auto rd = ref_depth.data();
  auto sd = src_depth.data();
  std::int64_t visible = 0, total = 0;
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      const double d = rd[static_cast<std::size_t>(y * w + x)];
      if (!(d > 0)) continue;
      ++total;
      const Projection p = project({static_cast<double>(x), static_cast<double>(y)}, d, ref, src);
      if (!p.in_front) continue;
      const auto px = static_cast<std::int64_t>(std::lround(p.u));
      const auto py = static_cast<std::int64_t>(std::lround(p.v));
      if (px < 0 || py < 0 || px >= w || py >= h) continue;
      const double sdv = sd[static_cast<std::size_t>(py * w + px)];
      if (sdv > 0 && std::abs(sdv - p.z) <= tol * p.z) ++visible;
    }
  }
  return total ? static_cast<double>(visible) / static_cast<double>(total) : 0.0;
}

}  // namespace

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene size must be positive");
  if (n_views < 2) throw std::invalid_argument("a scene needs at least two views");
  if (!(min_depth > 0) || !(max_depth > min_depth)) throw std::invalid_argument("invalid content depth range");
  if (!(min_baseline > 0) || max_baseline < min_baseline) throw std::invalid_argument("invalid baseline range");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(spec.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Camera ref_canonical;
  const double focal = uniform(0.8, 1.0) * spec.width;
  ref_canonical.intrinsics = {focal, focal, spec.width / 2.0 - 0.5 + uniform(-1, 1), spec.height / 2.0 - 0.5 + uniform(-1, 1)};
  const auto& k = ref_canonical.intrinsics;

  CanonicalScene scene;
  scene.untextured = spec.untextured;
  auto random_color = [&] { return Eigen::Vector3d(uniform(0.3, 0.9), uniform(0.3, 0.9), uniform(0.3, 0.9)); };
  auto next_seed = [&] { return static_cast<std::uint64_t>(rng()); };

  // Background plane, tilted but covering every reference ray.
  const double bg_depth = uniform(3.5, 5.0);
  {
    Primitive bg;
    const double ax = uniform(-0.4, 0.4), ay = uniform(-0.3, 0.3);
    bg.normal = Eigen::Vector3d(std::sin(ax), std::sin(ay), -1.0).normalized();
    bg.point = Eigen::Vector3d(0, 0, bg_depth);
    bg.color = random_color();
    bg.texture_seed = next_seed();
    scene.primitives.push_back(bg);
  }
  auto random_in_view = [&](double z) {
    const double u = uniform(0.1, 0.9) * spec.width, v = uniform(0.1, 0.9) * spec.height;
    return Eigen::Vector3d(z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z);
  };
  const int n_spheres = 1 + static_cast<int>(unit(rng) * spec.max_spheres);
  for (int i = 0; i < std::min(n_spheres, spec.max_spheres); ++i) {
    Primitive s;
    s.kind = Primitive::Kind::kSphere;
    s.point = random_in_view(uniform(1.8, bg_depth - 0.9));
    s.radius = uniform(0.25, 0.6);
    s.color = random_color();
    s.texture_seed = next_seed();
    scene.primitives.push_back(s);
  }
  if (unit(rng) < 0.5) {
    Primitive r;
    r.kind = Primitive::Kind::kRect;
    r.point = random_in_view(uniform(1.6, bg_depth - 0.8));
    r.normal = Eigen::Vector3d(uniform(-0.8, 0.8), uniform(-0.6, 0.6), -1.0).normalized();
    r.axis_u = r.normal.cross(Eigen::Vector3d::UnitY()).normalized();
    r.axis_v = r.normal.cross(r.axis_u).normalized();
    r.half_u = uniform(0.3, 0.7);
    r.half_v = uniform(0.3, 0.7);
    r.color = random_color();
    r.texture_seed = next_seed();
    scene.primitives.push_back(r);
  }

  Rendered ref_render = render(scene, ref_canonical, spec.width, spec.height);
  std::vector<real> sorted(ref_render.depth.data().begin(), ref_render.depth.data().end());
  if (std::any_of(sorted.begin(), sorted.end(), [](real d) { return !(d > 0); })) {
    throw GenerationError("reference view has pixels without geometry");
  }
  std::sort(sorted.begin(), sorted.end());
  const double median_depth = sorted[sorted.size() / 2];
  const double zmin = sorted.front(), zmax = sorted.back();

  Scene out;
  out.name = "scene_" + std::to_string(spec.seed);
  std::vector<Camera> canonical_cameras{ref_canonical};
  std::vector<Rendered> renders;
  renders.push_back(std::move(ref_render));
  for (int v = 1; v < spec.n_views; ++v) {
    bool accepted = false;
    for (int attempt = 0; attempt < spec.max_retries && !accepted; ++attempt) {
      const double theta = uniform(0, 2 * M_PI);
      const Eigen::Vector3d dir = Eigen::Vector3d(std::cos(theta), 0.5 * std::sin(theta), uniform(-0.25, 0.25)).normalized();
      const Eigen::Vector3d center = uniform(spec.min_baseline, spec.max_baseline) * median_depth * dir;
      const Eigen::Vector3d target(uniform(-0.05, 0.05) * median_depth, uniform(-0.05, 0.05) * median_depth, median_depth);
      Camera cam;
      cam.intrinsics = ref_canonical.intrinsics;
      cam.pose.rotation = look_at(center, target, uniform(-0.05, 0.05));
      cam.pose.translation = -cam.pose.rotation * center;
      Rendered r = render(scene, cam, spec.width, spec.height);
      if (covisible(renders.front().depth, ref_canonical, r.depth, cam, 0.02) >= spec.min_overlap) {
        canonical_cameras.push_back(cam);
        renders.push_back(std::move(r));
        accepted = true;
      }
    }
    if (!accepted) {
      throw GenerationError("could not place source view " + std::to_string(v) + " with " +
                            std::to_string(spec.min_overlap) + " overlap for seed " + std::to_string(spec.seed));
    }
  }

  // Place the canonical frame in a random world frame, then scale the world
  // so content depth falls inside [min_depth, max_depth].
  const double lo = std::log(spec.min_depth / zmin);
  const double hi = std::log(spec.max_depth / zmax);
  const double world_scale = std::exp(hi > lo ? uniform(lo, hi) : lo);
  const Eigen::Vector3d axis = Eigen::Vector3d(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)).normalized();
  const Eigen::Matrix3d world_rot = Eigen::AngleAxisd(uniform(-M_PI, M_PI), axis).toRotationMatrix();
  const Eigen::Vector3d world_shift(uniform(-2, 2), uniform(-2, 2), uniform(-2, 2));
  for (int v = 0; v < spec.n_views; ++v) {
    const Camera& c = canonical_cameras[static_cast<std::size_t>(v)];
    View view;
    view.id = "view_" + std::to_string(v);
    view.camera.intrinsics = c.intrinsics;
    view.camera.pose.rotation = c.pose.rotation * world_rot.transpose();
    view.camera.pose.translation = world_scale * (c.pose.translation - view.camera.pose.rotation * world_shift);
    view.image = renders[static_cast<std::size_t>(v)].image;
    Tensor depth = renders[static_cast<std::size_t>(v)].depth;
    for (auto& d : depth.mutable_data()) d = static_cast<real>(static_cast<double>(d) * world_scale);
    out.views.push_back(std::move(view));
    out.depths.push_back(std::move(depth));
  }
  return out;
}

std::vector<Scene> generate_scenes(const SceneSpec& base, int count) {
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SceneSpec s = base;
    s.seed = base.seed + static_cast<std::uint64_t>(i);
    scenes.push_back(generate_scene(s));
  }
  return scenes;
}

double covisible_fraction(const Scene& scene, std::size_t source_index, double depth_tolerance) {
  return covisible(scene.depths.at(0), scene.views.at(0).camera, scene.depths.at(source_index),
                   scene.views.at(source_index).camera, depth_tolerance);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian blur needs sigma > 0");
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  if (image.rank() != 4) throw ShapeError("gaussian_blur expects NCHW, got " + shape_str(image.shape()));
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const std::int64_t planes = image.dim(0) * image.dim(1), h = image.dim(2), w = image.dim(3);
  auto src = image.data();
  std::vector<double> tmp(static_cast<std::size_t>(h * w));
  std::vector<real> out(src.size());
  for (std::int64_t p = 0; p < planes; ++p) {
    const real* in = src.data() + p * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const std::int64_t xx = std::clamp<std::int64_t>(x + i, 0, w - 1);
          acc += kernel[static_cast<std::size_t>(i + radius)] * in[y * w + xx];
        }
        tmp[static_cast<std::size_t>(y * w + x)] = acc;
      }
    }
    real* o = out.data() + p * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const std::int64_t yy = std::clamp<std::int64_t>(y + i, 0, h - 1);
          acc += kernel[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy * w + x)];
        }
        o[y * w + x] = static_cast<real>(acc);
      }
    }
  }
  return Tensor::from_data(image.shape(), std::move(out));
}

View blur_view(const View& view, double sigma) {
  View out = view;
  out.image = gaussian_blur(view.image, sigma);
  return out;
}

Scene scale_scene(const Scene& scene, double s) {
  Scene out = scene;
  for (auto& v : out.views) v.camera.pose.translation *= s;
  for (auto& d : out.depths) {
    Tensor scaled = d.clone();
    for (auto& x : scaled.mutable_data()) x = static_cast<real>(static_cast<double>(x) * s);
    d = scaled;
  }
  return out;
}

void save_scene(const std::filesystem::path& dir, const Scene& scene) {
  std::filesystem::create_directories(dir);
  std::vector<NamedCamera> cams;
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    const auto k = std::to_string(i);
    write_ppm(dir / ("view_" + k + ".ppm"), scene.views[i].image);
    if (i < scene.depths.size()) write_pfm(dir / ("depth_" + k + ".pfm"), scene.depths[i]);
    cams.push_back({scene.views[i].id, scene.views[i].camera});
  }
  write_cameras_file(dir / "cameras.txt", cams);
}

Scene load_scene(const std::filesystem::path& dir) {
  Scene scene;
  scene.name = dir.filename().string();
  const auto cams = read_cameras_file(dir / "cameras.txt");
  if (cams.size() < 2) throw IoError(dir.string() + ": cameras.txt lists fewer than two views");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto k = std::to_string(i);
    View v;
    v.id = cams[i].id;
    v.camera = cams[i].camera;
    v.image = read_ppm(dir / ("view_" + k + ".ppm"));
    scene.views.push_back(std::move(v));
    const auto depth_path = dir / ("depth_" + k + ".pfm");
    if (std::filesystem::exists(depth_path)) scene.depths.push_back(read_pfm(depth_path));
  }
  return scene;
}

std::vector<std::string> read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "scenes.txt");
  if (!in) throw IoError("cannot open manifest " + (root / "scenes.txt").string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(b, e - b + 1));
  }
  return names;
}

void save_dataset(const std::filesystem::path& root, const std::vector<Scene>& scenes) {
  std::filesystem::create_directories(root);
  std::ofstream manifest(root / "scenes.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in " + root.string());
  for (const auto& s : scenes) {
    save_scene(root / s.name, s);
    manifest << s.name << '\n';
  }
}

std::vector<Scene> load_dataset(const std::filesystem::path& root) {
  std::vector<Scene> scenes;
  for (const auto& name : read_manifest(root)) scenes.push_back(load_scene(root / name));
  return scenes;
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
