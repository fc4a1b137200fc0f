#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ramdepth/image_io.hpp"
#include "ramdepth/metrics.hpp"
#include "ramdepth/synthdata.hpp"
#include "test_support.hpp"

using namespace ramdepth;
using testing::random_tensor;

namespace {

SceneSpec small_spec(std::uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  s.width = 48;
  s.height = 32;
  s.n_views = 3;
  return s;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// Bilinear fetch of channel c; returns false if any tap falls outside.
bool fetch(const Tensor& t, std::int64_t c, double u, double v, double& out) {
  const auto x0 = static_cast<std::int64_t>(std::floor(u)), y0 = static_cast<std::int64_t>(std::floor(v));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= t.dim(3) || y0 + 1 >= t.dim(2)) return false;
  const double ax = u - x0, ay = v - y0;
  out = (1 - ax) * (1 - ay) * t.at({0, c, y0, x0}) + ax * (1 - ay) * t.at({0, c, y0, x0 + 1}) +
        (1 - ax) * ay * t.at({0, c, y0 + 1, x0}) + ax * ay * t.at({0, c, y0 + 1, x0 + 1});
  return true;
}

double laplacian_variance(const Tensor& img) {
  const auto h = img.dim(2), w = img.dim(3);
  std::vector<double> vals;
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 1; y + 1 < h; ++y)
      for (std::int64_t x = 1; x + 1 < w; ++x)
        vals.push_back(img.at({0, c, y - 1, x}) + img.at({0, c, y + 1, x}) + img.at({0, c, y, x - 1}) +
                       img.at({0, c, y, x + 1}) - 4.0 * img.at({0, c, y, x}));
  double mean = 0, var = 0;
  for (double v : vals) mean += v;
  mean /= double(vals.size());
  for (double v : vals) var += (v - mean) * (v - mean);
  return var / double(vals.size());
}

}  // namespace

TEST_CASE("generation is a pure function of the spec") {
  const Scene a = generate_scene(small_spec(3)), b = generate_scene(small_spec(3)), c = generate_scene(small_spec(4));
  REQUIRE(a.views.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(bit_equal(a.views[i].image, b.views[i].image));
    CHECK(bit_equal(a.depths[i], b.depths[i]));
    CHECK(a.views[i].camera.pose.translation == b.views[i].camera.pose.translation);
  }
  CHECK_FALSE(bit_equal(a.views[0].image, c.views[0].image));
}

TEST_CASE("generated scenes satisfy their invariants") {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const Scene s = generate_scene(small_spec(seed));
    CHECK(s.views[0].image.shape() == Shape{1, 3, 32, 48});
    CHECK(s.depths[0].shape() == Shape{1, 1, 32, 48});
    for (real d : s.depths[0].data()) {
      CHECK(std::isfinite(d));
      CHECK(d > 0.0f);
    }
    for (real v : s.views[1].image.data()) CHECK((v >= 0.0f && v <= 1.0f));
    for (std::size_t k = 1; k < s.views.size(); ++k) CHECK(covisible_fraction(s, k) >= 0.5);
  }
  CHECK_THROWS(generate_scene([] {
    SceneSpec s = small_spec(1);
    s.n_views = 1;
    return s;
  }()));
}

TEST_CASE("ground truth reprojects photometrically") {
  std::int64_t visible = 0, consistent = 0;
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const Scene s = generate_scene(small_spec(seed));
    const View& ref = s.views[0];
    for (std::size_t k = 1; k < s.views.size(); ++k) {
      const View& src = s.views[k];
      for (std::int64_t y = 0; y < ref.image.dim(2); ++y)
        for (std::int64_t x = 0; x < ref.image.dim(3); ++x) {
          const Projection p = project({double(x), double(y)}, s.depths[0].at({0, 0, y, x}), ref.camera, src.camera);
          if (!p.in_front) continue;
          // Mutually visible: every bilinear tap sees the same surface.
          const auto x0 = static_cast<std::int64_t>(std::floor(p.u)), y0 = static_cast<std::int64_t>(std::floor(p.v));
          if (x0 < 0 || y0 < 0 || x0 + 1 >= src.image.dim(3) || y0 + 1 >= src.image.dim(2)) continue;
          bool same = true;
          for (int t = 0; t < 4; ++t) {
            const double d = s.depths[k].at({0, 0, y0 + t / 2, x0 + t % 2});
            same = same && std::abs(d - p.z) <= 0.02 * p.z;
          }
          if (!same) continue;
          ++visible;
          double err = 0, a = 0;
          for (std::int64_t c = 0; c < 3; ++c) {
            fetch(src.image, c, p.u, p.v, a);
            err = std::max(err, std::abs(a - ref.image.at({0, c, y, x})));
          }
          consistent += err < 0.05;
        }
    }
  }
  REQUIRE(visible > 5000);
  CHECK(double(consistent) / double(visible) >= 0.99);
}

TEST_CASE("gaussian blur") {
  SUBCASE("kernel") {
    for (double sigma : {0.5, 1.0, 3.0}) {
      const auto k = gaussian_kernel(sigma);
      CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
      double sum = 0;
      for (double v : k) sum += v;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
    }
  }
  SUBCASE("constant image is unchanged") {
    const Tensor img = Tensor::full({1, 3, 12, 10}, 0.4f);
    const Tensor out = gaussian_blur(img, 3.0);
    for (real v : out.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-6));
  }
  SUBCASE("impulse gives the separable kernel") {
    Tensor img = Tensor::zeros({1, 1, 21, 21});
    img.mutable_data()[10 * 21 + 10] = 1;
    const Tensor out = gaussian_blur(img, 1.5);
    const auto k = gaussian_kernel(1.5);
    const auto r = static_cast<std::int64_t>(k.size() / 2);
    for (std::int64_t y = -r; y <= r; ++y)
      for (std::int64_t x = -r; x <= r; ++x)
        CHECK(out.at({0, 0, 10 + y, 10 + x}) ==
              doctest::Approx(k[static_cast<std::size_t>(y + r)] * k[static_cast<std::size_t>(x + r)]).epsilon(1e-5));
    CHECK(out.at({0, 0, 0, 0}) == 0.0f);
  }
  SUBCASE("blur lowers laplacian variance") {
    for (std::uint64_t seed = 30; seed < 33; ++seed) {
      const View v = generate_scene(small_spec(seed)).views[0];
      const View b = blur_view(v, 3.0);
      CHECK(laplacian_variance(b.image) < laplacian_variance(v.image));
      CHECK(b.camera.pose.translation == v.camera.pose.translation);
    }
  }
  SUBCASE("sigma must be positive") { CHECK_THROWS(gaussian_blur(Tensor::zeros({1, 3, 4, 4}), 0)); }
}

TEST_CASE("metrics") {
  const Tensor pred = Tensor::from_data({1, 1, 1, 3}, {1, 2, 3}), gt = Tensor::from_data({1, 1, 1, 3}, {1, 1, 5});
  SUBCASE("hand example") {
    const Metrics m = compute_metrics(pred, gt, Mask(3, 1));
    CHECK(m.mae == doctest::Approx(1.0));
    CHECK(m.rmse == doctest::Approx(std::sqrt(5.0 / 3)));
    CHECK(m.fraction_above(1.0) == doctest::Approx(1.0 / 3));
    CHECK(m.valid_pixels == 3);
  }
  SUBCASE("perfect prediction") {
    const Metrics m = compute_metrics(gt, gt, Mask(3, 1));
    CHECK(m.mae == 0);
    CHECK(m.rmse == 0);
    for (const auto& [tau, f] : m.threshold_fractions) CHECK(f == 0);
  }
  SUBCASE("matches a scalar loop") {
    Rng rng(40);
    const Tensor p = random_tensor({1, 1, 9, 11}, rng, 0, 10), g = random_tensor({1, 1, 9, 11}, rng, 0.5, 10);
    Mask m(99);
    std::bernoulli_distribution keep(0.7);
    for (auto& v : m) v = keep(rng);
    const Metrics out = compute_metrics(p, g, m);
    double abs_sum = 0, sq = 0;
    std::vector<double> above(default_thresholds().size());
    int n = 0;
    for (std::size_t i = 0; i < 99; ++i) {
      if (!m[i]) continue;
      const double e = std::abs(double(p.data()[i]) - g.data()[i]);
      abs_sum += e;
      sq += e * e;
      ++n;
      for (std::size_t t = 0; t < above.size(); ++t) above[t] += e > default_thresholds()[t];
    }
    CHECK(out.mae == doctest::Approx(abs_sum / n).epsilon(1e-12));
    CHECK(out.rmse == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
    CHECK(out.rmse >= out.mae);
    for (std::size_t t = 0; t < above.size(); ++t) {
      CHECK(out.threshold_fractions[t].second == doctest::Approx(above[t] / n));
      if (t > 0) CHECK(out.threshold_fractions[t].second <= out.threshold_fractions[t - 1].second);
    }
  }
  SUBCASE("empty mask") { CHECK_THROWS(compute_metrics(pred, gt, Mask(3, 0))); }
  SUBCASE("valid mask") {
    const Tensor g = Tensor::from_data({1, 1, 1, 4}, {1, 0, -2, std::numeric_limits<real>::infinity()});
    CHECK(valid_depth_mask(g) == Mask{1, 0, 0, 0});
  }
}

TEST_CASE("scene scaling") {
  const Scene s = generate_scene(small_spec(50));
  const Scene t = scale_scene(s, 10);
  CHECK(bit_equal(s.views[1].image, t.views[1].image));
  CHECK(t.depths[0].data()[5] == doctest::Approx(10.0 * s.depths[0].data()[5]));
  CHECK((t.views[1].camera.pose.translation - 10 * s.views[1].camera.pose.translation).norm() < 1e-9);
  CHECK(t.views[1].camera.pose.rotation.isApprox(s.views[1].camera.pose.rotation));
}

TEST_CASE("image files") {
  testing::TempDir dir("io");
  Rng rng(60);
  SUBCASE("pfm round trip is bit exact") {
    const Tensor d = random_tensor({1, 1, 5, 7}, rng, 0.01, 1000);
    write_pfm(dir / "d.pfm", d);
    CHECK(bit_equal(read_pfm(dir / "d.pfm"), d));
  }
  SUBCASE("pfm header and row order") {
    const Tensor d = Tensor::from_data({1, 1, 2, 1}, {1, 2});
    write_pfm(dir / "d.pfm", d);
    std::ifstream in(dir / "d.pfm", std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), {}};
    CHECK(bytes.rfind("Pf\n1 2\n-1", 0) == 0);
    float first = 0;
    std::memcpy(&first, bytes.data() + bytes.size() - 8, 4);
    CHECK(first == 2.0f);  // bottom row first
  }
  SUBCASE("truncated pfm is an error") {
    write_pfm(dir / "d.pfm", Tensor::full({1, 1, 4, 4}, 1));
    std::filesystem::resize_file(dir / "d.pfm", std::filesystem::file_size(dir / "d.pfm") - 3);
    CHECK_THROWS_AS(read_pfm(dir / "d.pfm"), IoError);
  }
  SUBCASE("malformed header reports an offset") {
    std::ofstream(dir / "bad.pfm") << "Pf\n4 x\n-1\n";
    try {
      read_pfm(dir / "bad.pfm");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 5);
    }
  }
  SUBCASE("ppm round trip within quantization") {
    const Tensor img = random_tensor({1, 3, 6, 5}, rng, 0, 1);
    write_ppm(dir / "i.ppm", img);
    const Tensor back = read_ppm(dir / "i.ppm");
    REQUIRE(back.shape() == img.shape());
    CHECK(testing::max_abs_diff(back, img) <= 1.0 / 255);
    write_ppm(dir / "j.ppm", back);
    CHECK(bit_equal(read_ppm(dir / "j.ppm"), back));
  }
}

TEST_CASE("dataset round trip") {
  testing::TempDir dir("dataset");
  const auto scenes = generate_scenes(small_spec(70), 2);
  CHECK(scenes[1].name != scenes[0].name);
  save_dataset(dir.path(), scenes);
  CHECK(read_manifest(dir.path()).size() == 2);
  CHECK(std::filesystem::exists(dir / scenes[0].name / "view_0.ppm"));
  CHECK(std::filesystem::exists(dir / scenes[0].name / "depth_2.pfm"));
  CHECK(std::filesystem::exists(dir / scenes[0].name / "cameras.txt"));
  const auto back = load_dataset(dir.path());
  REQUIRE(back.size() == 2);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(bit_equal(back[s].depths[k], scenes[s].depths[k]));
      // Images are already 8-bit quantized, so they survive exactly.
      CHECK(bit_equal(back[s].views[k].image, scenes[s].views[k].image));
      CHECK(back[s].views[k].id == scenes[s].views[k].id);
      CHECK((back[s].views[k].camera.pose.translation - scenes[s].views[k].camera.pose.translation).norm() < 1e-12);
    }
  CHECK_THROWS_AS(load_dataset(dir / "missing"), IoError);
}
