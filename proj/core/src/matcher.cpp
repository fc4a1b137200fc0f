#include "ramdepth/matcher.hpp"

namespace ramdepth::inline RAMDEPTH_PRECISION {

std::vector<real> regular_offset_grid(int neighborhood, real spacing) {
  const int z_count = neighborhood * neighborhood;
  std::vector<real> grid(static_cast<std::size_t>(2 * z_count));
  const real half = static_cast<real>(neighborhood - 1) / 2;
  for (int z = 0; z < z_count; ++z) {
    grid[static_cast<std::size_t>(z)] = (static_cast<real>(z % neighborhood) - half) * spacing;
    grid[static_cast<std::size_t>(z_count + z)] = (static_cast<real>(z / neighborhood) - half) * spacing;
  }
  return grid;
}

OffsetPredictor::OffsetPredictor(ParameterStore& store, const std::string& name, std::int64_t context_dim,
                                 std::int64_t hidden_dim, int neighborhood, NormMode norm_mode, Rng& rng)
    : neighborhood_(neighborhood) {
  if (neighborhood < 1) throw ShapeError("offset neighborhood must be >= 1");
  const std::int64_t width = 2 * hidden_dim;
  conv0_ = Conv2d(store, name + ".conv0", context_dim + hidden_dim + 1, width, {3, 3}, rng);
  norm0_ = Norm2d(store, name + ".norm0", width, norm_mode);
  const std::int64_t z_count = static_cast<std::int64_t>(neighborhood) * neighborhood;
  head_ = Conv2d(store, name + ".head", width, 2 * z_count, {1, 1}, rng, {1, 1}, real(0.01));
  Tensor bias = head_.bias();
  auto grid = regular_offset_grid(neighborhood, real(1));
  std::copy(grid.begin(), grid.end(), bias.mutable_data().begin());
}

OffsetField OffsetPredictor::operator()(const Tensor& context, const Tensor& hidden, const Tensor& depth) const {
  const Tensor x = concat({context, hidden, depth}, 1);
  return {head_(relu(norm0_(conv0_(x))))};
}

Tensor sample_correlation(const Tensor& ref_feat, const Tensor& src_feat, const Tensor& depth,
                          const Camera& ref, const Camera& src, double scale, const OffsetField& offsets) {
  if (ref_feat.shape() != src_feat.shape() || ref_feat.rank() != 4 || ref_feat.dim(0) != 1) {
    throw ShapeError("sample_correlation: feature shapes " + shape_str(ref_feat.shape()) + " / " +
                     shape_str(src_feat.shape()) + " must match and be 1xFxHxW");
  }
  const std::int64_t f = ref_feat.dim(1), h = ref_feat.dim(2), w = ref_feat.dim(3);
  const std::int64_t z_count = offsets.samples();
  if (offsets.offsets.shape() != Shape{1, 2 * z_count, h, w}) {
    throw ShapeError("sample_correlation: offsets " + shape_str(offsets.offsets.shape()) +
                     " not aligned with features " + shape_str(ref_feat.shape()));
  }
  const Tensor base = project_map(depth, ref, src, scale);
  const Tensor base_tiled = reshape(tile(reshape(base, {1, 2, 1, h * w}), 2, z_count), {1, 2, z_count * h, w});
  const Tensor coords = add(base_tiled, reshape(offsets.offsets, {1, 2, z_count * h, w}));
  const Tensor sampled = reshape(grid_sample_bilinear(src_feat, coords), {1, f, z_count, h * w});
  const Tensor ref_tiled = tile(reshape(ref_feat, {1, f, 1, h * w}), 2, z_count);
  return reshape(sum(mul(ref_tiled, sampled), 1), {1, z_count, h, w});
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
