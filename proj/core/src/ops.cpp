#include "ramdepth/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace ramdepth::inline RAMDEPTH_PRECISION {

namespace {

using MatR = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank(const Tensor& t, int rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
  }
}

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw ShapeError(std::string(op) + ": invalid axis " + std::to_string(axis) + " for rank " +
                     std::to_string(rank));
  }
  return axis;
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::int64_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= s[static_cast<std::size_t>(i)];
  r.extent = s[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

struct ConvGeometry {
  std::int64_t channels, height, width;
  std::int64_t kh, kw, sh, sw, ph, pw;
  std::int64_t out_h, out_w;

  std::int64_t col_rows() const { return channels * kh * kw; }
  std::int64_t col_cols() const { return out_h * out_w; }
  bool is_pointwise() const { return kh == 1 && kw == 1 && sh == 1 && sw == 1 && ph == 0 && pw == 0; }
};

void im2col(const real* x, const ConvGeometry& g, real* cols) {
  const std::int64_t pcount = g.col_cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
      for (std::int64_t kx = 0; kx < g.kw; ++kx) {
        real* row = cols + ((c * g.kh + ky) * g.kw + kx) * pcount;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.sh - g.ph + ky;
          real* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, real(0));
            continue;
          }
          const real* src = x + (c * g.height + iy) * g.width;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.sw - g.pw + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : real(0);
          }
        }
      }
    }
  }
}

void col2im_add(const real* cols, const ConvGeometry& g, real* x) {
  const std::int64_t pcount = g.col_cols();
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ky = 0; ky < g.kh; ++ky) {
      for (std::int64_t kx = 0; kx < g.kw; ++kx) {
        const real* row = cols + ((c * g.kh + ky) * g.kw + kx) * pcount;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= g.height) continue;
          real* dst = x + (c * g.height + iy) * g.width;
          const real* src = row + oy * g.out_w;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.sw - g.pw + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename Fwd, typename Bwd>
Tensor unary(const char* name, const Tensor& x, Fwd fwd, Bwd bwd_from_out) {
  auto xd = x.data();
  std::vector<real> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
  Tensor y = Tensor::from_data(x.shape(), std::move(out));
  if (needs_grad({&x})) {
    record_op(name, y, {x}, [x, y, bwd_from_out](std::span<const real> g) {
      auto gx = grad_buffer(x);
      auto xd = x.data();
      auto yd = y.data();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * bwd_from_out(xd[i], yd[i]);
    });
  }
  return y;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const std::optional<Tensor>& bias,
              IntPair stride, IntPair padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (stride[0] < 1 || stride[1] < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (padding[0] < 0 || padding[1] < 0) throw ShapeError("conv2d: padding must be >= 0");
  const auto& is = input.shape();
  const auto& ws = weight.shape();
  if (is[1] != ws[1]) {
    throw ShapeError("conv2d: input has " + std::to_string(is[1]) + " channels, weight " +
                     shape_str(ws) + " expects " + std::to_string(ws[1]));
  }
  const std::int64_t out_channels = ws[0];
  if (bias && (bias->rank() != 1 || bias->dim(0) != out_channels)) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias->shape()) + " does not match " +
                     std::to_string(out_channels) + " output channels");
  }
  ConvGeometry g{is[1], is[2], is[3], ws[2], ws[3], stride[0], stride[1], padding[0], padding[1], 0, 0};
  g.out_h = (g.height + 2 * g.ph - g.kh) / g.sh + 1;
  g.out_w = (g.width + 2 * g.pw - g.kw) / g.sw + 1;
  if (g.height + 2 * g.ph < g.kh || g.width + 2 * g.pw < g.kw) {
    throw ShapeError("conv2d: kernel " + shape_str(ws) + " larger than padded input " + shape_str(is));
  }
  const std::int64_t batch = is[0];
  const std::int64_t in_plane = g.channels * g.height * g.width;
  const std::int64_t out_plane = out_channels * g.col_cols();

  std::vector<real> out(static_cast<std::size_t>(batch * out_plane));
  std::vector<real> cols;
  if (!g.is_pointwise()) cols.resize(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
  CMapR w(weight.data().data(), out_channels, g.col_rows());
  for (std::int64_t n = 0; n < batch; ++n) {
    const real* xn = input.data().data() + n * in_plane;
    const real* colp = xn;
    if (!g.is_pointwise()) {
      im2col(xn, g, cols.data());
      colp = cols.data();
    }
    CMapR c(colp, g.col_rows(), g.col_cols());
    MapR y(out.data() + n * out_plane, out_channels, g.col_cols());
    y.noalias() = w * c;
    if (bias) {
      auto bd = bias->data();
      for (std::int64_t o = 0; o < out_channels; ++o) y.row(o).array() += bd[static_cast<std::size_t>(o)];
    }
  }
  Tensor result = Tensor::from_data({batch, out_channels, g.out_h, g.out_w}, std::move(out));

  std::vector<Tensor> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  if (needs_grad(std::span<const Tensor>(inputs))) {
    Tensor b = bias ? *bias : Tensor();
    record_op("conv2d", result, inputs, [input, weight, b, g, batch, in_plane, out_plane,
                                         out_channels](std::span<const real> grad_out) {
      auto gx = grad_buffer(input);
      auto gw = grad_buffer(weight);
      auto gb = grad_buffer(b);
      std::vector<real> cols;
      std::vector<real> dcols;
      if (!g.is_pointwise()) cols.resize(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
      if (!gx.empty() && !g.is_pointwise()) dcols.resize(cols.size());
      CMapR w(weight.data().data(), out_channels, g.col_rows());
      for (std::int64_t n = 0; n < batch; ++n) {
        CMapR dy(grad_out.data() + n * out_plane, out_channels, g.col_cols());
        if (!gb.empty()) {
          // Plain loop: Eigen's vectorized sum peels by pointer alignment,
          // which would make results depend on heap layout.
          for (std::int64_t o = 0; o < out_channels; ++o) {
            const real* row = grad_out.data() + n * out_plane + o * g.col_cols();
            real acc = 0;
            for (std::int64_t i = 0; i < g.col_cols(); ++i) acc += row[i];
            gb[static_cast<std::size_t>(o)] += acc;
          }
        }
        const real* xn = input.data().data() + n * in_plane;
        if (!gw.empty()) {
          const real* colp = xn;
          if (!g.is_pointwise()) {
            im2col(xn, g, cols.data());
            colp = cols.data();
          }
          CMapR c(colp, g.col_rows(), g.col_cols());
          MapR dw(gw.data(), out_channels, g.col_rows());
          dw.noalias() += dy * c.transpose();
        }
        if (!gx.empty()) {
          if (g.is_pointwise()) {
            MapR dx(gx.data() + n * in_plane, g.col_rows(), g.col_cols());
            dx.noalias() += w.transpose() * dy;
          } else {
            MapR dc(dcols.data(), g.col_rows(), g.col_cols());
            dc.noalias() = w.transpose() * dy;
            col2im_add(dcols.data(), g, gx.data() + n * in_plane);
          }
        }
      }
    });
  }
  return result;
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](real v) { return v > real(0) ? v : real(0); },
      [](real xv, real) { return xv > real(0) ? real(1) : real(0); });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](real v) {
        if (v >= 0) return real(1) / (real(1) + std::exp(-v));
        const real e = std::exp(v);
        return e / (real(1) + e);
      },
      [](real, real y) { return y * (real(1) - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](real v) { return std::tanh(v); }, [](real, real y) { return real(1) - y * y; });
}

Tensor softmax(const Tensor& x, int axis) {
  axis = normalize_axis(axis, x.rank(), "softmax");
  const auto sp = split_at(x.shape(), axis);
  auto xd = x.data();
  std::vector<real> out(xd.size());
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    for (std::int64_t i = 0; i < sp.inner; ++i) {
      const std::int64_t base = o * sp.extent * sp.inner + i;
      real mx = xd[static_cast<std::size_t>(base)];
      for (std::int64_t k = 1; k < sp.extent; ++k) mx = std::max(mx, xd[static_cast<std::size_t>(base + k * sp.inner)]);
      real total = 0;
      for (std::int64_t k = 0; k < sp.extent; ++k) {
        const auto idx = static_cast<std::size_t>(base + k * sp.inner);
        out[idx] = std::exp(xd[idx] - mx);
        total += out[idx];
      }
      for (std::int64_t k = 0; k < sp.extent; ++k) out[static_cast<std::size_t>(base + k * sp.inner)] /= total;
    }
  }
  Tensor y = Tensor::from_data(x.shape(), std::move(out));
  if (needs_grad({&x})) {
    record_op("softmax", y, {x}, [x, y, sp](std::span<const real> g) {
      auto gx = grad_buffer(x);
      auto yd = y.data();
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        for (std::int64_t i = 0; i < sp.inner; ++i) {
          const std::int64_t base = o * sp.extent * sp.inner + i;
          real dot = 0;
          for (std::int64_t k = 0; k < sp.extent; ++k) {
            const auto idx = static_cast<std::size_t>(base + k * sp.inner);
            dot += g[idx] * yd[idx];
          }
          for (std::int64_t k = 0; k < sp.extent; ++k) {
            const auto idx = static_cast<std::size_t>(base + k * sp.inner);
            gx[idx] += yd[idx] * (g[idx] - dot);
          }
        }
      }
    });
  }
  return y;
}

Tensor activation(ActivationKind kind, const Tensor& x, std::optional<int> axis) {
  switch (kind) {
    case ActivationKind::kRelu:
      return relu(x);
    case ActivationKind::kSigmoid:
      return sigmoid(x);
    case ActivationKind::kTanh:
      return tanh(x);
    case ActivationKind::kSoftmax:
      if (!axis) throw ShapeError("softmax activation requires an axis");
      return softmax(x, *axis);
  }
  throw ShapeError("unknown activation kind");
}

Tensor norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, NormMode mode, int groups) {
  require_rank(x, 4, "norm2d", "input");
  const auto& s = x.shape();
  const std::int64_t n_batch = s[0], channels = s[1], plane = s[2] * s[3];
  if (gamma.rank() != 1 || gamma.dim(0) != channels || beta.rank() != 1 || beta.dim(0) != channels) {
    throw ShapeError("norm2d: gamma/beta " + shape_str(gamma.shape()) + "/" + shape_str(beta.shape()) +
                     " do not match " + std::to_string(channels) + " channels");
  }
  if (mode == NormMode::kGroup && (groups < 1 || channels % groups != 0)) {
    throw ShapeError("norm2d: " + std::to_string(channels) + " channels not divisible into " +
                     std::to_string(groups) + " groups");
  }

  // A normalization set is a list of contiguous segments; within a segment
  // the channel index advances every `plane` elements.
  struct Segment {
    std::int64_t offset, length, channel;
  };
  std::vector<std::vector<Segment>> sets;
  if (mode == NormMode::kGroup) {
    const std::int64_t per_group = channels / groups;
    for (std::int64_t n = 0; n < n_batch; ++n) {
      for (std::int64_t gi = 0; gi < groups; ++gi) {
        const std::int64_t c0 = gi * per_group;
        sets.push_back({{(n * channels + c0) * plane, per_group * plane, c0}});
      }
    }
  } else {
    for (std::int64_t c = 0; c < channels; ++c) {
      std::vector<Segment> segs;
      for (std::int64_t n = 0; n < n_batch; ++n) segs.push_back({(n * channels + c) * plane, plane, c});
      sets.push_back(std::move(segs));
    }
  }

  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  std::vector<real> out(xd.size());
  std::vector<real> xhat(xd.size());
  std::vector<real> inv_std(sets.size());
  for (std::size_t si = 0; si < sets.size(); ++si) {
    double mean = 0;
    std::int64_t count = 0;
    for (const auto& seg : sets[si]) {
      for (std::int64_t i = 0; i < seg.length; ++i) mean += xd[static_cast<std::size_t>(seg.offset + i)];
      count += seg.length;
    }
    mean /= static_cast<double>(count);
    double var = 0;
    for (const auto& seg : sets[si]) {
      for (std::int64_t i = 0; i < seg.length; ++i) {
        const double d = xd[static_cast<std::size_t>(seg.offset + i)] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(count);
    const real istd = static_cast<real>(1.0 / std::sqrt(var + kNormEpsilon));
    inv_std[si] = istd;
    for (const auto& seg : sets[si]) {
      for (std::int64_t i = 0; i < seg.length; ++i) {
        const auto idx = static_cast<std::size_t>(seg.offset + i);
        const auto c = static_cast<std::size_t>(seg.channel + i / plane);
        xhat[idx] = static_cast<real>(xd[idx] - mean) * istd;
        out[idx] = gd[c] * xhat[idx] + bd[c];
      }
    }
  }
  Tensor y = Tensor::from_data(s, std::move(out));
  if (needs_grad({&x, &gamma, &beta})) {
    record_op("norm2d", y, {x, gamma, beta},
              [x, gamma, beta, sets = std::move(sets), xhat = std::move(xhat),
               inv_std = std::move(inv_std), plane](std::span<const real> g) {
                auto gx = grad_buffer(x);
                auto ggamma = grad_buffer(gamma);
                auto gbeta = grad_buffer(beta);
                auto gd = gamma.data();
                for (std::size_t si = 0; si < sets.size(); ++si) {
                  double sum_d = 0, sum_dx = 0;
                  std::int64_t count = 0;
                  for (const auto& seg : sets[si]) {
                    for (std::int64_t i = 0; i < seg.length; ++i) {
                      const auto idx = static_cast<std::size_t>(seg.offset + i);
                      const auto c = static_cast<std::size_t>(seg.channel + i / plane);
                      if (!ggamma.empty()) ggamma[c] += g[idx] * xhat[idx];
                      if (!gbeta.empty()) gbeta[c] += g[idx];
                      const double d = static_cast<double>(g[idx]) * gd[c];
                      sum_d += d;
                      sum_dx += d * xhat[idx];
                    }
                    count += seg.length;
                  }
                  if (gx.empty()) continue;
                  const double m = static_cast<double>(count);
                  for (const auto& seg : sets[si]) {
                    for (std::int64_t i = 0; i < seg.length; ++i) {
                      const auto idx = static_cast<std::size_t>(seg.offset + i);
                      const auto c = static_cast<std::size_t>(seg.channel + i / plane);
                      const double d = static_cast<double>(g[idx]) * gd[c];
                      gx[idx] += static_cast<real>(inv_std[si] * (d - sum_d / m - xhat[idx] * sum_dx / m));
                    }
                  }
                }
              });
  }
  return y;
}

namespace {

struct BilinearTap {
  std::int64_t index[4];  // -1 when the tap is off-grid
  real weight[4];
  real du[4];  // d weight / d u
  real dv[4];  // d weight / d v
};

BilinearTap bilinear_tap(real u, real v, std::int64_t height, std::int64_t width) {
  BilinearTap t{};
  for (int k = 0; k < 4; ++k) t.index[k] = -1;
  if (!(u >= real(-0.5) && u <= real(width) - real(0.5) && v >= real(-0.5) &&
        v <= real(height) - real(0.5))) {
    return t;
  }
  const real fx = std::floor(u), fy = std::floor(v);
  const auto x0 = static_cast<std::int64_t>(fx), y0 = static_cast<std::int64_t>(fy);
  const real ax = u - fx, ay = v - fy;
  const std::int64_t xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const std::int64_t ys[4] = {y0, y0, y0 + 1, y0 + 1};
  const real wx[4] = {real(1) - ax, ax, real(1) - ax, ax};
  const real wy[4] = {real(1) - ay, real(1) - ay, ay, ay};
  const real dwx[4] = {-1, 1, -1, 1};
  const real dwy[4] = {-1, -1, 1, 1};
  for (int k = 0; k < 4; ++k) {
    if (xs[k] < 0 || xs[k] >= width || ys[k] < 0 || ys[k] >= height) continue;
    t.index[k] = ys[k] * width + xs[k];
    t.weight[k] = wx[k] * wy[k];
    t.du[k] = dwx[k] * wy[k];
    t.dv[k] = wx[k] * dwy[k];
  }
  return t;
}

}  // namespace

Tensor grid_sample_bilinear(const Tensor& feat, const Tensor& coords) {
  require_rank(feat, 4, "grid_sample_bilinear", "features");
  require_rank(coords, 4, "grid_sample_bilinear", "coords");
  const auto& fs = feat.shape();
  const auto& cs = coords.shape();
  if (cs[0] != fs[0] || cs[1] != 2) {
    throw ShapeError("grid_sample_bilinear: coords " + shape_str(cs) + " incompatible with features " +
                     shape_str(fs));
  }
  const std::int64_t batch = fs[0], channels = fs[1], height = fs[2], width = fs[3];
  const std::int64_t samples = cs[2] * cs[3];
  const std::int64_t fplane = height * width;
  auto fd = feat.data();
  auto cd = coords.data();
  std::vector<real> out(static_cast<std::size_t>(batch * channels * samples), real(0));
  for (std::int64_t n = 0; n < batch; ++n) {
    const real* us = cd.data() + n * 2 * samples;
    const real* vs = us + samples;
    const real* fn = fd.data() + n * channels * fplane;
    real* on = out.data() + n * channels * samples;
    for (std::int64_t p = 0; p < samples; ++p) {
      const BilinearTap t = bilinear_tap(us[p], vs[p], height, width);
      for (int k = 0; k < 4; ++k) {
        if (t.index[k] < 0) continue;
        const real w = t.weight[k];
        const real* src = fn + t.index[k];
        for (std::int64_t c = 0; c < channels; ++c) on[c * samples + p] += w * src[c * fplane];
      }
    }
  }
  Tensor y = Tensor::from_data({batch, channels, cs[2], cs[3]}, std::move(out));
  if (needs_grad({&feat, &coords})) {
    record_op("grid_sample_bilinear", y, {feat, coords},
              [feat, coords, batch, channels, height, width, samples, fplane](std::span<const real> g) {
                auto gf = grad_buffer(feat);
                auto gc = grad_buffer(coords);
                auto fd = feat.data();
                auto cd = coords.data();
                for (std::int64_t n = 0; n < batch; ++n) {
                  const real* us = cd.data() + n * 2 * samples;
                  const real* vs = us + samples;
                  const real* fn = fd.data() + n * channels * fplane;
                  const real* gn = g.data() + n * channels * samples;
                  for (std::int64_t p = 0; p < samples; ++p) {
                    const BilinearTap t = bilinear_tap(us[p], vs[p], height, width);
                    real du = 0, dv = 0;
                    for (int k = 0; k < 4; ++k) {
                      if (t.index[k] < 0) continue;
                      for (std::int64_t c = 0; c < channels; ++c) {
                        const real go = gn[c * samples + p];
                        const auto fidx = static_cast<std::size_t>(n * channels * fplane + c * fplane + t.index[k]);
                        if (!gf.empty()) gf[fidx] += t.weight[k] * go;
                        const real f = fn[c * fplane + t.index[k]];
                        du += t.du[k] * f * go;
                        dv += t.dv[k] * f * go;
                      }
                    }
                    if (!gc.empty()) {
                      gc[static_cast<std::size_t>(n * 2 * samples + p)] += du;
                      gc[static_cast<std::size_t>(n * 2 * samples + samples + p)] += dv;
                    }
                  }
                }
              });
  }
  return y;
}

Tensor conv_gru(const Tensor& x, const Tensor& h, const GruWeights& weights, IntPair kernel) {
  require_rank(x, 4, "conv_gru", "input");
  require_rank(h, 4, "conv_gru", "hidden");
  if (x.dim(0) != h.dim(0) || x.dim(2) != h.dim(2) || x.dim(3) != h.dim(3)) {
    throw ShapeError("conv_gru: input " + shape_str(x.shape()) + " and hidden " + shape_str(h.shape()) +
                     " are not spatially aligned");
  }
  if (kernel[0] % 2 == 0 || kernel[1] % 2 == 0) throw ShapeError("conv_gru: kernel extents must be odd");
  const IntPair pad{kernel[0] / 2, kernel[1] / 2};
  const Tensor xh = concat({x, h}, 1);
  const Tensor z = sigmoid(conv2d(xh, weights.update_weight, weights.update_bias, {1, 1}, pad));
  const Tensor r = sigmoid(conv2d(xh, weights.reset_weight, weights.reset_bias, {1, 1}, pad));
  const Tensor q = tanh(conv2d(concat({x, mul(r, h)}, 1), weights.cand_weight, weights.cand_bias, {1, 1}, pad));
  // h' = (1 - z) h + z q
  return add(mul(affine(z, real(-1), real(1)), h), mul(z, q));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto ad = a.data(), bd = b.data();
  std::vector<real> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  Tensor y = Tensor::from_data(a.shape(), std::move(out));
  if (needs_grad({&a, &b})) {
    record_op("add", y, {a, b}, [a, b](std::span<const real> g) {
      accumulate_grad(a, g);
      accumulate_grad(b, g);
    });
  }
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto ad = a.data(), bd = b.data();
  std::vector<real> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
  Tensor y = Tensor::from_data(a.shape(), std::move(out));
  if (needs_grad({&a, &b})) {
    record_op("sub", y, {a, b}, [a, b](std::span<const real> g) {
      accumulate_grad(a, g);
      auto gb = grad_buffer(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto ad = a.data(), bd = b.data();
  std::vector<real> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  Tensor y = Tensor::from_data(a.shape(), std::move(out));
  if (needs_grad({&a, &b})) {
    record_op("mul", y, {a, b}, [a, b](std::span<const real> g) {
      auto ga = grad_buffer(a);
      auto gb = grad_buffer(b);
      auto ad = a.data(), bd = b.data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bd[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * ad[i];
    });
  }
  return y;
}

Tensor affine(const Tensor& x, real scale, real shift) {
  return unary(
      "affine", x, [scale, shift](real v) { return scale * v + shift; },
      [scale](real, real) { return scale; });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](real v) { return std::abs(v); },
      [](real v, real) { return v > real(0) ? real(1) : (v < real(0) ? real(-1) : real(0)); });
}

Tensor clamp_min(const Tensor& x, real lo) {
  return unary(
      "clamp_min", x, [lo](real v) { return v < lo ? lo : v; },
      [lo](real v, real) { return v < lo ? real(0) : real(1); });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int rank = parts.front().rank();
  axis = normalize_axis(axis, rank, "concat");
  Shape out_shape = parts.front().shape();
  out_shape[static_cast<std::size_t>(axis)] = 0;
  for (const auto& p : parts) {
    if (p.rank() != rank) throw ShapeError("concat: rank mismatch");
    for (int i = 0; i < rank; ++i) {
      if (i != axis && p.dim(i) != parts.front().dim(i)) {
        throw ShapeError("concat: shapes " + shape_str(parts.front().shape()) + " and " +
                         shape_str(p.shape()) + " differ off the concat axis");
      }
    }
    out_shape[static_cast<std::size_t>(axis)] += p.dim(axis);
  }
  const auto sp = split_at(out_shape, axis);
  std::vector<real> out(static_cast<std::size_t>(shape_numel(out_shape)));
  std::int64_t offset = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::int64_t block = p.dim(axis) * sp.inner;
    auto pd = p.data();
    for (std::int64_t o = 0; o < sp.outer; ++o) {
      std::copy_n(pd.data() + o * block, block, out.data() + o * sp.extent * sp.inner + offset * sp.inner);
    }
    offset += p.dim(axis);
  }
  Tensor y = Tensor::from_data(out_shape, std::move(out));
  if (needs_grad(std::span<const Tensor>(parts))) {
    record_op("concat", y, parts, [parts, offsets, sp, axis](std::span<const real> g) {
      for (std::size_t k = 0; k < parts.size(); ++k) {
        auto gp = grad_buffer(parts[k]);
        if (gp.empty()) continue;
        const std::int64_t block = parts[k].dim(axis) * sp.inner;
        for (std::int64_t o = 0; o < sp.outer; ++o) {
          const real* src = g.data() + o * sp.extent * sp.inner + offsets[k] * sp.inner;
          real* dst = gp.data() + o * block;
          for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return y;
}

Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t length) {
  axis = normalize_axis(axis, x.rank(), "slice");
  if (start < 0 || length < 0 || start + length > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of bounds for " + shape_str(x.shape()));
  }
  const auto sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = length;
  std::vector<real> out(static_cast<std::size_t>(sp.outer * length * sp.inner));
  auto xd = x.data();
  const std::int64_t block = length * sp.inner;
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    std::copy_n(xd.data() + (o * sp.extent + start) * sp.inner, block, out.data() + o * block);
  }
  Tensor y = Tensor::from_data(out_shape, std::move(out));
  if (needs_grad({&x})) {
    record_op("slice", y, {x}, [x, sp, start, block](std::span<const real> g) {
      auto gx = grad_buffer(x);
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        real* dst = gx.data() + (o * sp.extent + start) * sp.inner;
        const real* src = g.data() + o * block;
        for (std::int64_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor y = Tensor::from_data(std::move(shape), std::vector<real>(x.data().begin(), x.data().end()));
  if (needs_grad({&x})) {
    record_op("reshape", y, {x}, [x](std::span<const real> g) { accumulate_grad(x, g); });
  }
  return y;
}

Tensor tile(const Tensor& x, int axis, std::int64_t times) {
  axis = normalize_axis(axis, x.rank(), "tile");
  if (x.dim(axis) != 1) throw ShapeError("tile: axis must have extent 1, got " + shape_str(x.shape()));
  if (times < 1) throw ShapeError("tile: repeat count must be >= 1");
  const auto sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = times;
  std::vector<real> out(static_cast<std::size_t>(sp.outer * times * sp.inner));
  auto xd = x.data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    for (std::int64_t t = 0; t < times; ++t) {
      std::copy_n(xd.data() + o * sp.inner, sp.inner, out.data() + (o * times + t) * sp.inner);
    }
  }
  Tensor y = Tensor::from_data(out_shape, std::move(out));
  if (needs_grad({&x})) {
    record_op("tile", y, {x}, [x, sp, times](std::span<const real> g) {
      auto gx = grad_buffer(x);
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        for (std::int64_t t = 0; t < times; ++t) {
          const real* src = g.data() + (o * times + t) * sp.inner;
          real* dst = gx.data() + o * sp.inner;
          for (std::int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return y;
}

Tensor sum(const Tensor& x, int axis) {
  axis = normalize_axis(axis, x.rank(), "sum");
  const auto sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = 1;
  std::vector<real> out(static_cast<std::size_t>(sp.outer * sp.inner), real(0));
  auto xd = x.data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    real* dst = out.data() + o * sp.inner;
    for (std::int64_t k = 0; k < sp.extent; ++k) {
      const real* src = xd.data() + (o * sp.extent + k) * sp.inner;
      for (std::int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
  }
  Tensor y = Tensor::from_data(out_shape, std::move(out));
  if (needs_grad({&x})) {
    record_op("sum", y, {x}, [x, sp](std::span<const real> g) {
      auto gx = grad_buffer(x);
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        const real* src = g.data() + o * sp.inner;
        for (std::int64_t k = 0; k < sp.extent; ++k) {
          real* dst = gx.data() + (o * sp.extent + k) * sp.inner;
          for (std::int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return y;
}

Tensor sum_all(const Tensor& x) {
  auto xd = x.data();
  double total = 0;
  for (real v : xd) total += v;
  Tensor y = Tensor::scalar(static_cast<real>(total));
  if (needs_grad({&x})) {
    record_op("sum_all", y, {x}, [x](std::span<const real> g) {
      auto gx = grad_buffer(x);
      for (auto& v : gx) v += g[0];
    });
  }
  return y;
}

Tensor mean_all(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean_all: empty tensor");
  return affine(sum_all(x), real(1) / static_cast<real>(x.numel()), real(0));
}

}  // namespace ramdepth::inline RAMDEPTH_PRECISION
