#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fullfields/common.hpp"
#include "fullfields/tensor.hpp"

namespace ff {

// ---------------------------------------------------------------------------
// Activations (flat buffers, derivative expressed in terms of input).
// ---------------------------------------------------------------------------

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
inline double softplus_grad(double x) {  // sigmoid
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}
inline double gelu_grad(double x) {
  constexpr double k = 0.7978845608028654;
  double u = k * (x + 0.044715 * x * x * x);
  double t = std::tanh(u);
  double du = k * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// ---------------------------------------------------------------------------
// Dense layer: y = x W^T + b, x is [n x in] row-major.
// ---------------------------------------------------------------------------

class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in_dim, int out_dim)
      : W(name + ".weight", {size_t(out_dim), size_t(in_dim)}),
        b(name + ".bias", {size_t(out_dim)}) {}

  void init(Rng& rng, double scale) {
    W.fill_normal(rng, scale);
    std::fill(b.v.begin(), b.v.end(), 0.0);
  }

  int in_dim() const { return int(W.cols()); }
  int out_dim() const { return int(W.rows()); }

  MatrixRM forward(const MatrixRM& x) const {
    MatrixRM y = x * W.mat().transpose();
    y.rowwise() += ConstVecMap(b.v.data(), long(b.size())).transpose();
    return y;
  }

  // Accumulates parameter grads; returns grad wrt the input.
  MatrixRM backward(const MatrixRM& x, const MatrixRM& dy) {
    W.grad_mat().noalias() += dy.transpose() * x;
    VecMap(b.g.data(), long(b.size())).noalias() += dy.colwise().sum().transpose();
    return dy * W.mat();
  }

  std::vector<Tensor*> parameters() { return {&W, &b}; }

  Tensor W, b;
};

// ---------------------------------------------------------------------------
// 3D convolution over channel-major feature volumes.
//
// A volume with C channels at resolution R is a [C x R^3] row-major matrix;
// the spatial index is (x * R + y) * R + z. Forward runs as im2col + GEMM.
// ---------------------------------------------------------------------------

class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad),
        W(name + ".weight", {size_t(out_ch), size_t(in_ch) * kernel * kernel * kernel}),
        b(name + ".bias", {size_t(out_ch)}) {}

  void init(Rng& rng, double scale) {
    W.fill_normal(rng, scale);
    std::fill(b.v.begin(), b.v.end(), 0.0);
  }

  int out_resolution(int in_res) const { return (in_res + 2 * pad_ - kernel_) / stride_ + 1; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }

  MatrixRM forward(const MatrixRM& x, int in_res) {
    in_res_ = in_res;
    im2col(x, in_res);
    long n_out = cols_.cols();
    MatrixRM y = W.mat() * cols_;
    y.colwise() += ConstVecMap(b.v.data(), long(b.size()));
    (void)n_out;
    return y;  // [out_ch x out_res^3]
  }

  // Uses the im2col buffer cached by the latest forward.
  MatrixRM backward(const MatrixRM& dy, bool need_dx) {
    W.grad_mat().noalias() += dy * cols_.transpose();
    VecMap(b.g.data(), long(b.size())).noalias() += dy.rowwise().sum();
    if (!need_dx) return MatrixRM();
    MatrixRM dcols = W.mat().transpose() * dy;
    return col2im(dcols, in_res_);
  }

  std::vector<Tensor*> parameters() { return {&W, &b}; }

  Tensor W, b;

 private:
  void im2col(const MatrixRM& x, int in_res) {
    int out_res = out_resolution(in_res);
    long n_out = long(out_res) * out_res * out_res;
    long k3 = long(kernel_) * kernel_ * kernel_;
    cols_.resize(long(in_ch_) * k3, n_out);
    const long rr = long(in_res) * in_res;
    for (int ox = 0; ox < out_res; ++ox)
      for (int oy = 0; oy < out_res; ++oy)
        for (int oz = 0; oz < out_res; ++oz) {
          long col = (long(ox) * out_res + oy) * out_res + oz;
          long row = 0;
          for (int ci = 0; ci < in_ch_; ++ci) {
            const double* src = x.data() + long(ci) * x.cols();
            for (int kx = 0; kx < kernel_; ++kx) {
              int ix = ox * stride_ - pad_ + kx;
              for (int ky = 0; ky < kernel_; ++ky) {
                int iy = oy * stride_ - pad_ + ky;
                bool xy_ok = ix >= 0 && ix < in_res && iy >= 0 && iy < in_res;
                for (int kz = 0; kz < kernel_; ++kz, ++row) {
                  int iz = oz * stride_ - pad_ + kz;
                  cols_(row, col) = (xy_ok && iz >= 0 && iz < in_res)
                                        ? src[long(ix) * rr + long(iy) * in_res + iz]
                                        : 0.0;
                }
              }
            }
          }
        }
  }

  MatrixRM col2im(const MatrixRM& dcols, int in_res) const {
    int out_res = out_resolution(in_res);
    const long rr = long(in_res) * in_res;
    MatrixRM dx = MatrixRM::Zero(in_ch_, rr * in_res);
    for (int ox = 0; ox < out_res; ++ox)
      for (int oy = 0; oy < out_res; ++oy)
        for (int oz = 0; oz < out_res; ++oz) {
          long col = (long(ox) * out_res + oy) * out_res + oz;
          long row = 0;
          for (int ci = 0; ci < in_ch_; ++ci) {
            double* dst = dx.data() + long(ci) * dx.cols();
            for (int kx = 0; kx < kernel_; ++kx) {
              int ix = ox * stride_ - pad_ + kx;
              for (int ky = 0; ky < kernel_; ++ky) {
                int iy = oy * stride_ - pad_ + ky;
                bool xy_ok = ix >= 0 && ix < in_res && iy >= 0 && iy < in_res;
                for (int kz = 0; kz < kernel_; ++kz, ++row) {
                  int iz = oz * stride_ - pad_ + kz;
                  if (xy_ok && iz >= 0 && iz < in_res)
                    dst[long(ix) * rr + long(iy) * in_res + iz] += dcols(row, col);
                }
              }
            }
          }
        }
    return dx;
  }

  int in_ch_ = 0, out_ch_ = 0, kernel_ = 3, stride_ = 1, pad_ = 1;
  int in_res_ = 0;
  MatrixRM cols_;

 public:
  const MatrixRM& im2col_buffer() const { return cols_; }
};

// ---------------------------------------------------------------------------
// Trilinear resampling of a channel-major volume to another cubic resolution.
// Cell centers sit at (i + 0.5) / R in each axis; borders replicate.
// ---------------------------------------------------------------------------

struct AxisTap {
  int i0, i1;
  double w;  // weight of i1
};

inline std::vector<AxisTap> resize_taps(int src_res, int dst_res) {
  std::vector<AxisTap> taps(dst_res);
  for (int d = 0; d < dst_res; ++d) {
    double s = (double(d) + 0.5) * double(src_res) / double(dst_res) - 0.5;
    double f = std::floor(s);
    int i0 = int(f);
    double w = s - f;
    int i1 = i0 + 1;
    if (i0 < 0) { i0 = 0; i1 = 0; w = 0.0; }
    if (i1 > src_res - 1) { i1 = src_res - 1; if (i0 > src_res - 1) i0 = src_res - 1; }
    taps[d] = {i0, i1, w};
  }
  return taps;
}

inline MatrixRM trilinear_resize(const MatrixRM& x, int src_res, int dst_res) {
  auto taps = resize_taps(src_res, dst_res);
  const long C = x.rows();
  const long rr = long(src_res) * src_res;
  MatrixRM y(C, long(dst_res) * dst_res * dst_res);
  for (long c = 0; c < C; ++c) {
    const double* src = x.data() + c * x.cols();
    double* dst = y.data() + c * y.cols();
    long o = 0;
    for (int dx = 0; dx < dst_res; ++dx) {
      auto tx = taps[dx];
      for (int dy = 0; dy < dst_res; ++dy) {
        auto ty = taps[dy];
        for (int dz = 0; dz < dst_res; ++dz, ++o) {
          auto tz = taps[dz];
          auto at = [&](int i, int j, int k) { return src[long(i) * rr + long(j) * src_res + k]; };
          double v00 = at(tx.i0, ty.i0, tz.i0) * (1 - tz.w) + at(tx.i0, ty.i0, tz.i1) * tz.w;
          double v01 = at(tx.i0, ty.i1, tz.i0) * (1 - tz.w) + at(tx.i0, ty.i1, tz.i1) * tz.w;
          double v10 = at(tx.i1, ty.i0, tz.i0) * (1 - tz.w) + at(tx.i1, ty.i0, tz.i1) * tz.w;
          double v11 = at(tx.i1, ty.i1, tz.i0) * (1 - tz.w) + at(tx.i1, ty.i1, tz.i1) * tz.w;
          double v0 = v00 * (1 - ty.w) + v01 * ty.w;
          double v1 = v10 * (1 - ty.w) + v11 * ty.w;
          dst[o] = v0 * (1 - tx.w) + v1 * tx.w;
        }
      }
    }
  }
  return y;
}

// Adjoint of trilinear_resize: scatters dst grads back onto the src grid.
inline MatrixRM trilinear_resize_backward(const MatrixRM& dy, int src_res, int dst_res) {
  auto taps = resize_taps(src_res, dst_res);
  const long C = dy.rows();
  const long rr = long(src_res) * src_res;
  MatrixRM dx = MatrixRM::Zero(C, rr * src_res);
  for (long c = 0; c < C; ++c) {
    const double* g = dy.data() + c * dy.cols();
    double* dst = dx.data() + c * dx.cols();
    long o = 0;
    for (int ddx = 0; ddx < dst_res; ++ddx) {
      auto tx = taps[ddx];
      for (int ddy = 0; ddy < dst_res; ++ddy) {
        auto ty = taps[ddy];
        for (int ddz = 0; ddz < dst_res; ++ddz, ++o) {
          auto tz = taps[ddz];
          double gv = g[o];
          auto add = [&](int i, int j, int k, double w) {
            dst[long(i) * rr + long(j) * src_res + k] += w * gv;
          };
          add(tx.i0, ty.i0, tz.i0, (1 - tx.w) * (1 - ty.w) * (1 - tz.w));
          add(tx.i0, ty.i0, tz.i1, (1 - tx.w) * (1 - ty.w) * tz.w);
          add(tx.i0, ty.i1, tz.i0, (1 - tx.w) * ty.w * (1 - tz.w));
          add(tx.i0, ty.i1, tz.i1, (1 - tx.w) * ty.w * tz.w);
          add(tx.i1, ty.i0, tz.i0, tx.w * (1 - ty.w) * (1 - tz.w));
          add(tx.i1, ty.i0, tz.i1, tx.w * (1 - ty.w) * tz.w);
          add(tx.i1, ty.i1, tz.i0, tx.w * ty.w * (1 - tz.w));
          add(tx.i1, ty.i1, tz.i1, tx.w * ty.w * tz.w);
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Trilinear sampling of a cell-major latent grid ([K^3 rows x C cols], spatial
// index (x*K + y)*K + z) at arbitrary points of the unit cube.
// ---------------------------------------------------------------------------

struct PointTaps {
  std::array<long, 8> cell;
  std::array<double, 8> w;
};

inline PointTaps point_taps(const Vec3& p, int K) {
  PointTaps t;
  int i0[3], i1[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    double g = (p[a] + 0.5) * K - 0.5;
    double f = std::floor(g);
    int lo = int(f);
    double frac = g - f;
    int hi = lo + 1;
    if (lo < 0) { lo = 0; hi = 0; frac = 0.0; }
    if (hi > K - 1) { hi = K - 1; if (lo > K - 1) lo = K - 1; }
    i0[a] = lo;
    i1[a] = hi;
    w[a] = frac;
  }
  auto cell = [&](int x, int y, int z) { return (long(x) * K + y) * K + z; };
  int c = 0;
  for (int bx = 0; bx < 2; ++bx)
    for (int by = 0; by < 2; ++by)
      for (int bz = 0; bz < 2; ++bz, ++c) {
        t.cell[c] = cell(bx ? i1[0] : i0[0], by ? i1[1] : i0[1], bz ? i1[2] : i0[2]);
        t.w[c] = (bx ? w[0] : 1 - w[0]) * (by ? w[1] : 1 - w[1]) * (bz ? w[2] : 1 - w[2]);
      }
  return t;
}

}  // namespace ff
