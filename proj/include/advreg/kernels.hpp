#pragma once

#include <algorithm>
#include <cstring>
#include <vector>

#include "advreg/errors.hpp"
#include "advreg/tensor.hpp"

namespace advreg::kernels {

// C[M x N] += A[M x K] * B[K x N], row-major. The axpy inner loop keeps unit
// stride on both C and B so it vectorizes; accumulation order is fixed, so
// results are bit-reproducible for identical inputs.
inline void gemm_acc(int m_dim, int k_dim, int n_dim, const double* a,
                     const double* b, double* c) {
  for (int m = 0; m < m_dim; ++m) {
    double* crow = c + static_cast<std::size_t>(m) * n_dim;
    const double* arow = a + static_cast<std::size_t>(m) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const double ak = arow[k];
      const double* brow = b + static_cast<std::size_t>(k) * n_dim;
      for (int n = 0; n < n_dim; ++n) crow[n] += ak * brow[n];
    }
  }
}

inline void transpose(int rows, int cols, const double* in, double* out) {
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out[static_cast<std::size_t>(c) * rows + r] =
          in[static_cast<std::size_t>(r) * cols + c];
}

// Same-padding convolution geometry: out = ceil(in / stride), padding split
// with the short side first (TensorFlow SAME convention).
struct ConvDims {
  int batch, cin, in_h, in_w;
  int cout, kh, kw, stride;
  int out_h, out_w;
  int pad_top, pad_left;
  int patch() const { return cin * kh * kw; }
  int pixels() const { return out_h * out_w; }
};

inline ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b,
                          int stride) {
  if (x.ndim() != 4) throw ShapeError("conv2d: input must be [N,C,H,W], got " + x.shape_str());
  if (w.ndim() != 4) throw ShapeError("conv2d: weight must be [F,C,kh,kw], got " + w.shape_str());
  if (stride <= 0) throw ShapeError("conv2d: stride must be positive");
  if (w.dim(1) != x.dim(1))
    throw ShapeError("conv2d: channel mismatch, input has " + std::to_string(x.dim(1)) +
                     " but kernel expects " + std::to_string(w.dim(1)));
  if (b.ndim() != 1 || b.dim(0) != w.dim(0))
    throw ShapeError("conv2d: bias must be [F]");
  if (w.dim(2) > x.dim(2) + w.dim(2) - 1 || w.dim(3) > x.dim(3) + w.dim(3) - 1)
    throw ShapeError("conv2d: kernel larger than padded input");

  ConvDims d;
  d.batch = x.dim(0);
  d.cin = x.dim(1);
  d.in_h = x.dim(2);
  d.in_w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.out_h = (d.in_h + stride - 1) / stride;
  d.out_w = (d.in_w + stride - 1) / stride;
  const int pad_h = std::max((d.out_h - 1) * stride + d.kh - d.in_h, 0);
  const int pad_w = std::max((d.out_w - 1) * stride + d.kw - d.in_w, 0);
  d.pad_top = pad_h / 2;
  d.pad_left = pad_w / 2;
  return d;
}

// col is [patch x pixels] for one batch item; zero padding outside the input.
inline void im2col(const double* x, const ConvDims& d, double* col) {
  const int pixels = d.pixels();
  int row = 0;
  for (int c = 0; c < d.cin; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * d.in_h * d.in_w;
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx, ++row) {
        double* out = col + static_cast<std::size_t>(row) * pixels;
        for (int oy = 0; oy < d.out_h; ++oy) {
          const int iy = oy * d.stride + ky - d.pad_top;
          double* orow = out + static_cast<std::size_t>(oy) * d.out_w;
          if (iy < 0 || iy >= d.in_h) {
            std::memset(orow, 0, sizeof(double) * d.out_w);
            continue;
          }
          const double* irow = plane + static_cast<std::size_t>(iy) * d.in_w;
          for (int ox = 0; ox < d.out_w; ++ox) {
            const int ix = ox * d.stride + kx - d.pad_left;
            orow[ox] = (ix < 0 || ix >= d.in_w) ? 0.0 : irow[ix];
          }
        }
      }
    }
  }
}

// Scatter-add of a column buffer back onto the input plane.
inline void col2im_add(const double* col, const ConvDims& d, double* dx) {
  const int pixels = d.pixels();
  int row = 0;
  for (int c = 0; c < d.cin; ++c) {
    double* plane = dx + static_cast<std::size_t>(c) * d.in_h * d.in_w;
    for (int ky = 0; ky < d.kh; ++ky) {
      for (int kx = 0; kx < d.kw; ++kx, ++row) {
        const double* src = col + static_cast<std::size_t>(row) * pixels;
        for (int oy = 0; oy < d.out_h; ++oy) {
          const int iy = oy * d.stride + ky - d.pad_top;
          if (iy < 0 || iy >= d.in_h) continue;
          double* irow = plane + static_cast<std::size_t>(iy) * d.in_w;
          const double* srow = src + static_cast<std::size_t>(oy) * d.out_w;
          for (int ox = 0; ox < d.out_w; ++ox) {
            const int ix = ox * d.stride + kx - d.pad_left;
            if (ix >= 0 && ix < d.in_w) irow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

inline Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                             int stride) {
  const ConvDims d = conv_dims(x, w, b, stride);
  Tensor y({d.batch, d.cout, d.out_h, d.out_w});
  const int patch = d.patch(), pixels = d.pixels();
  std::vector<double> col(static_cast<std::size_t>(patch) * pixels);
  const std::size_t in_item = static_cast<std::size_t>(d.cin) * d.in_h * d.in_w;
  const std::size_t out_item = static_cast<std::size_t>(d.cout) * pixels;
  for (int n = 0; n < d.batch; ++n) {
    im2col(x.data() + n * in_item, d, col.data());
    double* out = y.data() + n * out_item;
    for (int f = 0; f < d.cout; ++f) {
      const double bias = b[static_cast<std::size_t>(f)];
      double* orow = out + static_cast<std::size_t>(f) * pixels;
      for (int p = 0; p < pixels; ++p) orow[p] = bias;
    }
    gemm_acc(d.cout, patch, pixels, w.data(), col.data(), out);
  }
  return y;
}

struct ConvGrads {
  Tensor dx, dw, db;
};

inline ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& b,
                                 int stride, const Tensor& gy) {
  const ConvDims d = conv_dims(x, w, b, stride);
  ConvGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor(b.shape())};
  const int patch = d.patch(), pixels = d.pixels();
  std::vector<double> col(static_cast<std::size_t>(patch) * pixels);
  std::vector<double> col_t(col.size());
  std::vector<double> dcol(col.size());
  const std::size_t in_item = static_cast<std::size_t>(d.cin) * d.in_h * d.in_w;
  const std::size_t out_item = static_cast<std::size_t>(d.cout) * pixels;

  for (int n = 0; n < d.batch; ++n) {
    const double* gout = gy.data() + n * out_item;
    im2col(x.data() + n * in_item, d, col.data());

    // db[f] += sum_p g[f,p]
    for (int f = 0; f < d.cout; ++f) {
      const double* grow = gout + static_cast<std::size_t>(f) * pixels;
      double s = 0.0;
      for (int p = 0; p < pixels; ++p) s += grow[p];
      g.db[static_cast<std::size_t>(f)] += s;
    }

    // dW[f,.] += g[f,p] * col^T[p,.]
    transpose(patch, pixels, col.data(), col_t.data());
    for (int f = 0; f < d.cout; ++f) {
      const double* grow = gout + static_cast<std::size_t>(f) * pixels;
      double* wrow = g.dw.data() + static_cast<std::size_t>(f) * patch;
      for (int p = 0; p < pixels; ++p) {
        const double gv = grow[p];
        const double* crow = col_t.data() + static_cast<std::size_t>(p) * patch;
        for (int k = 0; k < patch; ++k) wrow[k] += gv * crow[k];
      }
    }

    // dcol[k,.] = sum_f W[f,k] * g[f,.]
    std::fill(dcol.begin(), dcol.end(), 0.0);
    for (int f = 0; f < d.cout; ++f) {
      const double* wrow = w.data() + static_cast<std::size_t>(f) * patch;
      const double* grow = gout + static_cast<std::size_t>(f) * pixels;
      for (int k = 0; k < patch; ++k) {
        const double wv = wrow[k];
        double* drow = dcol.data() + static_cast<std::size_t>(k) * pixels;
        for (int p = 0; p < pixels; ++p) drow[p] += wv * grow[p];
      }
    }
    col2im_add(dcol.data(), d, g.dx.data() + n * in_item);
  }
  return g;
}

inline Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1)
    throw ShapeError("dense: expected x[N,D], w[D,K], b[K]");
  if (x.dim(1) != w.dim(0))
    throw ShapeError("dense: inner dimensions disagree, x is " + x.shape_str() +
                     ", w is " + w.shape_str());
  if (b.dim(0) != w.dim(1)) throw ShapeError("dense: bias width mismatch");
  const int n_dim = x.dim(0), d_dim = x.dim(1), k_dim = w.dim(1);
  Tensor y({n_dim, k_dim});
  for (int n = 0; n < n_dim; ++n) {
    double* yrow = y.data() + static_cast<std::size_t>(n) * k_dim;
    for (int k = 0; k < k_dim; ++k) yrow[k] = b[static_cast<std::size_t>(k)];
  }
  gemm_acc(n_dim, d_dim, k_dim, x.data(), w.data(), y.data());
  return y;
}

struct DenseGrads {
  Tensor dx, dw, db;
};

inline DenseGrads dense_backward(const Tensor& x, const Tensor& w,
                                 const Tensor& gy) {
  const int n_dim = x.dim(0), d_dim = x.dim(1), k_dim = w.dim(1);
  DenseGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({k_dim})};
  for (int n = 0; n < n_dim; ++n) {
    const double* grow = gy.data() + static_cast<std::size_t>(n) * k_dim;
    const double* xrow = x.data() + static_cast<std::size_t>(n) * d_dim;
    double* dxrow = g.dx.data() + static_cast<std::size_t>(n) * d_dim;
    for (int k = 0; k < k_dim; ++k) g.db[static_cast<std::size_t>(k)] += grow[k];
    for (int d = 0; d < d_dim; ++d) {
      const double* wrow = w.data() + static_cast<std::size_t>(d) * k_dim;
      double s = 0.0;
      for (int k = 0; k < k_dim; ++k) s += grow[k] * wrow[k];
      dxrow[d] = s;
      const double xv = xrow[d];
      double* dwrow = g.dw.data() + static_cast<std::size_t>(d) * k_dim;
      for (int k = 0; k < k_dim; ++k) dwrow[k] += xv * grow[k];
    }
  }
  return g;
}

}  // namespace advreg::kernels
