// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/nn/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace artflow::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                Tensor<T>::shape_string(a.shape()) + " vs " +
                                Tensor<T>::shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const Var<T>& a, int rank, const char* op) {
  if (a.value().rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                ", got " + Tensor<T>::shape_string(a.shape()));
  }
}

template <typename T>
Tensor<T> scalar_tensor(T v) {
  return Tensor<T>({1}, v);
}

// Elementwise unary op with derivative expressed through (input, output).
template <typename T, typename F, typename D>
Var<T> unary(const Var<T>& a, F f, D dfdx) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  auto pa = a.node();
  return make_result<T>(std::move(y), {a}, [pa, dfdx](Node<T>& self) {
    Tensor<T>& ga = pa->grad_buffer();
    const Tensor<T>& xv = pa->value;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * dfdx(xv[i], self.value[i]);
  });
}

template <typename T>
void im2col(const T* img, int channels, int height, int width, int ksize, int stride, int pad,
            int out_h, int out_w, T* col) {
  const int out_hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = img + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < ksize; ++ki) {
      for (int kj = 0; kj < ksize; ++kj) {
        T* row = col + (static_cast<std::size_t>(c) * ksize * ksize + ki * ksize + kj) * out_hw;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          T* dst = row + oh * out_w;
          if (ih < 0 || ih >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * width;
          if (stride == 1) {
            int ow = 0;
            for (; ow < out_w && ow - pad + kj < 0; ++ow) dst[ow] = T(0);
            for (; ow < out_w && ow - pad + kj < width; ++ow) dst[ow] = src[ow - pad + kj];
            for (; ow < out_w; ++ow) dst[ow] = T(0);
          } else {
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = ow * stride - pad + kj;
              dst[ow] = (iw >= 0 && iw < width) ? src[iw] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int channels, int height, int width, int ksize, int stride, int pad,
                int out_h, int out_w, T* img) {
  const int out_hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    T* plane = img + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < ksize; ++ki) {
      for (int kj = 0; kj < ksize; ++kj) {
        const T* row = col + (static_cast<std::size_t>(c) * ksize * ksize + ki * ksize + kj) * out_hw;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) continue;
          T* dst = plane + static_cast<std::size_t>(ih) * width;
          const T* src = row + oh * out_w;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "add");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(std::move(y), {a, b}, [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      Tensor<T>& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      Tensor<T>& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "sub");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(std::move(y), {a, b}, [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      Tensor<T>& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      Tensor<T>& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "mul");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(std::move(y), {a, b}, [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      Tensor<T>& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor<T>& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return unary<T>(a, [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return unary<T>(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& row) {
  require_rank(x, 2, "add_row");
  const int batch = x.dim(0);
  const int dim = x.dim(1);
  if (static_cast<int>(row.value().size()) != dim) {
    throw std::invalid_argument("add_row: row length " + std::to_string(row.value().size()) +
                                " does not match " + std::to_string(dim));
  }
  Tensor<T> y(x.shape());
  for (int n = 0; n < batch; ++n)
    for (int j = 0; j < dim; ++j) y[n * dim + j] = x.value()[n * dim + j] + row.value()[j];
  auto px = x.node();
  auto pr = row.node();
  return make_result<T>(std::move(y), {x, row}, [px, pr, batch, dim](Node<T>& self) {
    if (px->requires_grad) {
      Tensor<T>& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pr->requires_grad) {
      Tensor<T>& g = pr->grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int j = 0; j < dim; ++j) g[j] += self.grad[n * dim + j];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary<T>(
      a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  return unary<T>(
      a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  return unary<T>(
      a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return unary<T>(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T s = 0;
  for (T v : a.value().values()) s += v;
  auto pa = a.node();
  return make_result<T>(scalar_tensor(s), {a}, [pa](Node<T>& self) {
    Tensor<T>& g = pa->grad_buffer();
    const T d = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  const T inv = T(1) / static_cast<T>(a.value().size());
  T s = 0;
  for (T v : a.value().values()) s += v;
  auto pa = a.node();
  return make_result<T>(scalar_tensor(s * inv), {a}, [pa, inv](Node<T>& self) {
    Tensor<T>& g = pa->grad_buffer();
    const T d = self.grad[0] * inv;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += d;
  });
}

template <typename T>
Var<T> l1_loss(const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "l1_loss");
  const std::size_t n = a.value().size();
  const T inv = T(1) / static_cast<T>(n);
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a.value()[i] - b.value()[i]);
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(scalar_tensor(s * inv), {a, b}, [pa, pb, inv, n](Node<T>& self) {
    const T d = self.grad[0] * inv;
    Tensor<T>* ga = pa->requires_grad ? &pa->grad_buffer() : nullptr;
    Tensor<T>* gb = pb->requires_grad ? &pb->grad_buffer() : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const T diff = pa->value[i] - pb->value[i];
      const T sgn = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
      if (ga) (*ga)[i] += d * sgn;
      if (gb) (*gb)[i] -= d * sgn;
    }
  });
}

template <typename T>
Var<T> hinge_real(const Var<T>& a) {
  return mean(relu(add_scalar(scale(a, T(-1)), T(1))));
}

template <typename T>
Var<T> hinge_fake(const Var<T>& a) {
  return mean(relu(add_scalar(a, T(1))));
}

template <typename T>
Var<T> kl_divergence(const Var<T>& mu, const Var<T>& logvar) {
  require_same(mu, logvar, "kl_divergence");
  require_rank(mu, 2, "kl_divergence");
  const int batch = mu.dim(0);
  const T inv_batch = T(1) / static_cast<T>(batch);
  T s = 0;
  for (std::size_t i = 0; i < mu.value().size(); ++i) {
    const T m = mu.value()[i];
    const T lv = logvar.value()[i];
    s += m * m + std::exp(lv) - lv - T(1);
  }
  auto pm = mu.node();
  auto pl = logvar.node();
  return make_result<T>(scalar_tensor(T(0.5) * s * inv_batch), {mu, logvar},
                        [pm, pl, inv_batch](Node<T>& self) {
                          const T d = self.grad[0] * T(0.5) * inv_batch;
                          if (pm->requires_grad) {
                            Tensor<T>& g = pm->grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += d * T(2) * pm->value[i];
                          }
                          if (pl->requires_grad) {
                            Tensor<T>& g = pl->grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += d * (std::exp(pl->value[i]) - T(1));
                          }
                        });
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, int start, int len) {
  require_rank(x, 2, "slice_cols");
  const int batch = x.dim(0);
  const int dim = x.dim(1);
  if (start < 0 || len < 0 || start + len > dim) throw std::out_of_range("slice_cols: range out of bounds");
  Tensor<T> y({batch, len});
  for (int n = 0; n < batch; ++n)
    for (int j = 0; j < len; ++j) y[n * len + j] = x.value()[n * dim + start + j];
  auto px = x.node();
  return make_result<T>(std::move(y), {x}, [px, batch, dim, start, len](Node<T>& self) {
    Tensor<T>& g = px->grad_buffer();
    for (int n = 0; n < batch; ++n)
      for (int j = 0; j < len; ++j) g[n * dim + start + j] += self.grad[n * len + j];
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  const int batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  if (b.dim(0) != batch || b.dim(2) != h || b.dim(3) != w) {
    throw std::invalid_argument("concat_channels: geometry mismatch");
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  Tensor<T> y({batch, ca + cb, h, w});
  for (int n = 0; n < batch; ++n) {
    std::copy_n(a.value().data() + n * ca * plane, ca * plane, y.data() + n * (ca + cb) * plane);
    std::copy_n(b.value().data() + n * cb * plane, cb * plane,
                y.data() + (n * (ca + cb) + ca) * plane);
  }
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(std::move(y), {a, b}, [pa, pb, batch, ca, cb, plane](Node<T>& self) {
    for (int n = 0; n < batch; ++n) {
      const T* src = self.grad.data() + n * (ca + cb) * plane;
      if (pa->requires_grad) {
        T* dst = pa->grad_buffer().data() + n * ca * plane;
        for (std::size_t i = 0; i < ca * plane; ++i) dst[i] += src[i];
      }
      if (pb->requires_grad) {
        T* dst = pb->grad_buffer().data() + n * cb * plane;
        for (std::size_t i = 0; i < cb * plane; ++i) dst[i] += src[ca * plane + i];
      }
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, std::vector<int> shape) {
  if (Tensor<T>::count(shape) != x.value().size()) throw std::invalid_argument("reshape: size mismatch");
  auto px = x.node();
  return make_result<T>(x.value().reshaped(std::move(shape)), {x}, [px](Node<T>& self) {
    Tensor<T>& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  const int batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin || weight.dim(3) != k) {
    throw std::invalid_argument("conv2d: weight " + Tensor<T>::shape_string(weight.shape()) +
                                " incompatible with input " + Tensor<T>::shape_string(x.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && static_cast<int>(bias.value().size()) != cout) {
    throw std::invalid_argument("conv2d: bias length mismatch");
  }
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  const int kdim = cin * k * k;
  const int ohw = oh * ow;
  Tensor<T> y({batch, cout, oh, ow});
  AlignedVector<T> col(static_cast<std::size_t>(kdim) * ohw);
  ConstMatMap<T> wm(weight.value().data(), cout, kdim);
  for (int n = 0; n < batch; ++n) {
    im2col(x.value().data() + static_cast<std::size_t>(n) * cin * h * w, cin, h, w, k, stride, pad, oh,
           ow, col.data());
    MatMap<T> ym(y.data() + static_cast<std::size_t>(n) * cout * ohw, cout, ohw);
    ym.noalias() = wm * ConstMatMap<T>(col.data(), kdim, ohw);
    if (has_bias) {
      for (int c = 0; c < cout; ++c) ym.row(c).array() += bias.value()[c];
    }
  }
  auto px = x.node();
  auto pw = weight.node();
  auto pb = has_bias ? bias.node() : nullptr;
  auto fn = [px, pw, pb, batch, cin, h, w, cout, k, stride, pad, oh, ow, kdim, ohw](Node<T>& self) {
    AlignedVector<T> colbuf(static_cast<std::size_t>(kdim) * ohw);
    ConstMatMap<T> wmat(pw->value.data(), cout, kdim);
    for (int n = 0; n < batch; ++n) {
      ConstMatMap<T> gy(self.grad.data() + static_cast<std::size_t>(n) * cout * ohw, cout, ohw);
      if (pw->requires_grad) {
        im2col(px->value.data() + static_cast<std::size_t>(n) * cin * h * w, cin, h, w, k, stride, pad,
               oh, ow, colbuf.data());
        MatMap<T> gw(pw->grad_buffer().data(), cout, kdim);
        gw.noalias() += gy * ConstMatMap<T>(colbuf.data(), kdim, ohw).transpose();
      }
      if (pb && pb->requires_grad) {
        Tensor<T>& gb = pb->grad_buffer();
        for (int c = 0; c < cout; ++c) gb[c] += gy.row(c).sum();
      }
      if (px->requires_grad) {
        MatMap<T> gcol(colbuf.data(), kdim, ohw);
        gcol.noalias() = wmat.transpose() * gy;
        col2im_add(colbuf.data(), cin, h, w, k, stride, pad, oh, ow,
                   px->grad_buffer().data() + static_cast<std::size_t>(n) * cin * h * w);
      }
    }
  };
  if (has_bias) return make_result<T>(std::move(y), {x, weight, bias}, fn);
  return make_result<T>(std::move(y), {x, weight}, fn);
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_rank(x, 2, "linear");
  const int batch = x.dim(0), in = x.dim(1), out = weight.dim(0);
  if (weight.dim(1) != in) throw std::invalid_argument("linear: weight/input mismatch");
  Tensor<T> y({batch, out});
  MatMap<T> ym(y.data(), batch, out);
  ym.noalias() = ConstMatMap<T>(x.value().data(), batch, in) *
                 ConstMatMap<T>(weight.value().data(), out, in).transpose();
  if (bias.defined()) {
    for (int n = 0; n < batch; ++n)
      for (int j = 0; j < out; ++j) ym(n, j) += bias.value()[j];
  }
  auto px = x.node();
  auto pw = weight.node();
  auto pb = bias.defined() ? bias.node() : nullptr;
  auto fn = [px, pw, pb, batch, in, out](Node<T>& self) {
    ConstMatMap<T> gy(self.grad.data(), batch, out);
    if (pw->requires_grad) {
      MatMap<T>(pw->grad_buffer().data(), out, in).noalias() +=
          gy.transpose() * ConstMatMap<T>(px->value.data(), batch, in);
    }
    if (pb && pb->requires_grad) {
      Tensor<T>& gb = pb->grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int j = 0; j < out; ++j) gb[j] += gy(n, j);
    }
    if (px->requires_grad) {
      MatMap<T>(px->grad_buffer().data(), batch, in).noalias() +=
          gy * ConstMatMap<T>(pw->value.data(), out, in);
    }
  };
  if (bias.defined()) return make_result<T>(std::move(y), {x, weight, bias}, fn);
  return make_result<T>(std::move(y), {x, weight}, fn);
}

namespace {

// Shared instance-normalization kernel. Fills xhat and per-plane 1/std.
template <typename T>
void normalize_planes(const Tensor<T>& x, T eps, Tensor<T>& xhat, std::vector<T>& inv_std) {
  const int planes = x.dim(0) * x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  xhat = Tensor<T>(x.shape());
  inv_std.assign(planes, T(0));
  for (int p = 0; p < planes; ++p) {
    const T* src = x.data() + p * hw;
    T m = 0;
    for (std::size_t i = 0; i < hw; ++i) m += src[i];
    m /= static_cast<T>(hw);
    T v = 0;
    for (std::size_t i = 0; i < hw; ++i) v += (src[i] - m) * (src[i] - m);
    v /= static_cast<T>(hw);
    const T is = T(1) / std::sqrt(v + eps);
    inv_std[p] = is;
    T* dst = xhat.data() + p * hw;
    for (std::size_t i = 0; i < hw; ++i) dst[i] = (src[i] - m) * is;
  }
}

// dx = inv_std * (g - mean(g) - xhat * mean(g * xhat)) for one plane.
template <typename T>
void normalize_backward_plane(const T* g, const T* xhat, T inv_std, std::size_t hw, T* dx) {
  T mg = 0, mgx = 0;
  for (std::size_t i = 0; i < hw; ++i) {
    mg += g[i];
    mgx += g[i] * xhat[i];
  }
  mg /= static_cast<T>(hw);
  mgx /= static_cast<T>(hw);
  for (std::size_t i = 0; i < hw; ++i) dx[i] += inv_std * (g[i] - mg - xhat[i] * mgx);
}

}  // namespace

template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps) {
  require_rank(x, 4, "instance_norm");
  auto xhat = std::make_shared<Tensor<T>>();
  auto inv_std = std::make_shared<std::vector<T>>();
  normalize_planes(x.value(), eps, *xhat, *inv_std);
  auto px = x.node();
  Tensor<T> y = *xhat;
  return make_result<T>(std::move(y), {x}, [px, xhat, inv_std](Node<T>& self) {
    const std::size_t hw = static_cast<std::size_t>(xhat->dim(2)) * xhat->dim(3);
    Tensor<T>& gx = px->grad_buffer();
    for (std::size_t p = 0; p < inv_std->size(); ++p) {
      normalize_backward_plane(self.grad.data() + p * hw, xhat->data() + p * hw, (*inv_std)[p], hw,
                               gx.data() + p * hw);
    }
  });
}

template <typename T>
Var<T> adain(const Var<T>& x, const Var<T>& params, int offset, T eps) {
  require_rank(x, 4, "adain");
  require_rank(params, 2, "adain");
  const int batch = x.dim(0), channels = x.dim(1);
  const int pbatch = params.dim(0), pdim = params.dim(1);
  if (pbatch != batch && pbatch != 1) throw std::invalid_argument("adain: parameter batch mismatch");
  if (offset < 0 || offset + 2 * channels > pdim) throw std::out_of_range("adain: parameter slice out of range");
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  auto xhat = std::make_shared<Tensor<T>>();
  auto inv_std = std::make_shared<std::vector<T>>();
  normalize_planes(x.value(), eps, *xhat, *inv_std);
  Tensor<T> y(x.shape());
  const T* pv = params.value().data();
  for (int n = 0; n < batch; ++n) {
    const int pn = pbatch == 1 ? 0 : n;
    for (int c = 0; c < channels; ++c) {
      const T s = pv[pn * pdim + offset + c];
      const T b = pv[pn * pdim + offset + channels + c];
      const std::size_t base = (static_cast<std::size_t>(n) * channels + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) y[base + i] = (*xhat)[base + i] * s + b;
    }
  }
  auto px = x.node();
  auto pp = params.node();
  return make_result<T>(std::move(y), {x, params},
                        [px, pp, xhat, inv_std, batch, channels, pbatch, pdim, offset, hw](Node<T>& self) {
                          std::vector<T> gscaled(hw);
                          for (int n = 0; n < batch; ++n) {
                            const int pn = pbatch == 1 ? 0 : n;
                            for (int c = 0; c < channels; ++c) {
                              const std::size_t base = (static_cast<std::size_t>(n) * channels + c) * hw;
                              const T* g = self.grad.data() + base;
                              const T* xh = xhat->data() + base;
                              if (pp->requires_grad) {
                                T gs = 0, gb = 0;
                                for (std::size_t i = 0; i < hw; ++i) {
                                  gs += g[i] * xh[i];
                                  gb += g[i];
                                }
                                Tensor<T>& gp = pp->grad_buffer();
                                gp[pn * pdim + offset + c] += gs;
                                gp[pn * pdim + offset + channels + c] += gb;
                              }
                              if (px->requires_grad) {
                                const T s = pp->value[pn * pdim + offset + c];
                                for (std::size_t i = 0; i < hw; ++i) gscaled[i] = g[i] * s;
                                normalize_backward_plane(gscaled.data(), xh, (*inv_std)[n * channels + c], hw,
                                                         px->grad_buffer().data() + base);
                              }
                            }
                          }
                        });
}

template <typename T>
Var<T> upsample_nearest2x(const Var<T>& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> y({x.dim(0), x.dim(1), 2 * h, 2 * w});
  for (int p = 0; p < planes; ++p) {
    const T* src = x.value().data() + static_cast<std::size_t>(p) * h * w;
    T* dst = y.data() + static_cast<std::size_t>(p) * 4 * h * w;
    for (int i = 0; i < 2 * h; ++i)
      for (int j = 0; j < 2 * w; ++j) dst[i * 2 * w + j] = src[(i / 2) * w + j / 2];
  }
  auto px = x.node();
  return make_result<T>(std::move(y), {x}, [px, planes, h, w](Node<T>& self) {
    Tensor<T>& g = px->grad_buffer();
    for (int p = 0; p < planes; ++p) {
      const T* src = self.grad.data() + static_cast<std::size_t>(p) * 4 * h * w;
      T* dst = g.data() + static_cast<std::size_t>(p) * h * w;
      for (int i = 0; i < 2 * h; ++i)
        for (int j = 0; j < 2 * w; ++j) dst[(i / 2) * w + j / 2] += src[i * 2 * w + j];
    }
  });
}

template <typename T>
Var<T> avg_pool2x(const Var<T>& x) {
  require_rank(x, 4, "avg_pool2x");
  const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw std::invalid_argument("avg_pool2x: odd spatial size");
  const int oh = h / 2, ow = w / 2;
  Tensor<T> y({x.dim(0), x.dim(1), oh, ow});
  for (int p = 0; p < planes; ++p) {
    const T* src = x.value().data() + static_cast<std::size_t>(p) * h * w;
    T* dst = y.data() + static_cast<std::size_t>(p) * oh * ow;
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        dst[i * ow + j] = T(0.25) * (src[2 * i * w + 2 * j] + src[2 * i * w + 2 * j + 1] +
                                     src[(2 * i + 1) * w + 2 * j] + src[(2 * i + 1) * w + 2 * j + 1]);
  }
  auto px = x.node();
  return make_result<T>(std::move(y), {x}, [px, planes, h, w, oh, ow](Node<T>& self) {
    Tensor<T>& g = px->grad_buffer();
    for (int p = 0; p < planes; ++p) {
      const T* src = self.grad.data() + static_cast<std::size_t>(p) * oh * ow;
      T* dst = g.data() + static_cast<std::size_t>(p) * h * w;
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          const T d = T(0.25) * src[i * ow + j];
          dst[2 * i * w + 2 * j] += d;
          dst[2 * i * w + 2 * j + 1] += d;
          dst[(2 * i + 1) * w + 2 * j] += d;
          dst[(2 * i + 1) * w + 2 * j + 1] += d;
        }
    }
  });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  require_rank(x, 4, "global_avg_pool");
  const int batch = x.dim(0), channels = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const T inv = T(1) / static_cast<T>(hw);
  Tensor<T> y({batch, channels});
  for (int p = 0; p < batch * channels; ++p) {
    T s = 0;
    const T* src = x.value().data() + p * hw;
    for (std::size_t i = 0; i < hw; ++i) s += src[i];
    y[p] = s * inv;
  }
  auto px = x.node();
  return make_result<T>(std::move(y), {x}, [px, batch, channels, hw, inv](Node<T>& self) {
    Tensor<T>& g = px->grad_buffer();
    for (int p = 0; p < batch * channels; ++p) {
      const T d = self.grad[p] * inv;
      T* dst = g.data() + p * hw;
      for (std::size_t i = 0; i < hw; ++i) dst[i] += d;
    }
  });
}

#define ARTFLOW_INSTANTIATE_OPS(T)                                                      \
  template Var<T> add(const Var<T>&, const Var<T>&);                                    \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                    \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                    \
  template Var<T> scale(const Var<T>&, T);                                              \
  template Var<T> add_scalar(const Var<T>&, T);                                         \
  template Var<T> add_row(const Var<T>&, const Var<T>&);                                \
  template Var<T> relu(const Var<T>&);                                                  \
  template Var<T> leaky_relu(const Var<T>&, T);                                         \
  template Var<T> tanh(const Var<T>&);                                                  \
  template Var<T> exp(const Var<T>&);                                                   \
  template Var<T> sum(const Var<T>&);                                                   \
  template Var<T> mean(const Var<T>&);                                                  \
  template Var<T> l1_loss(const Var<T>&, const Var<T>&);                                \
  template Var<T> hinge_real(const Var<T>&);                                            \
  template Var<T> hinge_fake(const Var<T>&);                                            \
  template Var<T> kl_divergence(const Var<T>&, const Var<T>&);                          \
  template Var<T> slice_cols(const Var<T>&, int, int);                                  \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                        \
  template Var<T> reshape(const Var<T>&, std::vector<int>);                             \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);        \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                  \
  template Var<T> instance_norm(const Var<T>&, T);                                      \
  template Var<T> adain(const Var<T>&, const Var<T>&, int, T);                          \
  template Var<T> upsample_nearest2x(const Var<T>&);                                    \
  template Var<T> avg_pool2x(const Var<T>&);                                            \
  template Var<T> global_avg_pool(const Var<T>&);

ARTFLOW_INSTANTIATE_OPS(float)
ARTFLOW_INSTANTIATE_OPS(double)

#undef ARTFLOW_INSTANTIATE_OPS

}  // namespace artflow::nn
