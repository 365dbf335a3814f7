#include "wsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wsa {

namespace {

void check_affine(const Shape4& s, int groups, std::size_t gamma_len, std::size_t beta_len) {
  if (groups <= 0 || s.c % groups != 0) {
    throw ValidationError("group_norm: " + std::to_string(s.c) +
                          " channels not divisible by " + std::to_string(groups) + " groups");
  }
  if (gamma_len != static_cast<std::size_t>(s.c) || beta_len != static_cast<std::size_t>(s.c)) {
    throw ValidationError("group_norm: gamma/beta must have one entry per channel");
  }
}

}  // namespace

template <class T>
TensorT<T> group_norm(const TensorT<T>& x, int groups, std::span<const T> gamma,
                      std::span<const T> beta, double eps) {
  check_affine(x.shape, groups, gamma.size(), beta.size());
  if (eps <= 0.0) throw ValidationError("group_norm: eps must be positive");

  const int N = x.shape.n, C = x.shape.c, H = x.shape.h, W = x.shape.w;
  const int cg = C / groups;
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  const std::int64_t m = cg * hw;
  TensorT<T> y(x.shape);

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int g = 0; g < groups; ++g) {
      const T* base = x.data.data() + (static_cast<std::int64_t>(n) * C + g * cg) * hw;
      // Two-pass moments for accuracy.
      double mean = 0.0;
      for (std::int64_t i = 0; i < m; ++i) mean += static_cast<double>(base[i]);
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::int64_t i = 0; i < m; ++i) {
        const double dv = static_cast<double>(base[i]) - mean;
        var += dv * dv;
      }
      var /= static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + eps);
      T* out = y.data.data() + (static_cast<std::int64_t>(n) * C + g * cg) * hw;
      for (int c = 0; c < cg; ++c) {
        const double ga = static_cast<double>(gamma[g * cg + c]);
        const double be = static_cast<double>(beta[g * cg + c]);
        for (std::int64_t i = 0; i < hw; ++i) {
          const double xhat = (static_cast<double>(base[c * hw + i]) - mean) * inv;
          out[c * hw + i] = static_cast<T>(ga * xhat + be);
        }
      }
    }
  }
  return y;
}

GroupNormGrads group_norm_vjp(const Tensor& x, int groups, std::span<const double> gamma,
                              std::span<const double> beta, double eps, const Tensor& gy) {
  check_affine(x.shape, groups, gamma.size(), beta.size());
  if (!(gy.shape == x.shape)) throw ValidationError("group_norm_vjp: cotangent shape mismatch");

  const int N = x.shape.n, C = x.shape.c, H = x.shape.h, W = x.shape.w;
  const int cg = C / groups;
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  const std::int64_t m = cg * hw;

  GroupNormGrads grads;
  grads.gx = Tensor(x.shape);
  grads.ggamma.assign(C, 0.0);
  grads.gbeta.assign(C, 0.0);

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int g = 0; g < groups; ++g) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * C + g * cg) * hw;
      const double* xb = x.data.data() + off;
      const double* gb = gy.data.data() + off;
      double* out = grads.gx.data.data() + off;

      double mean = 0.0;
      for (std::int64_t i = 0; i < m; ++i) mean += xb[i];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::int64_t i = 0; i < m; ++i) var += (xb[i] - mean) * (xb[i] - mean);
      var /= static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + eps);

      // s1 = sum(gy*gamma), s2 = sum(gy*gamma*xhat) over the group.
      double s1 = 0.0, s2 = 0.0;
      for (int c = 0; c < cg; ++c) {
        const double ga = gamma[g * cg + c];
        for (std::int64_t i = 0; i < hw; ++i) {
          const double xhat = (xb[c * hw + i] - mean) * inv;
          s1 += gb[c * hw + i] * ga;
          s2 += gb[c * hw + i] * ga * xhat;
        }
      }
      const double inv_m = 1.0 / static_cast<double>(m);
      for (int c = 0; c < cg; ++c) {
        const double ga = gamma[g * cg + c];
        for (std::int64_t i = 0; i < hw; ++i) {
          const double xhat = (xb[c * hw + i] - mean) * inv;
          out[c * hw + i] = inv * (gb[c * hw + i] * ga - s1 * inv_m - xhat * s2 * inv_m);
        }
      }
    }
  }

  // Affine gradients reduce over N, H, W per channel.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    const int g = c / cg;
    double gg = 0.0, gbv = 0.0;
    for (int n = 0; n < N; ++n) {
      const std::int64_t goff = (static_cast<std::int64_t>(n) * C + g * cg) * hw;
      const double* xb = x.data.data() + goff;
      double mean = 0.0;
      for (std::int64_t i = 0; i < m; ++i) mean += xb[i];
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::int64_t i = 0; i < m; ++i) var += (xb[i] - mean) * (xb[i] - mean);
      var /= static_cast<double>(m);
      const double inv = 1.0 / std::sqrt(var + eps);

      const std::int64_t coff = (static_cast<std::int64_t>(n) * C + c) * hw;
      const double* xc = x.data.data() + coff;
      const double* gc = gy.data.data() + coff;
      for (std::int64_t i = 0; i < hw; ++i) {
        gg += gc[i] * (xc[i] - mean) * inv;
        gbv += gc[i];
      }
    }
    grads.ggamma[c] = gg;
    grads.gbeta[c] = gbv;
  }
  (void)beta;
  return grads;
}

template <class T>
TensorT<T> activation(const TensorT<T>& x, Activation kind) {
  TensorT<T> y(x.shape);
  const std::int64_t n = x.numel();
  const T* xd = x.data.data();
  T* yd = y.data.data();
  if (kind == Activation::kRelu) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) yd[i] = xd[i] > T(0) ? xd[i] : T(0);
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) yd[i] = T(1) / (T(1) + std::exp(-xd[i]));
  }
  return y;
}

Tensor activation_vjp(const Tensor& x, Activation kind, const Tensor& gy) {
  if (!(gy.shape == x.shape)) throw ValidationError("activation_vjp: cotangent shape mismatch");
  Tensor gx(x.shape);
  const std::int64_t n = x.numel();
  if (kind == Activation::kRelu) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) gx.data[i] = x.data[i] > 0.0 ? gy.data[i] : 0.0;
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const double s = sigmoid(x.data[i]);
      gx.data[i] = gy.data[i] * s * (1.0 - s);
    }
  }
  return gx;
}

std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw ValidationError("softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> s(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s[i] = std::exp(x[i] - mx);
    total += s[i];
  }
  for (double& v : s) v /= total;
  return s;
}

std::vector<double> softmax_vjp(std::span<const double> s, std::span<const double> g) {
  if (s.size() != g.size()) throw ValidationError("softmax_vjp: size mismatch");
  double inner = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) inner += s[i] * g[i];
  std::vector<double> gx(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) gx[i] = s[i] * (g[i] - inner);
  return gx;
}

Shape4 pool_out_shape(const Shape4& in, int kh, int kw, int sh, int sw, int ph, int pw) {
  if (kh < 1 || kw < 1 || sh < 1 || sw < 1 || ph < 0 || pw < 0) {
    throw ValidationError("avg_pool2d: kernel/stride must be >= 1 and padding >= 0");
  }
  const int num_h = in.h + 2 * ph - kh;
  const int num_w = in.w + 2 * pw - kw;
  if (num_h < 0 || num_w < 0 || num_h % sh != 0 || num_w % sw != 0) {
    throw ValidationError("avg_pool2d: non-positive or non-integral output dims");
  }
  return Shape4{in.n, in.c, num_h / sh + 1, num_w / sw + 1};
}

template <class T>
TensorT<T> avg_pool2d(const TensorT<T>& x, int kh, int kw, int sh, int sw, int ph, int pw) {
  const Shape4 os = pool_out_shape(x.shape, kh, kw, sh, sw, ph, pw);
  TensorT<T> y(os);
  const int NC = x.shape.n * x.shape.c;
  const int H = x.shape.h, W = x.shape.w, HO = os.h, WO = os.w;
  const double inv_win = 1.0 / (static_cast<double>(kh) * kw);

#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < NC; ++nc) {
    const T* xp = x.data.data() + static_cast<std::int64_t>(nc) * H * W;
    T* yp = y.data.data() + static_cast<std::int64_t>(nc) * HO * WO;
    for (int oh = 0; oh < HO; ++oh) {
      for (int ow = 0; ow < WO; ++ow) {
        double acc = 0.0;
        for (int ih = oh * sh - ph; ih < oh * sh - ph + kh; ++ih) {
          if (ih < 0 || ih >= H) continue;
          for (int iw = ow * sw - pw; iw < ow * sw - pw + kw; ++iw) {
            if (iw < 0 || iw >= W) continue;
            acc += static_cast<double>(xp[ih * W + iw]);
          }
        }
        yp[oh * WO + ow] = static_cast<T>(acc * inv_win);
      }
    }
  }
  return y;
}

Tensor avg_pool2d_vjp(const Shape4& in_shape, int kh, int kw, int sh, int sw, int ph,
                      int pw, const Tensor& gy) {
  const Shape4 os = pool_out_shape(in_shape, kh, kw, sh, sw, ph, pw);
  if (!(gy.shape == os)) throw ValidationError("avg_pool2d_vjp: cotangent shape mismatch");
  Tensor gx(in_shape);
  const int NC = in_shape.n * in_shape.c;
  const int H = in_shape.h, W = in_shape.w, HO = os.h, WO = os.w;
  const double inv_win = 1.0 / (static_cast<double>(kh) * kw);

#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < NC; ++nc) {
    const double* gp = gy.data.data() + static_cast<std::int64_t>(nc) * HO * WO;
    double* xp = gx.data.data() + static_cast<std::int64_t>(nc) * H * W;
    for (int ih = 0; ih < H; ++ih) {
      // Windows with oh*sh - ph <= ih <= oh*sh - ph + kh - 1.
      for (int iw = 0; iw < W; ++iw) {
        double acc = 0.0;
        for (int oh = 0; oh < HO; ++oh) {
          const int dh = ih - (oh * sh - ph);
          if (dh < 0) break;
          if (dh >= kh) continue;
          for (int ow = 0; ow < WO; ++ow) {
            const int dw = iw - (ow * sw - pw);
            if (dw < 0) break;
            if (dw >= kw) continue;
            acc += gp[oh * WO + ow];
          }
        }
        xp[ih * W + iw] = acc * inv_win;
      }
    }
  }
  return gx;
}

std::vector<int> top_k(std::span<const double> scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k < 1 || k > n) {
    throw ValidationError("top_k: k=" + std::to_string(k) + " out of range for " +
                          std::to_string(n) + " scores");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Stable ordering by descending score; ties keep the smaller index first.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

template <class T>
std::vector<T> scaled_dot_attention(std::span<const T> q, std::span<const T> k,
                                    std::span<const T> v, int mq, int mk, int d) {
  if (mq < 1 || mk < 1 || d < 1) throw ValidationError("attention: dims must be positive");
  if (q.size() != static_cast<std::size_t>(mq) * d || k.size() != static_cast<std::size_t>(mk) * d ||
      v.size() != static_cast<std::size_t>(mk) * d) {
    throw ValidationError("attention: q/k/v sizes inconsistent with (mq, mk, d)");
  }
  std::vector<T> out(static_cast<std::size_t>(mq) * d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

#pragma omp parallel for schedule(static)
  for (int i = 0; i < mq; ++i) {
    std::vector<double> row(mk);
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < mk; ++j) {
      double s = 0.0;
      for (int t = 0; t < d; ++t) {
        s += static_cast<double>(q[static_cast<std::size_t>(i) * d + t]) *
             static_cast<double>(k[static_cast<std::size_t>(j) * d + t]);
      }
      row[j] = s * scale;
      mx = std::max(mx, row[j]);
    }
    double total = 0.0;
    for (int j = 0; j < mk; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (int t = 0; t < d; ++t) {
      double acc = 0.0;
      for (int j = 0; j < mk; ++j) {
        acc += row[j] * static_cast<double>(v[static_cast<std::size_t>(j) * d + t]);
      }
      out[static_cast<std::size_t>(i) * d + t] = static_cast<T>(acc / total);
    }
  }
  return out;
}

AttentionGrads scaled_dot_attention_vjp(std::span<const double> q, std::span<const double> k,
                                        std::span<const double> v, int mq, int mk, int d,
                                        std::span<const double> go) {
  if (go.size() != static_cast<std::size_t>(mq) * d) {
    throw ValidationError("attention_vjp: cotangent size mismatch");
  }
  AttentionGrads grads;
  grads.gq.assign(static_cast<std::size_t>(mq) * d, 0.0);
  grads.gk.assign(static_cast<std::size_t>(mk) * d, 0.0);
  grads.gv.assign(static_cast<std::size_t>(mk) * d, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  // Serial over query rows: gk/gv accumulate across rows and the fixed order
  // keeps results reproducible.
  std::vector<double> a(mk), da(mk), ds(mk);
  for (int i = 0; i < mq; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < mk; ++j) {
      double s = 0.0;
      for (int t = 0; t < d; ++t) s += q[static_cast<std::size_t>(i) * d + t] * k[static_cast<std::size_t>(j) * d + t];
      a[j] = s * scale;
      mx = std::max(mx, a[j]);
    }
    double total = 0.0;
    for (int j = 0; j < mk; ++j) {
      a[j] = std::exp(a[j] - mx);
      total += a[j];
    }
    for (int j = 0; j < mk; ++j) a[j] /= total;

    // dV += a^T go ; da = go V^T
    for (int j = 0; j < mk; ++j) {
      double acc = 0.0;
      for (int t = 0; t < d; ++t) {
        const double g = go[static_cast<std::size_t>(i) * d + t];
        grads.gv[static_cast<std::size_t>(j) * d + t] += a[j] * g;
        acc += g * v[static_cast<std::size_t>(j) * d + t];
      }
      da[j] = acc;
    }
    // Row softmax backward.
    double inner = 0.0;
    for (int j = 0; j < mk; ++j) inner += da[j] * a[j];
    for (int j = 0; j < mk; ++j) ds[j] = a[j] * (da[j] - inner) * scale;
    // dQ_i += ds K ; dK_j += ds_j Q_i
    for (int j = 0; j < mk; ++j) {
      for (int t = 0; t < d; ++t) {
        grads.gq[static_cast<std::size_t>(i) * d + t] += ds[j] * k[static_cast<std::size_t>(j) * d + t];
        grads.gk[static_cast<std::size_t>(j) * d + t] += ds[j] * q[static_cast<std::size_t>(i) * d + t];
      }
    }
  }
  return grads;
}

template <class T>
TensorT<T> upsample_nearest2x(const TensorT<T>& x) {
  TensorT<T> y(Shape4{x.shape.n, x.shape.c, x.shape.h * 2, x.shape.w * 2});
  const int NC = x.shape.n * x.shape.c;
  const int H = x.shape.h, W = x.shape.w;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < NC; ++nc) {
    const T* xp = x.data.data() + static_cast<std::int64_t>(nc) * H * W;
    T* yp = y.data.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
    for (int h = 0; h < 2 * H; ++h) {
      for (int w = 0; w < 2 * W; ++w) {
        yp[h * 2 * W + w] = xp[(h / 2) * W + w / 2];
      }
    }
  }
  return y;
}

Tensor upsample_nearest2x_vjp(const Tensor& gy) {
  if (gy.shape.h % 2 != 0 || gy.shape.w % 2 != 0) {
    throw ValidationError("upsample_nearest2x_vjp: cotangent dims must be even");
  }
  Tensor gx(Shape4{gy.shape.n, gy.shape.c, gy.shape.h / 2, gy.shape.w / 2});
  const int NC = gx.shape.n * gx.shape.c;
  const int H = gx.shape.h, W = gx.shape.w;
#pragma omp parallel for schedule(static)
  for (int nc = 0; nc < NC; ++nc) {
    const double* gp = gy.data.data() + static_cast<std::int64_t>(nc) * 4 * H * W;
    double* xp = gx.data.data() + static_cast<std::int64_t>(nc) * H * W;
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        xp[h * W + w] = gp[(2 * h) * 2 * W + 2 * w] + gp[(2 * h) * 2 * W + 2 * w + 1] +
                        gp[(2 * h + 1) * 2 * W + 2 * w] + gp[(2 * h + 1) * 2 * W + 2 * w + 1];
      }
    }
  }
  return gx;
}

template TensorF group_norm<float>(const TensorF&, int, std::span<const float>,
                                   std::span<const float>, double);
template Tensor group_norm<double>(const Tensor&, int, std::span<const double>,
                                   std::span<const double>, double);
template TensorF activation<float>(const TensorF&, Activation);
template Tensor activation<double>(const Tensor&, Activation);
template TensorF avg_pool2d<float>(const TensorF&, int, int, int, int, int, int);
template Tensor avg_pool2d<double>(const Tensor&, int, int, int, int, int, int);
template std::vector<float> scaled_dot_attention<float>(std::span<const float>,
                                                        std::span<const float>,
                                                        std::span<const float>, int, int, int);
template std::vector<double> scaled_dot_attention<double>(std::span<const double>,
                                                          std::span<const double>,
                                                          std::span<const double>, int, int, int);
template TensorF upsample_nearest2x<float>(const TensorF&);
template Tensor upsample_nearest2x<double>(const Tensor&);

}  // namespace wsa
