#include "wsa/reference.hpp"

#include <algorithm>
#include <cmath>

#include "wsa/ops.hpp"

namespace wsa::ref {

Tensor conv2d(const Tensor& x, const ConvSpec& spec) {
  const Shape4 os = conv_out_shape(x.shape, spec);
  Tensor y(os);
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  for (int n = 0; n < os.n; ++n) {
    for (int oc = 0; oc < os.c; ++oc) {
      for (int oh = 0; oh < os.h; ++oh) {
        for (int ow = 0; ow < os.w; ++ow) {
          double acc = spec.bias ? (*spec.bias)[oc] : 0.0;
          for (int ic = 0; ic < icg; ++ic) {
            for (int kh = 0; kh < spec.kh; ++kh) {
              for (int kw = 0; kw < spec.kw; ++kw) {
                const int c = (oc / ocg) * icg + ic;
                const int ih = oh * spec.sh - spec.ph + kh;
                const int iw = ow * spec.sw - spec.pw + kw;
                if (ih < 0 || ih >= x.shape.h || iw < 0 || iw >= x.shape.w) continue;
                acc += spec.weights.at(oc, ic, kh, kw) * x.at(n, c, ih, iw);
              }
            }
          }
          y.at(n, oc, oh, ow) = acc;
        }
      }
    }
  }
  return y;
}

Tensor group_norm(const Tensor& x, int groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps) {
  Tensor y(x.shape);
  const int cg = x.shape.c / groups;
  for (int n = 0; n < x.shape.n; ++n) {
    for (int g = 0; g < groups; ++g) {
      double sum = 0.0;
      long count = 0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        for (int h = 0; h < x.shape.h; ++h) {
          for (int w = 0; w < x.shape.w; ++w) {
            sum += x.at(n, c, h, w);
            ++count;
          }
        }
      }
      const double mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        for (int h = 0; h < x.shape.h; ++h) {
          for (int w = 0; w < x.shape.w; ++w) {
            sq += (x.at(n, c, h, w) - mean) * (x.at(n, c, h, w) - mean);
          }
        }
      }
      const double var = sq / static_cast<double>(count);
      for (int c = g * cg; c < (g + 1) * cg; ++c) {
        for (int h = 0; h < x.shape.h; ++h) {
          for (int w = 0; w < x.shape.w; ++w) {
            const double xhat = (x.at(n, c, h, w) - mean) / std::sqrt(var + eps);
            y.at(n, c, h, w) = gamma[c] * xhat + beta[c];
          }
        }
      }
    }
  }
  return y;
}

Tensor avg_pool2d(const Tensor& x, int kh, int kw, int sh, int sw, int ph, int pw) {
  const Shape4 os = pool_out_shape(x.shape, kh, kw, sh, sw, ph, pw);
  Tensor y(os);
  for (int n = 0; n < os.n; ++n) {
    for (int c = 0; c < os.c; ++c) {
      for (int oh = 0; oh < os.h; ++oh) {
        for (int ow = 0; ow < os.w; ++ow) {
          double acc = 0.0;
          for (int kh_i = 0; kh_i < kh; ++kh_i) {
            for (int kw_i = 0; kw_i < kw; ++kw_i) {
              const int ih = oh * sh - ph + kh_i;
              const int iw = ow * sw - pw + kw_i;
              if (ih < 0 || ih >= x.shape.h || iw < 0 || iw >= x.shape.w) continue;
              acc += x.at(n, c, ih, iw);
            }
          }
          y.at(n, c, oh, ow) = acc / (static_cast<double>(kh) * kw);
        }
      }
    }
  }
  return y;
}

std::vector<double> scaled_dot_attention(std::span<const double> q, std::span<const double> k,
                                         std::span<const double> v, int mq, int mk, int d) {
  std::vector<double> out(static_cast<std::size_t>(mq) * d, 0.0);
  for (int i = 0; i < mq; ++i) {
    std::vector<double> scores(mk);
    for (int j = 0; j < mk; ++j) {
      double s = 0.0;
      for (int t = 0; t < d; ++t) s += q[i * d + t] * k[j * d + t];
      scores[j] = s / std::sqrt(static_cast<double>(d));
    }
    const std::vector<double> w = softmax(scores);
    for (int j = 0; j < mk; ++j) {
      for (int t = 0; t < d; ++t) out[i * d + t] += w[j] * v[j * d + t];
    }
  }
  return out;
}

std::vector<int> top_k(std::span<const double> scores, int k) {
  std::vector<bool> taken(scores.size(), false);
  std::vector<int> picked;
  for (int round = 0; round < k; ++round) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
      if (taken[i]) continue;
      if (best < 0 || scores[i] > scores[best]) best = i;
    }
    taken[best] = true;
    picked.push_back(best);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<double> softmax(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> e(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(x[i] - mx);
    total += e[i];
  }
  for (double& v : e) v /= total;
  return e;
}

}  // namespace wsa::ref
