// Compares the OpenMP kernels against the serial reference implementations:
// wall-clock per call, speedup, and max abs deviation as a correctness check.
#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wsa/conv.hpp"
#include "wsa/ops.hpp"
#include "wsa/reference.hpp"
#include "wsa/rng.hpp"

using namespace wsa;

namespace {

double time_call(const std::function<void()>& fn, int iters) {
  fn();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iters; ++i) fn();
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return total / iters;
}

void report(const char* name, double serial_s, double parallel_s, double max_dev) {
  std::printf("%-22s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx   max|diff| %.2e\n",
              name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s, max_dev);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n\n", omp_get_max_threads());
#else
  std::printf("openmp disabled, serial build\n\n");
#endif

  SplitMix64 rng(7);

  {
    Tensor x = random_tensor({2, 16, 96, 96}, rng);
    ConvSpec spec = make_conv_spec<double>(16, 32, 3, 3, 1, 1, 1, 1, 1, true);
    fill_uniform(spec.weights, rng, -0.3, 0.3);
    const Tensor a = conv2d(x, spec);
    const Tensor b = ref::conv2d(x, spec);
    report("conv2d 3x3 16->32", time_call([&] { ref::conv2d(x, spec); }, 3),
           time_call([&] { conv2d(x, spec); }, 3), max_abs_diff(a, b));
  }
  {
    Tensor x = random_tensor({2, 32, 128, 128}, rng);
    ConvSpec spec = make_conv_spec<double>(32, 32, 3, 3, 1, 1, 1, 1, 32, true);
    fill_uniform(spec.weights, rng, -0.3, 0.3);
    const Tensor a = conv2d(x, spec);
    const Tensor b = ref::conv2d(x, spec);
    report("depthwise 3x3 c32", time_call([&] { ref::conv2d(x, spec); }, 3),
           time_call([&] { conv2d(x, spec); }, 3), max_abs_diff(a, b));
  }
  {
    Tensor x = random_tensor({4, 32, 64, 64}, rng);
    std::vector<double> gamma(32, 1.0), beta(32, 0.0);
    const Tensor a = group_norm<double>(x, 8, gamma, beta, 1e-5);
    const Tensor b = ref::group_norm(x, 8, gamma, beta, 1e-5);
    report("group_norm g8 c32", time_call([&] { ref::group_norm(x, 8, gamma, beta, 1e-5); }, 5),
           time_call([&] { group_norm<double>(x, 8, gamma, beta, 1e-5); }, 5),
           max_abs_diff(a, b));
  }
  {
    Tensor x = random_tensor({2, 16, 128, 128}, rng);
    const Tensor a = avg_pool2d(x, 7, 7, 1, 1, 3, 3);
    const Tensor b = ref::avg_pool2d(x, 7, 7, 1, 1, 3, 3);
    report("avg_pool 7x7", time_call([&] { ref::avg_pool2d(x, 7, 7, 1, 1, 3, 3); }, 3),
           time_call([&] { avg_pool2d(x, 7, 7, 1, 1, 3, 3); }, 3), max_abs_diff(a, b));
  }
  {
    const int mq = 1024, mk = 64, d = 32;
    std::vector<double> q(mq * d), k(mk * d), v(mk * d);
    SplitMix64 r2(9);
    for (auto* vec : {&q, &k, &v}) {
      for (double& x : *vec) x = r2.next_uniform(-1.0, 1.0);
    }
    const auto a = scaled_dot_attention<double>(q, k, v, mq, mk, d);
    const auto b = ref::scaled_dot_attention(q, k, v, mq, mk, d);
    double dev = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::fabs(a[i] - b[i]));
    report("attention 1024q 64k",
           time_call([&] { ref::scaled_dot_attention(q, k, v, mq, mk, d); }, 5),
           time_call([&] { scaled_dot_attention<double>(q, k, v, mq, mk, d); }, 5), dev);
  }
  return 0;
}
