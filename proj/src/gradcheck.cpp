#include "wsa/gradcheck.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

namespace wsa {

namespace {

constexpr int kProbes = 8;
constexpr double kStep = 1e-5;

double inner_all(const Tensor& gx, std::span<const Tensor> gp, const Tensor& dx,
                 std::span<const Tensor> dp) {
  double acc = dot(gx.data, dx.data);
  for (std::size_t i = 0; i < gp.size(); ++i) acc += dot(gp[i].data, dp[i].data);
  return acc;
}

}  // namespace

double finite_diff_check(const DiffOp& op, const Tensor& x, std::span<const Tensor> params,
                         std::uint64_t seed) {
  if (!op.forward) throw ValidationError("finite_diff_check: op '" + op.name + "' lacks a forward");
  if (!op.vjp) throw ValidationError("finite_diff_check: op '" + op.name + "' lacks a VJP");

  SplitMix64 rng(seed);
  const Tensor y0 = op.forward(x, params);

  double max_rel = 0.0;
  for (int probe = 0; probe < kProbes; ++probe) {
    Tensor u(y0.shape);
    fill_uniform(u, rng, -1.0, 1.0);

    // Direction over x and all params, scaled per coordinate by max(1, |v|).
    Tensor dx(x.shape);
    std::vector<Tensor> dp;
    dp.reserve(params.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) {
      dx.data[i] = rng.next_uniform(-1.0, 1.0) * std::max(1.0, std::fabs(x.data[i]));
    }
    for (const Tensor& p : params) {
      Tensor d(p.shape);
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        d.data[i] = rng.next_uniform(-1.0, 1.0) * std::max(1.0, std::fabs(p.data[i]));
      }
      dp.push_back(std::move(d));
    }

    const BlockGrads grads = op.vjp(x, params, u);
    if (grads.gparams.size() != params.size()) {
      throw ValidationError("finite_diff_check: op '" + op.name +
                            "' returned wrong parameter gradient count");
    }
    const double analytic = inner_all(grads.gx, grads.gparams, dx, dp);

    auto shifted_eval = [&](double sign) {
      Tensor xs = x;
      for (std::size_t i = 0; i < xs.data.size(); ++i) xs.data[i] += sign * kStep * dx.data[i];
      std::vector<Tensor> ps(params.begin(), params.end());
      for (std::size_t p = 0; p < ps.size(); ++p) {
        for (std::size_t i = 0; i < ps[p].data.size(); ++i) {
          ps[p].data[i] += sign * kStep * dp[p].data[i];
        }
      }
      return dot(op.forward(xs, ps).data, u.data);
    };
    const double numeric = (shifted_eval(1.0) - shifted_eval(-1.0)) / (2.0 * kStep);

    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
  }
  return max_rel;
}

DiffOp with_flipped_vjp(const DiffOp& op) {
  DiffOp flipped = op;
  flipped.name = op.name + "_flipped";
  auto inner = op.vjp;
  flipped.vjp = [inner](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
    BlockGrads g = inner(x, params, gy);
    for (double& v : g.gx.data) v = -v;
    for (Tensor& t : g.gparams) {
      for (double& v : t.data) v = -v;
    }
    return g;
  };
  return flipped;
}

GradcheckReport gradcheck_suite(std::span<const RegisteredOp> registry, std::uint64_t seed,
                                double tolerance) {
  if (registry.empty()) throw ValidationError("gradcheck_suite: nothing to check");
  const auto start = std::chrono::steady_clock::now();

  GradcheckReport report;
  report.seed = seed;
  report.tolerance = tolerance;
  report.all_pass = true;

  std::uint64_t case_seed = seed;
  for (const RegisteredOp& reg : registry) {
    for (const GradcheckCase& c : reg.cases) {
      SplitMix64 rng(case_seed++);
      auto [x, params] = c.make(rng);
      GradcheckResult r;
      r.op = reg.op.name;
      r.label = c.label;
      r.max_rel_err = finite_diff_check(reg.op, x, params, rng.next_u64());
      r.pass = r.max_rel_err <= tolerance;
      report.all_pass = report.all_pass && r.pass;
      report.results.push_back(std::move(r));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string gradcheck_report_json(const GradcheckReport& report) {
  nlohmann::json ops = nlohmann::json::array();
  for (const GradcheckResult& r : report.results) {
    ops.push_back({{"op", r.op}, {"case", r.label}, {"max_rel_err", r.max_rel_err}, {"pass", r.pass}});
  }
  nlohmann::json j = {{"seed", report.seed},
                      {"tolerance", report.tolerance},
                      {"wall_seconds", report.wall_seconds},
                      {"all_pass", report.all_pass},
                      {"checks", ops}};
  return j.dump(2);
}

}  // namespace wsa
