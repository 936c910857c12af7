#include "stance/otalign.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "stance/ops.hpp"

namespace stance {

namespace {

bool all_finite(std::span<const Real> xs) {
  for (Real x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

struct Residuals {
  double row = 0.0;
  double col = 0.0;
};

// L1 distance between the plan's marginals and the targets, from raw values.
Residuals marginal_residuals(std::span<const Real> plan, std::size_t m, std::size_t n,
                             const Marginals& marg) {
  Residuals r;
  std::vector<double> cols(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += plan[i * n + j];
      cols[j] += plan[i * n + j];
    }
    r.row += std::abs(row - marg.p1[i]);
  }
  for (std::size_t j = 0; j < n; ++j) r.col += std::abs(cols[j] - marg.p2[j]);
  return r;
}

// diag(u) K diag(v) from raw values, for convergence checks only.
std::vector<Real> scaled_plan(std::span<const Real> k, std::span<const Real> u,
                              std::span<const Real> v) {
  const std::size_t m = u.size(), n = v.size();
  std::vector<Real> p(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = u[i] * k[i * n + j] * v[j];
  return p;
}

std::vector<Real> log_plan(std::span<const Real> m_neg, std::span<const Real> f,
                           std::span<const Real> g) {
  const std::size_t m = f.size(), n = g.size();
  std::vector<Real> p(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = std::exp(m_neg[i * n + j] + f[i] + g[j]);
  return p;
}

// Returns an empty optional-like plan (undefined values) when the scaling
// domain breaks down.
TransportPlan solve_scaling(const Tensor& cost, const Marginals& marg, const SinkhornOptions& opt) {
  const std::size_t m = cost.dim(0), n = cost.dim(1);
  Tensor p1 = Tensor::from({m, 1}, marg.p1);
  Tensor p2 = Tensor::from({n, 1}, marg.p2);
  Tensor k = exp(mul_scalar(cost, -opt.lambda));
  Tensor kt = transpose(k);
  Tensor v = Tensor::filled({n, 1}, 1.0);
  Tensor u;

  TransportPlan plan;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    Tensor kv = matmul(k, v);
    for (Real x : kv.data()) {
      if (!(x > opt.floor)) return plan;
    }
    u = div(p1, clamp_min(kv, opt.floor));
    Tensor ktu = matmul(kt, u);
    for (Real x : ktu.data()) {
      if (!(x > opt.floor)) return plan;
    }
    v = div(p2, clamp_min(ktu, opt.floor));
    if (!all_finite(u.data()) || !all_finite(v.data())) return plan;

    plan.iterations = it;
    if (opt.tol > 0.0 || it == opt.max_iters) {
      Residuals r = marginal_residuals(scaled_plan(k.data(), u.data(), v.data()), m, n, marg);
      plan.row_residual = r.row;
      plan.col_residual = r.col;
      if (r.row < opt.tol && r.col < opt.tol) break;
    }
  }
  Tensor values = mul(k, matmul(u, transpose(v)));
  if (!all_finite(values.data())) return plan;
  plan.values = values;
  return plan;
}

TransportPlan solve_log(const Tensor& cost, const Marginals& marg, const SinkhornOptions& opt) {
  const std::size_t m = cost.dim(0), n = cost.dim(1);
  std::vector<Real> log_p1(m), log_p2(n);
  for (std::size_t i = 0; i < m; ++i) log_p1[i] = std::log(marg.p1[i]);
  for (std::size_t j = 0; j < n; ++j) log_p2[j] = std::log(marg.p2[j]);
  Tensor lp1 = Tensor::from({m, 1}, log_p1);
  Tensor lp2 = Tensor::from({n, 1}, log_p2);
  Tensor ones_m = Tensor::filled({m, 1}, 1.0);
  Tensor ones_n = Tensor::filled({n, 1}, 1.0);

  Tensor mneg = mul_scalar(cost, -opt.lambda);  // log K
  Tensor mneg_t = transpose(mneg);
  Tensor g = Tensor::zeros({n, 1});
  Tensor f;

  TransportPlan plan;
  plan.log_domain = true;
  for (std::size_t it = 1; it <= opt.max_iters; ++it) {
    // f_i = log p1_i - logsumexp_j(-lambda C_ij + g_j), then symmetrically for g.
    f = sub(lp1, logsumexp_rows(add(mneg, matmul(ones_m, transpose(g)))));
    g = sub(lp2, logsumexp_rows(add(mneg_t, matmul(ones_n, transpose(f)))));
    if (!all_finite(f.data()) || !all_finite(g.data())) {
      throw NumericalError("sinkhorn: non-finite dual potentials at iteration " + std::to_string(it));
    }
    plan.iterations = it;
    if (opt.tol > 0.0 || it == opt.max_iters) {
      Residuals r = marginal_residuals(log_plan(mneg.data(), f.data(), g.data()), m, n, marg);
      plan.row_residual = r.row;
      plan.col_residual = r.col;
      if (r.row < opt.tol && r.col < opt.tol) break;
    }
  }
  plan.values = exp(add(add(mneg, matmul(f, transpose(ones_n))), matmul(ones_m, transpose(g))));
  return plan;
}

}  // namespace

Marginals uniform_marginals(std::size_t len_m, std::size_t len_m2) {
  if (len_m == 0 || len_m2 == 0) throw std::invalid_argument("uniform_marginals: zero length");
  return {std::vector<Real>(len_m, 1.0 / static_cast<Real>(len_m)),
          std::vector<Real>(len_m2, 1.0 / static_cast<Real>(len_m2))};
}

Tensor cost_from_similarity(const SimilarityMatrix& s) {
  Tensor block = s.valid_block();
  return sub(max(block), block);
}

Tensor TransportPlan::embedded(std::size_t max_len) const { return pad(values, max_len, max_len); }

TransportPlan sinkhorn(const Tensor& cost, const Marginals& marginals, const SinkhornOptions& options) {
  if (cost.rank() != 2) throw DimensionError("sinkhorn: cost must be a matrix");
  if (marginals.p1.size() != cost.dim(0) || marginals.p2.size() != cost.dim(1)) {
    throw DimensionError("sinkhorn: marginals do not match cost shape " + shape_string(cost.shape()));
  }
  if (!(options.lambda > 0.0)) throw std::invalid_argument("sinkhorn: lambda must be positive");
  if (options.max_iters == 0) throw std::invalid_argument("sinkhorn: at least one iteration");

  TransportPlan plan = solve_scaling(cost, marginals, options);
  if (plan.values.defined()) return plan;
  return solve_log(cost, marginals, options);
}

SimilarityMatrix reweight(const SimilarityMatrix& s, const TransportPlan& plan) {
  if (plan.values.rank() != 2 || plan.values.dim(0) != s.rows || plan.values.dim(1) != s.cols) {
    throw DimensionError("reweight: plan shape " + shape_string(plan.values.shape()) +
                         " does not match the valid similarity block");
  }
  Tensor block = mul(s.valid_block(), plan.values);
  return {pad(block, s.values.dim(0), s.values.dim(1)), s.rows, s.cols};
}

}  // namespace stance
