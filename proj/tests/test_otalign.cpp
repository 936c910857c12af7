#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stance/ops.hpp"
#include "stance/otalign.hpp"

using namespace stance;

namespace {

SimilarityMatrix block(std::size_t rows, std::size_t cols, std::vector<Real> v, std::size_t L = 0) {
  Tensor t = Tensor::from({rows, cols}, std::move(v));
  if (L) t = pad(t, L, L);
  return {t, rows, cols};
}

double residual(const TransportPlan& p, const Marginals& m) {
  const std::size_t r = p.values.dim(0), c = p.values.dim(1);
  double worst = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += p.values.at(i, j);
    worst = std::max(worst, std::abs(s - m.p1[i]));
  }
  for (std::size_t j = 0; j < c; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < r; ++i) s += p.values.at(i, j);
    worst = std::max(worst, std::abs(s - m.p2[j]));
  }
  return worst;
}

double plan_cost(const Tensor& cost, const TransportPlan& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < cost.size(); ++k) s += cost.data()[k] * p.values.data()[k];
  return s;
}

SinkhornOptions opts(double lambda, std::size_t iters, double tol = 1e-6) {
  SinkhornOptions o;
  o.lambda = lambda;
  o.max_iters = iters;
  o.tol = tol;
  return o;
}

}  // namespace

TEST_CASE("cost_from_similarity") {
  Tensor c = cost_from_similarity(block(2, 2, {2, 0, 1, 2}));
  CHECK(std::vector<Real>(c.data().begin(), c.data().end()) == std::vector<Real>{0, 2, 1, 0});

  Tensor flat = cost_from_similarity(block(2, 3, std::vector<Real>(6, 0.7)));
  for (Real v : flat.data()) CHECK(v == 0.0);

  // padding is ignored when taking the maximum
  Tensor padded = cost_from_similarity(block(2, 2, {-1, -2, -3, -4}, 4));
  CHECK(padded.shape() == Shape{2, 2});
  CHECK(padded.at(0, 0) == 0.0);
  CHECK(padded.at(1, 1) == 3.0);

  std::mt19937_64 rng(1);
  Tensor s = oracle::random_tensor(rng, {4, 7}, -3, 3, false);
  Tensor cr = cost_from_similarity({s, 4, 7});
  const Real smax = *std::max_element(s.data().begin(), s.data().end());
  Real cmin = 1e9;
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(std::abs(cr.data()[k] + s.data()[k] - smax) <= 1e-14);
    cmin = std::min(cmin, cr.data()[k]);
  }
  CHECK(cmin == 0.0);
}

TEST_CASE("uniform_marginals") {
  Marginals m = uniform_marginals(2, 4);
  CHECK(m.p1 == std::vector<Real>{.5, .5});
  CHECK(m.p2 == std::vector<Real>{.25, .25, .25, .25});
  Marginals one = uniform_marginals(1, 1);
  CHECK(one.p1 == std::vector<Real>{1});
  CHECK(one.p2 == std::vector<Real>{1});
  Marginals three = uniform_marginals(3, 3);
  CHECK(std::accumulate(three.p1.begin(), three.p1.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(three.p2[2] == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(uniform_marginals(0, 3), std::invalid_argument);
}

TEST_CASE("sinkhorn examples") {
  for (double lambda : {0.5, 10.0, 80.0}) {
    TransportPlan p = sinkhorn(Tensor::zeros({2, 2}), uniform_marginals(2, 2), opts(lambda, 50));
    for (Real v : p.values.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }

  TransportPlan diag = sinkhorn(Tensor::from({2, 2}, {0, 1, 1, 0}), uniform_marginals(2, 2), opts(50, 500, 1e-12));
  // 2x2 polytope with uniform marginals: P = [[a, .5-a], [.5-a, a]]; cost 1-2a is minimal at a = .5
  CHECK(diag.values.at(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(diag.values.at(1, 1) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(std::abs(diag.values.at(0, 1)) < 1e-4);
  CHECK(std::abs(diag.values.at(1, 0)) < 1e-4);

  CHECK_THROWS_AS(sinkhorn(Tensor::zeros({2, 2}), uniform_marginals(2, 3)), DimensionError);
  CHECK_THROWS(sinkhorn(Tensor::zeros({2, 2}), uniform_marginals(2, 2), opts(0.0, 10)));
  CHECK_THROWS(sinkhorn(Tensor::zeros({2, 2}), uniform_marginals(2, 2), opts(1.0, 0)));
}

TEST_CASE("sinkhorn against the exact transport optimum") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor c = oracle::random_tensor(rng, {6, 5}, 0, 1, false);
    Marginals marg = uniform_marginals(6, 5);
    TransportPlan p = sinkhorn(c, marg, opts(10, 200, 1e-9));
    CHECK(residual(p, marg) < 1e-6);

    std::vector<std::vector<double>> cm(6, std::vector<double>(5));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 5; ++j) cm[i][j] = c.at(i, j);
    // masses 1/6 and 1/5 scaled by 30 are integral
    const double lp = oracle::transport_lp(cm, std::vector<int>(6, 5), std::vector<int>(5, 6)) / 30.0;
    CHECK(plan_cost(c, p) >= lp - 1e-9);
  }
}

TEST_CASE("marginal feasibility on random costs") {
  std::mt19937_64 rng(23);
  for (double lambda : {1.0, 10.0, 50.0}) {
    for (std::size_t n : {1, 3, 17, 64}) {
      const std::size_t r = n, c = std::max<std::size_t>(1, n - rng() % (n > 1 ? n / 2 : 1));
      Tensor cost = oracle::random_tensor(rng, {r, c}, 0, 10, false);
      Marginals marg = uniform_marginals(r, c);
      // near-degenerate instances converge only at a 1/T rate, hence the cap
      TransportPlan p = sinkhorn(cost, marg, opts(lambda, 2000000, 1e-7));
      CAPTURE(lambda);
      CAPTURE(n);
      CHECK(residual(p, marg) <= 1e-6);
      for (Real v : p.values.data()) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("plan cost is non-increasing in lambda") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor cost = oracle::random_tensor(rng, {5, 7}, 0, 2, false);
    Marginals marg = uniform_marginals(5, 7);
    double previous = 1e9;
    for (double lambda : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
      const double pc = plan_cost(cost, sinkhorn(cost, marg, opts(lambda, 20000, 1e-12)));
      CHECK(pc <= previous + 1e-9);
      previous = pc;
    }
  }
}

TEST_CASE("row permutation equivariance") {
  std::mt19937_64 rng(8);
  Tensor cost = oracle::random_tensor(rng, {6, 4}, 0, 3, false);
  Marginals marg{{0.1, 0.2, 0.3, 0.15, 0.15, 0.1}, {0.25, 0.25, 0.25, 0.25}};
  std::vector<std::size_t> sigma = {3, 0, 5, 1, 4, 2};
  std::vector<Real> permuted;
  Marginals pm{{}, marg.p2};
  for (std::size_t i : sigma) {
    for (std::size_t j = 0; j < 4; ++j) permuted.push_back(cost.at(i, j));
    pm.p1.push_back(marg.p1[i]);
  }
  TransportPlan base = sinkhorn(cost, marg, opts(5, 100));
  TransportPlan perm = sinkhorn(Tensor::from({6, 4}, permuted), pm, opts(5, 100));
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(perm.values.at(k, j) == doctest::Approx(base.values.at(sigma[k], j)).epsilon(1e-10));
}

TEST_CASE("gradient of plan cost through the unrolled iterations") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor cost = oracle::random_tensor(rng, {5, 5}, 0, 1, true);
    Marginals marg = uniform_marginals(5, 5);
    auto f = [&] { return sum(mul(cost, sinkhorn(cost, marg, opts(10, 50, 0.0)).values)); };
    CHECK(oracle::fd_max_rel_error(f, {cost}) < 1e-3);
  }
}

TEST_CASE("log-domain fallback") {
  std::mt19937_64 rng(4);
  Tensor base = oracle::random_tensor(rng, {8, 6}, 0, 1, false);
  // a constant shift leaves the plan unchanged but underflows every kernel entry
  Tensor shifted = add_scalar(base, 60.0);
  Marginals marg = uniform_marginals(8, 6);
  TransportPlan ref = sinkhorn(base, marg, opts(50, 100000, 1e-10));
  TransportPlan p = sinkhorn(shifted, marg, opts(50, 100000, 1e-10));
  CHECK_FALSE(ref.log_domain);
  CHECK(p.log_domain);
  CHECK(residual(p, marg) <= 1e-6);
  for (std::size_t k = 0; k < p.values.size(); ++k)
    CHECK(p.values.data()[k] == doctest::Approx(ref.values.data()[k]).epsilon(1e-6));
  for (Real v : p.values.data()) CHECK(std::isfinite(v));

  TransportPlan easy = sinkhorn(Tensor::zeros({3, 3}), uniform_marginals(3, 3));
  CHECK_FALSE(easy.log_domain);
}

TEST_CASE("reweight") {
  SimilarityMatrix s = block(2, 3, {1, 2, 3, 4, 5, 6}, 4);
  TransportPlan uniform;
  uniform.values = Tensor::filled({2, 3}, 1.0 / 6);
  SimilarityMatrix r = reweight(s, uniform);
  CHECK(r.values.shape() == Shape{4, 4});
  CHECK(r.values.at(1, 2) == doctest::Approx(1.0));
  CHECK(r.values.at(0, 0) == doctest::Approx(1.0 / 6));
  CHECK(r.values.at(3, 3) == 0.0);

  TransportPlan zero_row;
  zero_row.values = Tensor::from({2, 3}, {0, 0, 0, .3, .3, .4});
  SimilarityMatrix z = reweight(s, zero_row);
  for (std::size_t j = 0; j < 3; ++j) CHECK(z.values.at(0, j) == 0.0);

  TransportPlan wrong;
  wrong.values = Tensor::zeros({3, 2});
  CHECK_THROWS_AS(reweight(s, wrong), DimensionError);

  CHECK(uniform.embedded(4).at(1, 2) == doctest::Approx(1.0 / 6));
  CHECK(uniform.embedded(4).at(2, 2) == 0.0);
}
