#pragma once

#include <vector>

#include "stance/encoder.hpp"
#include "stance/tensor.hpp"

namespace stance {

// Probability vectors over the characters of the two mentions.
struct Marginals {
  std::vector<Real> p1;
  std::vector<Real> p2;
};

// Evenly weighted point masses on the real characters only.
// Throws std::invalid_argument for a zero length.
Marginals uniform_marginals(std::size_t len_m, std::size_t len_m2);

// C = S_max - S over the valid block, where S_max is the block maximum.
// Returns a [rows x cols] tensor; differentiable through S and S_max.
Tensor cost_from_similarity(const SimilarityMatrix& s);

struct SinkhornOptions {
  double lambda = 10.0;
  std::size_t max_iters = 50;
  double tol = 1e-6;    // stop when both L1 marginal residuals fall below this
  double floor = 1e-30; // smallest denominator in the scaling updates
};

struct TransportPlan {
  Tensor values;  // [|m| x |m'|]
  std::size_t iterations = 0;
  bool log_domain = false;
  double row_residual = 0.0;
  double col_residual = 0.0;

  // Zero-embedded into the top-left of an [L x L] matrix.
  Tensor embedded(std::size_t max_len) const;
};

// Entropic optimal transport, P = diag(u) exp(-lambda C) diag(v), with
// u <- p1 / (K v) and v <- p2 / (K^T u) alternated from v = 1. Every
// iteration is built from differentiable primitives, so gradients reach C
// through the whole unrolled loop.
//
// Iterates in the scaling domain; if a denominator underflows to the floor
// or a non-finite value appears the solve restarts once with log-sum-exp
// updates. Throws NumericalError naming the iteration if that also fails.
TransportPlan sinkhorn(const Tensor& cost, const Marginals& marginals,
                       const SinkhornOptions& options = {});

// S' = S o P on the valid block; zero elsewhere. Throws DimensionError when
// the plan shape differs from the valid block.
SimilarityMatrix reweight(const SimilarityMatrix& s, const TransportPlan& plan);

}  // namespace stance
