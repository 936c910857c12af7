#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stance/tensor.hpp"

namespace stance {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Compares reverse-mode gradients of a scalar function against central
// differences over every entry of `params`. The error for an entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
//
// `f` must rebuild its graph from the current parameter values on every call.
// Non-finite values anywhere in the graph raise NumericalError naming the op.
GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                           double eps = 1e-3);

}  // namespace stance
