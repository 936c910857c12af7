#include "stance/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace stance {

namespace {

struct FiniteGuard {
  bool previous = check_finite_enabled();
  FiniteGuard() { set_check_finite(true); }
  ~FiniteGuard() { set_check_finite(previous); }
};

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                           double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-2)) throw std::invalid_argument("grad_check: eps must lie in [1e-8, 1e-2]");
  FiniteGuard guard;

  for (Tensor& p : params) {
    if (!p.requires_grad()) throw std::invalid_argument("grad_check: parameter without requires_grad");
    p.zero_grad();
  }
  Tensor out = f();
  if (out.size() != 1) throw DimensionError("grad_check: function must return a scalar");
  out.backward();

  std::vector<std::vector<Real>> analytic;
  analytic.reserve(params.size());
  for (const Tensor& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = saved + eps;
      const double plus = f().item();
      values[i] = saved - eps;
      const double minus = f().item();
      values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++result.entries_checked;
      if (err >= result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = pi;
        result.worst_entry = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  for (Tensor& p : params) p.zero_grad();
  return result;
}

}  // namespace stance
