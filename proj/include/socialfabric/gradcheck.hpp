#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "socialfabric/errors.hpp"
#include "socialfabric/matrix.hpp"

namespace socialfabric {

/// Central-difference check of analytic gradients.
///
/// Precondition: `params[i]->grad` already holds the analytic gradient of `f`
/// (run the backward pass once before calling). `f` must be a deterministic
/// forward evaluation at the current parameter values. Returns the max over
/// all entries of |analytic - numeric| / max(1, |analytic|, |numeric|).
inline double grad_check(const std::function<double()>& f,
                         const std::vector<ParamTensor*>& params, double h = 1e-5) {
  require(h > 0.0, "grad_check: step must be positive");
  double worst = 0.0;
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + h;
      const double f_plus = f();
      p->value.data()[i] = saved - h;
      const double f_minus = f();
      p->value.data()[i] = saved;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
        throw NumericError("grad_check: non-finite objective at " + p->name);
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace socialfabric
