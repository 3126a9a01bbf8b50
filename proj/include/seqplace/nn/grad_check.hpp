#pragma once

// Central finite-difference gradient checker (float64 only).

#include "seqplace/core.hpp"
#include "seqplace/nn/adam.hpp"

#include <functional>

namespace seqplace::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Relative error with a max(|a|, |b|, 1e-8) denominator.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

/// `loss` must read the current contents of `params`. Every entry is bumped
/// by +/- eps in turn and restored afterwards.
inline GradCheckResult grad_check(const std::function<double()>& loss, const TensorViews<double>& params,
                                  const TensorViews<const double>& analytic, double eps) {
  require(eps > 0 && std::isfinite(eps), "grad_check: step must be positive");
  require(params.size() == analytic.size(), "grad_check: tensor count mismatch");
  const double first = loss();
  const double second = loss();
  if (first != second) throw ValidationError("grad_check: loss closure is not deterministic");

  GradCheckResult r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    require(params[k].size() == analytic[k].size(), "grad_check: tensor " + std::to_string(k) + " size mismatch");
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& theta = params[k][i];
      const double saved = theta;
      theta = saved + eps;
      const double up = loss();
      theta = saved - eps;
      const double down = loss();
      theta = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = relative_error(analytic[k][i], numeric);
      if (err > r.max_relative_error) {
        r.max_relative_error = err;
        r.worst_tensor = k;
        r.worst_index = i;
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace seqplace::nn
