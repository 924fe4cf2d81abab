#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pmap/param.hpp"
#include "pmap/tensor.hpp"

namespace pmap {

// Adapter over any differentiable unit (single layer or whole model) for the
// finite-difference oracle. `forward` must recompute outputs from the current
// contents of `params` and `inputs` on every call. `backward` runs forward,
// seeds the upstream gradient with dL/dy = 2y (the oracle loss is the sum of
// squared outputs), accumulates parameter gradients into Param::grad, and
// returns input gradients in the same order as `inputs`.
struct GradCheckTarget {
  ParamRefs params;
  std::vector<std::pair<std::string, Tensor*>> inputs;
  std::function<std::vector<Tensor>()> forward;
  std::function<std::vector<Tensor>()> backward;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_entry;
  double tol = 0.0;
  bool pass = false;
  // Worst relative error per checked tensor (params then inputs).
  std::vector<std::pair<std::string, double>> per_tensor;

  std::string summary() const;
};

// Central-difference check of every parameter and input entry:
//   numeric = (L(θ+eps) - L(θ-eps)) / (2 eps),  L = Σ y²
//   rel_err = |analytic - numeric| / max(1, |analytic|, |numeric|)
// Passes iff the max over all entries is <= tol. Throws NumericError naming
// the offending tensor if either gradient is non-finite.
GradCheckReport grad_check(const GradCheckTarget& target, double eps,
                           double tol);

}  // namespace pmap
