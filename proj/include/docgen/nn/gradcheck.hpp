#pragma once

#include <functional>
#include <span>
#include <string>

#include "docgen/nn/graph.hpp"

namespace docgen::nn {

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t max_coords_per_param = 200;
  std::uint64_t seed = 12345;
  // Richardson-extrapolated central differences (evaluations at eps and
  // eps/2): kills the O(eps^2) truncation term, letting a larger eps keep
  // cancellation noise down on deep models. Four evaluations per coordinate.
  bool high_order = false;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against analytic gradients.
//
// `loss` must be deterministic, return the scalar loss, and leave d(loss)/dp
// accumulated in each parameter's grad field (gradients are zeroed before the
// call). When a parameter has more coordinates than max_coords_per_param, a
// seeded random subsample is checked.
// Relative error: |ga - gn| / max(|ga|, |gn|, 1e-8).
GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace docgen::nn
