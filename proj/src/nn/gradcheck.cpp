#include "docgen/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "docgen/nn/rng.hpp"

namespace docgen::nn {

GradCheckResult grad_check(const std::function<double()>& loss,
                           std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  (void)loss();

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  Rng rng(options.seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    std::size_t n = p->value.size();

    std::vector<std::size_t> coords;
    if (n <= options.max_coords_per_param) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      coords.reserve(options.max_coords_per_param);
      std::vector<std::size_t> pool(n);
      for (std::size_t i = 0; i < n; ++i) pool[i] = i;
      for (std::size_t i = 0; i < options.max_coords_per_param; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
        coords.push_back(pool[i]);
      }
    }

    for (std::size_t c : coords) {
      const double original = p->value[c];
      auto central = [&](double h) {
        p->value[c] = original + h;
        for (Parameter* q : params) q->zero_grad();
        double up = loss();
        p->value[c] = original - h;
        for (Parameter* q : params) q->zero_grad();
        double down = loss();
        return (up - down) / (2.0 * h);
      };
      double numeric = central(options.eps);
      if (options.high_order) {
        numeric = (4.0 * central(options.eps / 2.0) - numeric) / 3.0;
      }
      p->value[c] = original;
      double ga = analytic[pi][c];
      double rel = std::fabs(ga - numeric) /
                   std::max({std::fabs(ga), std::fabs(numeric), 1e-8});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p->name;
        result.worst_coord = c;
        result.analytic = ga;
        result.numeric = numeric;
      }
    }
  }

  // Restore analytic gradients so callers can inspect them afterwards.
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return result;
}

}  // namespace docgen::nn
