#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sdg/core_math.hpp"
#include "sdg/mlp.hpp"
#include "sdg/rng.hpp"

namespace sdg::testing {

// ||a - b|| / max(||a||, ||b||, floor): the gradient-check error measure.
inline double rel_error(const ParamVector& a, const ParamVector& b, double floor = 1e-8) {
  return norm2(vec_sub(a, b)) / std::max({norm2(a), norm2(b), floor});
}

inline DomainBatch random_batch(Rng& rng, std::size_t rows, std::size_t in_dim, std::size_t out_dim, LossKind loss,
                                int domain_id = 0) {
  DomainBatch b;
  b.domain_id = domain_id;
  b.inputs = Matrix(rows, in_dim);
  for (double& x : b.inputs.data()) x = rng.normal();
  if (loss == LossKind::kSquaredError) {
    b.targets = Matrix(rows, out_dim);
    for (double& y : b.targets.data()) y = rng.normal();
  } else {
    for (std::size_t r = 0; r < rows; ++r) b.labels.push_back(rng.index(out_dim));
  }
  return b;
}

inline MlpModel random_model(Rng& rng, std::vector<std::size_t> dims, LossKind loss) {
  MlpModel m(std::move(dims), loss);
  m.initialize(rng);
  // Push weights away from the tiny init so ReLUs are not all near their kink.
  ParamVector theta = m.params();
  for (double& t : theta) t *= 2.0;
  m.set_params(theta);
  return m;
}

}  // namespace sdg::testing
