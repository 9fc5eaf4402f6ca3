#pragma once

#include "rscn/core.hpp"

namespace rscn {

/// Root mean square error normalized by the population variance of the
/// target: sqrt(sum_n (y - t)^2 / (n * var(t))), averaged over output
/// rows. 0 is perfect; the constant-mean predictor scores 1.
double nrmse(const Matrix& y, const Matrix& t);

}  // namespace rscn
