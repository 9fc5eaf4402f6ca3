#include "rscn/metrics.hpp"

#include <cmath>

namespace rscn {

double nrmse(const Matrix& y, const Matrix& t) {
    if (y.rows() != t.rows() || y.cols() != t.cols())
        throw ShapeError("nrmse: shape mismatch");
    if (t.cols() < 1) throw ArgumentError("nrmse: empty target");
    const int n = static_cast<int>(t.cols());
    double acc = 0.0;
    for (int q = 0; q < t.rows(); ++q) {
        const double mean = t.row(q).mean();
        const double var = (t.row(q).array() - mean).square().mean();
        if (!(var > 0)) throw NumericError("nrmse: constant target (undefined variance)");
        const double sq = (y.row(q) - t.row(q)).squaredNorm();
        acc += std::sqrt(sq / (n * var));
    }
    return acc / static_cast<double>(t.rows());
}

}  // namespace rscn
