#include "rscn/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace rscn {

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

}  // namespace

namespace detail {

// Maintains the residual vector across coordinate updates.
CdResult coordinate_descent(const Matrix& design, const Vector& target, double c_l,
                            double c_ridge, double tol, int max_iter, Vector& w) {
    const int f = static_cast<int>(design.cols());
    Vector col_sq(f);
    for (int j = 0; j < f; ++j) col_sq(j) = design.col(j).squaredNorm();

    Vector residual = target - design * w;
    for (int iter = 1; iter <= max_iter; ++iter) {
        double max_delta = 0.0;
        for (int j = 0; j < f; ++j) {
            const double denom = col_sq(j) + c_ridge;
            if (denom <= 0.0) {
                w(j) = 0.0;
                continue;
            }
            const double old_w = w(j);
            const double z = design.col(j).dot(residual) + col_sq(j) * old_w;
            const double new_w = soft_threshold(z, c_l / 2.0) / denom;
            if (new_w != old_w) {
                residual += design.col(j) * (old_w - new_w);
                w(j) = new_w;
                max_delta = std::max(max_delta, std::abs(new_w - old_w));
            }
        }
        if (max_delta < tol) return {true, iter};
    }
    return {false, max_iter};
}

}  // namespace detail

namespace {

LassoModel fit_lasso_raw(const Matrix& design, const Matrix& targets, double c_l,
                         double tol, int max_iter, const Matrix* warm_start) {
    const int l = static_cast<int>(targets.rows());
    const int f = static_cast<int>(design.cols());

    LassoModel model;
    model.c_l = c_l;
    model.intercept = Vector::Zero(l);
    model.weights = (warm_start && warm_start->rows() == l && warm_start->cols() == f)
                        ? *warm_start
                        : Matrix::Zero(l, f);
    model.converged = true;
    model.iterations = 0;
    for (int q = 0; q < l; ++q) {
        Vector w = model.weights.row(q).transpose();
        const Vector t = targets.row(q).transpose();
        const detail::CdResult r = detail::coordinate_descent(design, t, c_l, 0.0, tol, max_iter, w);
        model.weights.row(q) = w.transpose();
        model.converged = model.converged && r.converged;
        model.iterations = std::max(model.iterations, r.iterations);
    }
    return model;
}

}  // namespace

LassoModel fit_lasso(const LaggedDataset& d, double c_l, double tol, int max_iter,
                     const Matrix* warm_start) {
    if (c_l < 0) throw ArgumentError("fit_lasso: c_l must be >= 0");
    if (d.n_eff() < 1) throw ArgumentError("fit_lasso: empty dataset");
    require_finite(d.design, "fit_lasso design");
    require_finite(d.targets, "fit_lasso targets");

    LassoModel model = fit_lasso_raw(d.design, d.targets, c_l, tol, max_iter, warm_start);
    model.feature_map = d.feature_map;
    return model;
}

double lasso_sparsifying_cl(const LaggedDataset& d) {
    // |2 u_j' t_q| <= c_l for all j, q keeps the all-zero point stationary.
    const Matrix corr = 2.0 * (d.targets * d.design).cwiseAbs();  // L x F
    return corr.maxCoeff();
}

std::vector<double> default_cl_grid(const LaggedDataset& d, int points, double decades) {
    if (points < 1) throw ArgumentError("default_cl_grid: points must be >= 1");
    const double top = lasso_sparsifying_cl(d);
    if (!(top > 0))
        throw NumericError("default_cl_grid: all features uncorrelated with targets");
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = top;
        return grid;
    }
    const double step = decades / (points - 1);
    for (int i = 0; i < points; ++i) grid[i] = top * std::pow(10.0, -step * i);
    return grid;
}

LassoPath fit_path(const LaggedDataset& d, std::vector<double> grid, int folds) {
    if (grid.empty()) throw ArgumentError("fit_path: empty grid");
    if (folds < 2) throw ArgumentError("fit_path: folds must be >= 2");
    for (double g : grid)
        if (!(g > 0) || !std::isfinite(g)) throw ArgumentError("fit_path: grid values must be positive");

    std::sort(grid.begin(), grid.end(), std::greater<>());
    const std::size_t before = grid.size();
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    LassoPath path;
    path.had_duplicates = grid.size() != before;
    path.grid = grid;

    const int n = d.n_eff();
    const int l = static_cast<int>(d.targets.rows());
    // Forward chaining: folds+1 contiguous blocks; fold i trains on blocks
    // [0, i] and validates on block i+1.
    const int blocks = folds + 1;
    if (n < blocks * 2)
        throw ConfigError("fit_path: " + std::to_string(folds) + " forward-chaining folds need at least " +
                          std::to_string(blocks * 2) + " samples, got " + std::to_string(n));
    std::vector<int> bounds(blocks + 1);
    for (int b = 0; b <= blocks; ++b) bounds[b] = static_cast<int>(static_cast<long>(n) * b / blocks);

    const int g_count = static_cast<int>(grid.size());
    Matrix fold_mse(folds, g_count);
    for (int fold = 0; fold < folds; ++fold) {
        const int train_end = bounds[fold + 1];
        const int val_begin = bounds[fold + 1];
        const int val_end = bounds[fold + 2];
        const Matrix train_x = d.design.topRows(train_end);
        const Matrix train_t = d.targets.leftCols(train_end);
        const Matrix val_x = d.design.middleRows(val_begin, val_end - val_begin);
        const Matrix val_t = d.targets.middleCols(val_begin, val_end - val_begin);

        Matrix warm = Matrix::Zero(l, d.features());
        for (int g = 0; g < g_count; ++g) {
            LassoModel m = fit_lasso_raw(train_x, train_t, grid[g], 1e-6, 10000, &warm);
            warm = m.weights;
            const Matrix pred = m.weights * val_x.transpose();
            fold_mse(fold, g) = (pred - val_t).squaredNorm() /
                                static_cast<double>(val_t.cols() * val_t.rows());
        }
    }

    Matrix warm = Matrix::Zero(l, d.features());
    for (int g = 0; g < g_count; ++g) {
        LassoModel m = fit_lasso(d, grid[g], 1e-6, 10000, &warm);
        warm = m.weights;
        path.coefs.push_back(m.weights);
        path.p_values.push_back(compute_p(m));
        path.cv_mse.push_back(fold_mse.col(g).mean());
        const double mean = fold_mse.col(g).mean();
        const double var = (fold_mse.col(g).array() - mean).square().sum() /
                           std::max(1, folds - 1);
        path.cv_se.push_back(std::sqrt(var / folds));
    }
    return path;
}

double compute_p(const LassoModel& model) {
    return model.weights.cwiseAbs().sum();
}

double select_c_l(const LassoPath& path) {
    if (path.grid.empty()) throw ArgumentError("select_c_l: empty path");
    int best = 0;
    for (std::size_t g = 1; g < path.grid.size(); ++g)
        if (path.cv_mse[g] < path.cv_mse[best]) best = static_cast<int>(g);
    const double band = path.cv_mse[best] + path.cv_se[best];

    int chosen = -1;
    for (std::size_t g = 0; g < path.grid.size(); ++g) {
        if (path.cv_mse[g] > band) continue;
        if (chosen < 0 || path.p_values[g] > path.p_values[chosen]) chosen = static_cast<int>(g);
        // grid is descending, so the first of any P tie is the larger c_l
    }
    return path.grid[chosen];
}

OrderSelection select_orders(const LassoModel& model, double threshold, const Standardizer* s) {
    if (!(threshold > 0)) throw ArgumentError("select_orders: threshold must be > 0");
    const int l = static_cast<int>(model.weights.rows());
    const int f = static_cast<int>(model.weights.cols());

    std::vector<std::pair<double, int>> ranked;  // (max |coef|, column)
    for (int j = 0; j < f; ++j) {
        const double mag = model.weights.col(j).cwiseAbs().maxCoeff();
        if (mag > threshold) ranked.emplace_back(mag, j);
    }
    if (ranked.empty())
        throw SelectionError("select_orders: no orders selected at threshold " +
                             std::to_string(threshold) + " (consider lowering c_l)");
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    OrderSelection sel;
    sel.c_l_used = model.c_l;
    sel.coefficients.resize(l, static_cast<int>(ranked.size()));
    sel.std_coefficients.resize(l, static_cast<int>(ranked.size()));
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const int j = ranked[i].second;
        sel.selected.push_back(model.feature_map.at(j));
        sel.std_coefficients.col(static_cast<int>(i)) = model.weights.col(j);
        const double scale = s ? s->feature_scale(j) : 1.0;
        sel.coefficients.col(static_cast<int>(i)) = model.weights.col(j) / scale;
    }
    return sel;
}

Matrix predict(const LassoModel& model, const LaggedDataset& d) {
    if (d.features() != model.weights.cols() ||
        !std::equal(d.feature_map.begin(), d.feature_map.end(), model.feature_map.begin(),
                    model.feature_map.end()))
        throw ShapeError("predict: feature map mismatch between model and dataset");
    return (model.weights * d.design.transpose()).colwise() + model.intercept;
}

Matrix residuals(const Matrix& targets, const Matrix& y_lasso) {
    if (targets.rows() != y_lasso.rows() || targets.cols() != y_lasso.cols())
        throw ShapeError("residuals: shape mismatch");
    return targets - y_lasso;
}

double kkt_violation(const LassoModel& model, const LaggedDataset& d) {
    const Matrix resid = d.targets - model.weights * d.design.transpose();  // L x n
    double worst = 0.0;
    for (int q = 0; q < model.weights.rows(); ++q) {
        for (int j = 0; j < model.weights.cols(); ++j) {
            const double grad = 2.0 * d.design.col(j).dot(resid.row(q).transpose());
            const double w = model.weights(q, j);
            if (w != 0.0) {
                worst = std::max(worst, std::abs(grad - model.c_l * (w > 0 ? 1.0 : -1.0)));
            } else {
                worst = std::max(worst, std::max(0.0, std::abs(grad) - model.c_l));
            }
        }
    }
    return worst;
}

}  // namespace rscn
