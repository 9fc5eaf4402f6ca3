#pragma once

#include "rscn/core.hpp"
#include "rscn/dataset.hpp"

#include <vector>

namespace rscn {

/// Sparse linear readout over lagged features (standardized space).
/// The objective is ||W U - T||_2^2 + c_l * ||W||_1 per output row,
/// with no 1/n factor; the intercept is handled by target centering.
struct LassoModel {
    Matrix weights;   // L x F
    Vector intercept; // L; target means when fitted through a Standardizer
    double c_l = 0.0;
    std::vector<FeatureKey> feature_map;
    bool converged = true;
    int iterations = 0;
};

struct LassoPath {
    std::vector<double> grid;  // strictly descending, positive
    std::vector<Matrix> coefs;
    std::vector<double> cv_mse;
    std::vector<double> cv_se;
    std::vector<double> p_values;
    bool had_duplicates = false;
};

/// Surviving (variable, lag) pairs after thresholding, sorted by
/// descending max |standardized coefficient| over outputs.
struct OrderSelection {
    std::vector<FeatureKey> selected;
    Matrix coefficients;      // L x |selected|, de-standardized units
    Matrix std_coefficients;  // L x |selected|, standardized space
    double c_l_used = 0.0;
};

LassoModel fit_lasso(const LaggedDataset& d, double c_l, double tol = 1e-6,
                     int max_iter = 10000, const Matrix* warm_start = nullptr);

/// Smallest c_l that zeroes every coefficient: max_{q,j} |2 u_j' t_q|.
double lasso_sparsifying_cl(const LaggedDataset& d);

/// Default grid: log-spaced points from the fully-sparsifying value down
/// the given number of decades.
std::vector<double> default_cl_grid(const LaggedDataset& d, int points = 50,
                                    double decades = 4.0);

/// Warm-started fits along a descending grid with forward-chaining
/// (time-ordered) cross-validation.
LassoPath fit_path(const LaggedDataset& d, std::vector<double> grid, int folds);

double compute_p(const LassoModel& model);

/// One-standard-error rule: CV picks the band, P picks within it,
/// ties broken toward larger c_l.
double select_c_l(const LassoPath& path);

OrderSelection select_orders(const LassoModel& model, double threshold = 1e-8,
                             const Standardizer* s = nullptr);

Matrix predict(const LassoModel& model, const LaggedDataset& d);

Matrix residuals(const Matrix& targets, const Matrix& y_lasso);

/// Max KKT violation of a fitted model on its training data; zero
/// coefficients must satisfy |2 u_j' r| <= c_l, nonzero ones
/// |2 u_j' r - c_l sign(w_j)| = 0, both up to solver tolerance.
double kkt_violation(const LassoModel& model, const LaggedDataset& d);

namespace detail {

struct CdResult {
    bool converged = false;
    int iterations = 0;
};

/// Cyclic coordinate descent with soft-thresholding on
/// ||X w - y||^2 + c_l ||w||_1 + c_ridge ||w||^2 for one output row.
/// The elastic-net readout reuses this kernel with c_ridge > 0.
CdResult coordinate_descent(const Matrix& design, const Vector& target, double c_l,
                            double c_ridge, double tol, int max_iter, Vector& w);

}  // namespace detail

}  // namespace rscn
