#include <doctest.h>

#include "rscn/lasso.hpp"
#include "rscn/random.hpp"

#include <cmath>
#include <random>

using namespace rscn;

namespace {

LaggedDataset make_dataset(const Matrix& design, const Matrix& targets) {
    LaggedDataset d;
    d.design = design;
    d.targets = targets;
    for (int j = 0; j < design.cols(); ++j)
        d.feature_map.push_back({"f" + std::to_string(j), 0, false});
    return d;
}

LaggedDataset one_feature_case() {
    Matrix design(2, 1);
    design << 1, -1;
    Matrix targets(1, 2);
    targets << 1, -1;
    return make_dataset(design, targets);
}

double lasso_objective(const Matrix& design, const Matrix& targets, const Matrix& w, double c_l) {
    return (w * design.transpose() - targets).squaredNorm() + c_l * w.cwiseAbs().sum();
}

// Independent oracle: nested grid refinement over the coefficient box.
double grid_search_objective(const Matrix& design, const Vector& target, double c_l) {
    const int f = static_cast<int>(design.cols());
    REQUIRE(f <= 3);
    Vector lo = Vector::Constant(f, -4.0), hi = Vector::Constant(f, 4.0);
    const int points = 9;
    Vector best_w = Vector::Zero(f);
    double best = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 40; ++round) {
        std::vector<int> idx(f, 0);
        bool done = false;
        Vector w(f);
        while (!done) {
            for (int j = 0; j < f; ++j)
                w(j) = lo(j) + (hi(j) - lo(j)) * idx[j] / (points - 1);
            const double obj = (design * w - target).squaredNorm() + c_l * w.cwiseAbs().sum();
            if (obj < best) {
                best = obj;
                best_w = w;
            }
            int d = 0;
            while (d < f && ++idx[d] == points) idx[d++] = 0;
            done = d == f;
        }
        for (int j = 0; j < f; ++j) {
            const double span = (hi(j) - lo(j)) / (points - 1);
            lo(j) = best_w(j) - span;
            hi(j) = best_w(j) + span;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("fit_lasso one-dimensional closed forms") {
    LaggedDataset d = one_feature_case();
    SUBCASE("zero penalty collapses to least squares") {
        LassoModel m = fit_lasso(d, 0.0);
        CHECK(m.weights(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.converged);
    }
    SUBCASE("soft-threshold stationarity at c_l = 2") {
        LassoModel m = fit_lasso(d, 2.0);
        CHECK(m.weights(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("subgradient bound kills the weight at c_l >= 4") {
        CHECK(fit_lasso(d, 4.0).weights(0, 0) == 0.0);
        CHECK(fit_lasso(d, 5.0).weights(0, 0) == 0.0);
    }
}

TEST_CASE("fit_lasso rejects bad input") {
    LaggedDataset d = one_feature_case();
    CHECK_THROWS_AS(fit_lasso(d, -1.0), ArgumentError);
    LaggedDataset bad = d;
    bad.design(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit_lasso(bad, 1.0), NumericError);
}

TEST_CASE("fit_path basics") {
    std::mt19937_64 rng(4);
    Matrix design(30, 3);
    Matrix targets(1, 30);
    for (int t = 0; t < 30; ++t) {
        for (int j = 0; j < 3; ++j) design(t, j) = uniform_sym(rng, 1.0);
        targets(0, t) = 2.0 * design(t, 0) - 0.5 * design(t, 2) + 0.05 * uniform_sym(rng, 1.0);
    }
    LaggedDataset d = make_dataset(design, targets);

    SUBCASE("single grid point") {
        LassoPath path = fit_path(d, {1.0}, 3);
        CHECK(path.grid.size() == 1);
        CHECK(std::isfinite(path.cv_mse[0]));
    }
    SUBCASE("fully sparsifying value zeroes everything") {
        const double top = lasso_sparsifying_cl(d);
        LassoPath path = fit_path(d, {top, top / 10}, 3);
        CHECK(path.coefs[0].isZero(0));
        CHECK_FALSE(path.coefs[1].isZero(0));
    }
    SUBCASE("duplicates deduplicated with flag") {
        LassoPath path = fit_path(d, {1.0, 1.0, 0.5}, 3);
        CHECK(path.grid.size() == 2);
        CHECK(path.had_duplicates);
    }
    SUBCASE("weak monotone sparsity along default grid") {
        LassoPath path = fit_path(d, default_cl_grid(d, 20), 3);
        auto nnz = [](const Matrix& m) {
            int count = 0;
            for (int i = 0; i < m.size(); ++i) count += m(i) != 0.0;
            return count;
        };
        CHECK(nnz(path.coefs.front()) <= nnz(path.coefs.back()));
        for (const auto& coefs : path.coefs) CHECK(coefs.allFinite());
    }
    SUBCASE("fold too small") {
        CHECK_THROWS_AS(fit_path(d, {1.0}, 20), ConfigError);
    }
}

TEST_CASE("compute_p definition") {
    LassoModel m;
    m.weights.resize(1, 3);
    m.weights << 0.5, -0.3, 0.0;
    CHECK(compute_p(m) == doctest::Approx(0.8));
    m.weights.setZero();
    CHECK(compute_p(m) == 0.0);
    m.weights << 0.5, -0.3, 0.0;
    LassoModel doubled = m;
    doubled.weights *= 2.0;
    CHECK(compute_p(doubled) == doctest::Approx(2.0 * compute_p(m)));
}

TEST_CASE("select_c_l one-standard-error rule") {
    LassoPath path;
    SUBCASE("single point") {
        path.grid = {0.7};
        path.cv_mse = {1.0};
        path.cv_se = {0.1};
        path.p_values = {0.5};
        CHECK(select_c_l(path) == 0.7);
    }
    SUBCASE("equal cv, larger P wins") {
        path.grid = {2.0, 1.0};
        path.cv_mse = {1.0, 1.0};
        path.cv_se = {0.1, 0.1};
        path.p_values = {0.8, 0.9};
        CHECK(select_c_l(path) == 1.0);
    }
    SUBCASE("strictly better cv outside the band wins regardless of P") {
        path.grid = {2.0, 1.0};
        path.cv_mse = {1.0, 0.5};
        path.cv_se = {0.05, 0.05};
        path.p_values = {10.0, 0.1};
        CHECK(select_c_l(path) == 1.0);
    }
    SUBCASE("P ties break toward larger c_l") {
        path.grid = {2.0, 1.0};
        path.cv_mse = {1.0, 1.0};
        path.cv_se = {0.1, 0.1};
        path.p_values = {0.9, 0.9};
        CHECK(select_c_l(path) == 2.0);
    }
}

TEST_CASE("select_orders thresholds and sorts") {
    LassoModel m;
    m.weights.resize(1, 3);
    m.weights << 0.9, 0.0, 0.2;
    m.feature_map = {{"u", 0, false}, {"u", 1, false}, {"y", 1, true}};
    m.c_l = 0.3;
    OrderSelection sel = select_orders(m, 1e-8);
    REQUIRE(sel.selected.size() == 2);
    CHECK(sel.selected[0].variable == "u");
    CHECK(sel.selected[0].lag == 0);
    CHECK(sel.selected[1].variable == "y");
    CHECK(sel.selected[1].lag == 1);
    CHECK(sel.c_l_used == 0.3);

    m.weights << 1e-9, 0.0, 1e-10;
    CHECK_THROWS_AS(select_orders(m, 1e-8), SelectionError);
}

TEST_CASE("predict and residuals identities") {
    LaggedDataset d = one_feature_case();
    SUBCASE("zero model predicts zero") {
        LassoModel m;
        m.weights = Matrix::Zero(1, 1);
        m.intercept = Vector::Zero(1);
        m.feature_map = d.feature_map;
        CHECK(predict(m, d).isZero(0));
    }
    SUBCASE("identity weight reproduces the feature") {
        LassoModel m;
        m.weights = Matrix::Constant(1, 1, 1.0);
        m.intercept = Vector::Zero(1);
        m.feature_map = d.feature_map;
        Matrix y = predict(m, d);
        CHECK(y(0, 0) == doctest::Approx(1.0));
        CHECK(y(0, 1) == doctest::Approx(-1.0));
    }
    SUBCASE("ols round trip has zero residual") {
        LassoModel m = fit_lasso(d, 0.0);
        m.intercept = Vector::Zero(1);
        Matrix resid = residuals(d.targets, predict(m, d));
        CHECK(resid.cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("residual identity reconstructs targets") {
        LassoModel m = fit_lasso(d, 2.0);
        m.intercept = Vector::Zero(1);
        Matrix y = predict(m, d);
        Matrix resid = residuals(d.targets, y);
        CHECK((y + resid).isApprox(d.targets, 1e-12));
    }
    SUBCASE("feature mismatch raises shape error") {
        LassoModel m = fit_lasso(d, 0.0);
        LaggedDataset other = d;
        other.feature_map[0].variable = "z";
        CHECK_THROWS_AS(predict(m, other), ShapeError);
    }
    SUBCASE("residual shape mismatch") {
        CHECK_THROWS_AS(residuals(Matrix::Zero(1, 2), Matrix::Zero(1, 3)), ShapeError);
    }
}

TEST_CASE("coordinate descent matches the dense grid oracle and passes KKT") {
    std::mt19937_64 rng(1234);
    const double tol = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const int f = 1 + static_cast<int>(uniform01(rng) * 3);
        const int n = 5 + static_cast<int>(uniform01(rng) * 16);
        Matrix design(n, f);
        Matrix targets(1, n);
        for (int t = 0; t < n; ++t) {
            for (int j = 0; j < f; ++j) design(t, j) = uniform_sym(rng, 1.0);
            targets(0, t) = uniform_sym(rng, 1.0);
        }
        const double c_l = 0.1 + uniform01(rng) * 2.0;
        LaggedDataset d = make_dataset(design, targets);
        LassoModel m = fit_lasso(d, c_l, tol, 10000);

        const double cd_obj = lasso_objective(design, targets, m.weights, c_l);
        const double oracle_obj = grid_search_objective(design, targets.row(0).transpose(), c_l);
        CHECK(std::abs(cd_obj - oracle_obj) <= 1e-6);
        CHECK(kkt_violation(m, d) <= 10 * tol);
    }
}

TEST_CASE("kkt invariant on a larger random fit") {
    std::mt19937_64 rng(77);
    Matrix design(50, 8);
    Matrix targets(2, 50);
    for (int t = 0; t < 50; ++t) {
        for (int j = 0; j < 8; ++j) design(t, j) = uniform_sym(rng, 1.0);
        targets(0, t) = design(t, 1) - design(t, 5) + 0.1 * uniform_sym(rng, 1.0);
        targets(1, t) = 0.5 * design(t, 0) + 0.1 * uniform_sym(rng, 1.0);
    }
    LaggedDataset d = make_dataset(design, targets);
    const double tol = 1e-6;
    LassoModel m = fit_lasso(d, 1.5, tol);
    CHECK(m.converged);
    CHECK(kkt_violation(m, d) <= 10 * tol);
}
