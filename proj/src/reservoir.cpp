#include "rscn/reservoir.hpp"

#include "rscn/metrics.hpp"
#include "rscn/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>

namespace rscn {

void ReservoirNet::validate() const {
    if (nodes() < 1) throw ShapeError("ReservoirNet: need at least one node");
    if (w_r.rows() != w_r.cols() || w_in.rows() != w_r.rows() || b.size() != w_r.rows())
        throw ShapeError("ReservoirNet: inconsistent dimensions");
    if (!w_in.allFinite() || !w_r.allFinite() || !b.allFinite())
        throw NumericError("ReservoirNet: non-finite weights");
    if (triangular) {
        for (int i = 0; i < w_r.rows(); ++i)
            for (int j = i + 1; j < w_r.cols(); ++j)
                if (w_r(i, j) != 0.0)
                    throw ShapeError("ReservoirNet: upper triangle must be zero");
    }
}

void ScTrainConfig::validate() const {
    if (initial_nodes < 1) throw ConfigError("ScTrainConfig: initial_nodes must be >= 1");
    if (n_max_nodes < initial_nodes)
        throw ConfigError("ScTrainConfig: n_max_nodes must be >= initial_nodes");
    if (n_step < 1 || n_step >= n_max_nodes)
        throw ConfigError("ScTrainConfig: need 1 <= n_step < n_max_nodes");
    if (g_max < 1) throw ConfigError("ScTrainConfig: g_max must be >= 1");
    if (!(epsilon > 0)) throw ConfigError("ScTrainConfig: epsilon must be > 0");
    if (lambda_grid.empty()) throw ConfigError("ScTrainConfig: empty lambda grid");
    for (double l : lambda_grid)
        if (!(l > 0)) throw ConfigError("ScTrainConfig: lambda grid must be positive");
    if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
        throw ConfigError("ScTrainConfig: lambda grid must be ascending");
    if (r_list.empty()) throw ConfigError("ScTrainConfig: empty r list");
    for (double r : r_list)
        if (!(r > 0 && r < 1)) throw ConfigError("ScTrainConfig: r values must lie in (0,1)");
    if (!std::is_sorted(r_list.begin(), r_list.end()))
        throw ConfigError("ScTrainConfig: r list must be ascending");
    if (!(c >= 0)) throw ConfigError("ScTrainConfig: c must be >= 0");
    if (constraint_c >= 0 && !(constraint_c < 1))
        throw ConfigError("ScTrainConfig: constraint_c must lie in [0,1)");
    if (!(sparsity > 0 && sparsity <= 1))
        throw ConfigError("ScTrainConfig: sparsity must lie in (0,1]");
    if (!(alpha > 0 && alpha < 1)) throw ConfigError("ScTrainConfig: alpha must lie in (0,1)");
    if (elastic_c_l < 0) throw ConfigError("ScTrainConfig: elastic_c_l must be >= 0");
}

std::string stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Tolerance: return "tolerance";
        case StopReason::MaxNodes: return "max-nodes";
        case StopReason::EarlyStop: return "early-stop";
    }
    return "unknown";
}

Matrix compute_states(const ReservoirNet& net, const Matrix& u, const Vector* x0) {
    net.validate();
    if (u.rows() != net.input_dim())
        throw ShapeError("compute_states: input dimension mismatch");
    const int n = static_cast<int>(u.cols());
    const int nn = net.nodes();
    Vector x = x0 ? *x0 : Vector::Zero(nn);
    if (x.size() != nn) throw ShapeError("compute_states: x0 size mismatch");
    if (!x.allFinite()) throw NumericError("compute_states: non-finite x0");

    Matrix states(nn, n);
    const Matrix drive = (net.w_in * u).colwise() + net.b;
    Vector pre(nn);
    for (int t = 0; t < n; ++t) {
        if (net.triangular)
            pre.noalias() = net.w_r.triangularView<Eigen::Lower>() * x;
        else
            pre.noalias() = net.w_r * x;
        pre += drive.col(t);
        x = pre.array().tanh();
        if (!x.allFinite())
            throw NumericError("compute_states: non-finite state at step " + std::to_string(t));
        states.col(t) = x;
    }
    return states;
}

Matrix extended_states(const Matrix& states, const Matrix& u) {
    if (states.cols() != u.cols()) throw ShapeError("extended_states: sample count mismatch");
    Matrix ext(states.rows() + u.rows(), u.cols());
    ext.topRows(states.rows()) = states;
    ext.bottomRows(u.rows()) = u;
    return ext;
}

double triangular_spectral_radius(const Matrix& w_r) {
    if (w_r.rows() != w_r.cols()) throw ShapeError("triangular_spectral_radius: square matrix required");
    return w_r.diagonal().cwiseAbs().maxCoeff();
}

EchoScaleResult scale_echo_state(const Matrix& w_r, double alpha) {
    if (!(alpha > 0 && alpha < 1))
        throw ArgumentError("scale_echo_state: alpha must lie in (0,1)");
    if (w_r.rows() != w_r.cols()) throw ShapeError("scale_echo_state: square matrix required");
    for (int i = 0; i < w_r.rows(); ++i)
        for (int j = i + 1; j < w_r.cols(); ++j)
            if (w_r(i, j) != 0.0)
                throw ShapeError("scale_echo_state: matrix is not lower triangular");

    EchoScaleResult res;
    res.rho = triangular_spectral_radius(w_r);
    if (res.rho == 0.0) {
        res.w_r = w_r;  // nilpotent, already contractive; scaling undefined
        res.scaled = false;
        return res;
    }
    res.w_r = w_r * (alpha / res.rho);
    res.scaled = true;
    return res;
}

double spectral_radius(const Matrix& w, int max_iter) {
    if (w.rows() != w.cols()) throw ShapeError("spectral_radius: square matrix required");
    const int n = static_cast<int>(w.rows());
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = 1.0 + 0.01 * uniform_sym(rng, 1.0);
    x.normalize();

    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector y = w * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        const double prev = est;
        est = norm;
        if (it > 0 && std::abs(est - prev) <= 1e-12 * std::max(est, 1e-300)) return est;
        x = y / norm;
    }
    if (n <= 500) {
        Eigen::EigenSolver<Matrix> solver(w, false);
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    throw NumericError("spectral_radius: power iteration did not converge and matrix is too "
                       "large for a dense eigensolve");
}

namespace {

// Candidate state sequence computed from the existing net's stored states;
// triangularity keeps those states valid verbatim while the new node runs
// its own recursion g(t) = tanh(w_in.u(t) + sum_j w_j x_j(t-1) + d g(t-1) + b).
Vector candidate_states(const Vector& w_in_row, const Vector& w_r_row, double bias,
                        const Eigen::Ref<const Matrix>& states,
                        const Eigen::Ref<const Matrix>& u) {
    const int n = static_cast<int>(u.cols());
    const int nn = static_cast<int>(states.rows());
    Vector a = (w_in_row.transpose() * u).transpose();
    a.array() += bias;
    for (int j = 0; j < nn; ++j) {
        const double wj = w_r_row(j);
        if (wj != 0.0)
            a.tail(n - 1) += wj * states.row(j).head(n - 1).transpose();
    }
    const double self = w_r_row(nn);
    Vector g(n);
    double prev = 0.0;
    for (int t = 0; t < n; ++t) {
        prev = std::tanh(a(t) + self * prev);
        g(t) = prev;
    }
    return g;
}

}  // namespace

CandidateNode draw_candidate(const ReservoirNet& net, const Eigen::Ref<const Matrix>& states,
                             const Eigen::Ref<const Matrix>& u, double lambda, double sparsity,
                             std::mt19937_64& rng) {
    if (!(lambda > 0)) throw ArgumentError("draw_candidate: lambda must be > 0");
    if (!(sparsity > 0 && sparsity <= 1))
        throw ArgumentError("draw_candidate: sparsity must lie in (0,1]");
    if (states.rows() != net.nodes() || states.cols() != u.cols() ||
        u.rows() != net.input_dim())
        throw ShapeError("draw_candidate: states/input shapes inconsistent with net");

    const int k = net.input_dim();
    const int nn = net.nodes();
    CandidateNode cand;
    cand.lambda_used = lambda;
    cand.w_in_row.resize(k);
    for (int i = 0; i < k; ++i) cand.w_in_row(i) = uniform_sym(rng, lambda);
    cand.bias = uniform_sym(rng, lambda);
    cand.w_r_row = Vector::Zero(nn + 1);
    // Self link capped at alpha so appending never raises the spectral radius.
    const double self_cap = std::min(lambda, net.alpha);
    for (int j = 0; j <= nn; ++j) {
        if (uniform01(rng) < sparsity)
            cand.w_r_row(j) = uniform_sym(rng, j == nn ? self_cap : lambda);
    }
    cand.g = candidate_states(cand.w_in_row, cand.w_r_row, cand.bias, states, u);
    return cand;
}

ConstraintCheck check_constraint(const Matrix& e, const Vector& g, double b_g, double c,
                                 double r, double mu) {
    if (!(c >= 0 && c < 1)) throw ArgumentError("check_constraint: need 0 <= c < 1");
    if (!(r > 0 && r < 1)) throw ArgumentError("check_constraint: need 0 < r < 1");
    if (!(mu >= 0 && mu <= 1 - r)) throw ArgumentError("check_constraint: need 0 <= mu <= 1-r");
    if (e.cols() != g.size()) throw ShapeError("check_constraint: residual/state length mismatch");
    const double g_norm = g.norm();
    if (!(g_norm > 0) || g_norm > b_g)
        throw ArgumentError("check_constraint: candidate invalid (need 0 < ||g|| <= b_g)");

    const double bg2 = b_g * b_g;
    const double factor = (bg2 + c) * (bg2 + c) / (bg2 + 2 * c);
    ConstraintCheck res;
    res.margins.resize(e.rows());
    res.pass = true;
    for (int q = 0; q < e.rows(); ++q) {
        const double inner = e.row(q).dot(g.transpose());
        const double margin = inner * inner - factor * (1 - r - mu) * e.row(q).squaredNorm();
        res.margins(q) = margin;
        res.pass = res.pass && margin >= 0;
    }
    return res;
}

XiStar xi_star(const Matrix& e, const Vector& g, double c, double r, double mu) {
    if (!(c >= 0 && c < 1)) throw ArgumentError("xi_star: need 0 <= c < 1");
    if (!(r > 0 && r < 1)) throw ArgumentError("xi_star: need 0 < r < 1");
    if (!(mu >= 0 && mu <= 1 - r)) throw ArgumentError("xi_star: need 0 <= mu <= 1-r");
    if (e.cols() != g.size()) throw ShapeError("xi_star: residual/state length mismatch");
    const double gn2 = g.squaredNorm();
    if (!(gn2 > 0)) throw ArgumentError("xi_star: candidate has zero norm");

    const double rho_g = (gn2 + c) * (gn2 + c) / (gn2 + 2 * c);
    XiStar res;
    res.per_output.resize(e.rows());
    for (int q = 0; q < e.rows(); ++q) {
        const double inner = e.row(q).dot(g.transpose());
        res.per_output(q) = inner * inner / rho_g - (1 - r - mu) * e.row(q).squaredNorm();
    }
    res.sum = res.per_output.sum();
    return res;
}

namespace {

double normal_equation_residual(const Matrix& a, const Matrix& w_t, const Matrix& b) {
    const double denom = std::max(b.norm(), 1e-30);
    return (a * w_t - b).norm() / denom;
}

// LDLT solve with iterative refinement; keeps the normal-equation
// residual far below the 1e-8 contract even for ill-conditioned Grams.
Matrix ridge_solve(const Matrix& gram, const Matrix& rhs, double c) {
    Matrix a = gram;
    a.diagonal().array() += c;
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("ridge solve failed: matrix not positive semidefinite");
    if (c == 0.0) {
        const Vector d = ldlt.vectorD();
        const double d_max = d.cwiseAbs().maxCoeff();
        if (!(d.minCoeff() > d_max * 1e-13))
            throw NumericError("solve_readout_ridge: rank-deficient state matrix with c = 0; "
                               "use c > 0");
    }
    Matrix w_t = ldlt.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
        if (normal_equation_residual(a, w_t, rhs) <= 1e-10) break;
        w_t += ldlt.solve(rhs - a * w_t);
    }
    if (!w_t.allFinite() || normal_equation_residual(a, w_t, rhs) > 1e-6) {
        if (c == 0.0)
            throw NumericError("solve_readout_ridge: rank-deficient state matrix with c = 0; "
                               "use c > 0");
        throw NumericError("solve_readout_ridge: normal equations not satisfied");
    }
    return w_t;
}

}  // namespace

Readout solve_readout_ridge(const Matrix& x_ext, const Matrix& y_hat, double c) {
    if (x_ext.cols() != y_hat.cols()) throw ShapeError("solve_readout_ridge: sample count mismatch");
    if (c < 0) throw ArgumentError("solve_readout_ridge: c must be >= 0");
    const Matrix gram = x_ext * x_ext.transpose();
    const Matrix rhs = x_ext * y_hat.transpose();
    Readout out;
    out.c = c;
    out.w_out = ridge_solve(gram, rhs, c).transpose();
    return out;
}

Readout solve_readout_ls(const Matrix& x_ext, const Matrix& y_hat) {
    if (x_ext.cols() != y_hat.cols()) throw ShapeError("solve_readout_ls: sample count mismatch");
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x_ext.transpose());
    Readout out;
    out.c = 0.0;
    out.w_out = cod.solve(y_hat.transpose()).transpose();
    return out;
}

Readout solve_readout_elastic(const Matrix& x_ext, const Matrix& y_hat, double c_l, double c,
                              double tol, int max_iter, const Matrix* warm_start) {
    if (x_ext.cols() != y_hat.cols())
        throw ShapeError("solve_readout_elastic: sample count mismatch");
    if (c_l < 0 || c < 0) throw ArgumentError("solve_readout_elastic: penalties must be >= 0");
    require_finite(x_ext, "solve_readout_elastic states");
    require_finite(y_hat, "solve_readout_elastic targets");

    const Matrix design = x_ext.transpose();  // n x F
    const int l = static_cast<int>(y_hat.rows());
    const int f = static_cast<int>(x_ext.rows());
    Readout out;
    out.c = c;
    out.w_out = (warm_start && warm_start->rows() == l && warm_start->cols() == f)
                    ? *warm_start
                    : Matrix::Zero(l, f);
    for (int q = 0; q < l; ++q) {
        Vector w = out.w_out.row(q).transpose();
        const Vector t = y_hat.row(q).transpose();
        detail::coordinate_descent(design, t, c_l, c, tol, max_iter, w);
        out.w_out.row(q) = w.transpose();
    }
    return out;
}

bool early_stop_triggered(const std::vector<double>& val_history, int n_step) {
    if (n_step < 1) throw ArgumentError("early_stop_triggered: n_step must be >= 1");
    if (static_cast<int>(val_history.size()) < n_step + 1) return false;
    const std::size_t last = val_history.size() - 1;
    for (int i = 0; i < n_step; ++i) {
        if (val_history[last - n_step + i] > val_history[last - n_step + i + 1]) return false;
    }
    return true;
}

namespace {

double readout_penalty(const Matrix& w, ReadoutKind kind, double c, double c_l) {
    switch (kind) {
        case ReadoutKind::Ridge: return c * w.squaredNorm();
        case ReadoutKind::LeastSquares: return 0.0;
        case ReadoutKind::ElasticNet: return c_l * w.cwiseAbs().sum() + c * w.squaredNorm();
    }
    return 0.0;
}

}  // namespace

GrowResult grow(const TrainData& train, const TrainData& val, const ScTrainConfig& cfg) {
    cfg.validate();
    if (train.u_r.cols() != train.y_hat.cols() || val.u_r.cols() != val.y_hat.cols())
        throw ShapeError("grow: input/target sample counts disagree");
    if (train.u_r.rows() != val.u_r.rows() || train.y_hat.rows() != val.y_hat.rows())
        throw ShapeError("grow: train/validation dimensions disagree");
    require_finite(train.u_r, "grow train inputs");
    require_finite(train.y_hat, "grow train targets");

    const int k = static_cast<int>(train.u_r.rows());
    const int n = static_cast<int>(train.u_r.cols());
    const int nv = static_cast<int>(val.u_r.cols());
    const int l = static_cast<int>(train.y_hat.rows());
    const double b_g = std::sqrt(static_cast<double>(n)) * (1.0 + cfg.b_g_margin);
    const double constraint_c = cfg.constraint_c >= 0 ? cfg.constraint_c : cfg.c;
    std::mt19937_64 rng(cfg.seed);

    // Initial reservoir: dense inputs and bias, sparse triangular recurrent
    // block at the first weight scale, then echo-state scaling.
    ReservoirNet net;
    net.alpha = cfg.alpha;
    net.triangular = true;
    const double lam0 = cfg.lambda_grid.front();
    const int n0 = std::min(cfg.initial_nodes, cfg.n_max_nodes);
    net.w_in.resize(n0, k);
    net.b.resize(n0);
    net.w_r = Matrix::Zero(n0, n0);
    for (int i = 0; i < n0; ++i) {
        for (int j = 0; j < k; ++j) net.w_in(i, j) = uniform_sym(rng, lam0);
        net.b(i) = uniform_sym(rng, lam0);
    }
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j <= i; ++j)
            if (uniform01(rng) < cfg.sparsity) net.w_r(i, j) = uniform_sym(rng, lam0);
    const EchoScaleResult scaled = scale_echo_state(net.w_r, cfg.alpha);
    net.w_r = scaled.w_r;
    net.echo_scaled = scaled.scaled;

    // Extended matrices in internal order [inputs; states], so growth only
    // appends rows and the Gram block stays valid under truncation.
    const int max_rows = k + cfg.n_max_nodes;
    Matrix xt(max_rows, n), xv(max_rows, nv);
    xt.topRows(k) = train.u_r;
    xv.topRows(k) = val.u_r;
    xt.middleRows(k, n0) = compute_states(net, train.u_r);
    xv.middleRows(k, n0) = compute_states(net, val.u_r);

    Matrix gram = Matrix::Zero(max_rows, max_rows);
    Matrix rhs = Matrix::Zero(max_rows, l);
    int nn = n0;
    int rows = k + nn;
    gram.topLeftCorner(rows, rows).noalias() = xt.topRows(rows) * xt.topRows(rows).transpose();
    rhs.topRows(rows).noalias() = xt.topRows(rows) * train.y_hat.transpose();

    Matrix w;  // L x rows, internal order
    auto solve_readout = [&](const Matrix* warm) {
        switch (cfg.readout) {
            case ReadoutKind::Ridge:
                w = ridge_solve(gram.topLeftCorner(rows, rows), rhs.topRows(rows), cfg.c)
                        .transpose();
                break;
            case ReadoutKind::LeastSquares: {
                Eigen::CompleteOrthogonalDecomposition<Matrix> cod(
                    xt.topRows(rows).transpose());
                w = cod.solve(train.y_hat.transpose()).transpose();
                break;
            }
            case ReadoutKind::ElasticNet: {
                Readout r = solve_readout_elastic(xt.topRows(rows), train.y_hat,
                                                  cfg.elastic_c_l, cfg.c, 1e-9, 20000, warm);
                w = r.w_out;
                break;
            }
        }
    };

    Matrix e;  // L x n residual
    auto refresh_error = [&]() { e = train.y_hat - w * xt.topRows(rows); };

    // Validation error for the early stopping criterion; NRMSE when the
    // residual target has spread, plain RMS otherwise. Only the ordering
    // of consecutive values matters.
    auto val_metric = [&]() {
        const Matrix pred = w * xv.topRows(rows);
        double acc = 0.0;
        for (int q = 0; q < l; ++q) {
            const double mean = val.y_hat.row(q).mean();
            const double var = (val.y_hat.row(q).array() - mean).square().mean();
            const double sq = (pred.row(q) - val.y_hat.row(q)).squaredNorm();
            acc += var > 0 ? std::sqrt(sq / (nv * var)) : std::sqrt(sq / nv);
        }
        return acc / l;
    };

    solve_readout(nullptr);
    refresh_error();

    BuildReport report;
    report.initial_error_fro = e.norm();
    report.initial_objective =
        e.squaredNorm() + readout_penalty(w, cfg.readout, cfg.c, cfg.elastic_c_l);
    report.val_history.push_back(val_metric());
    report.stop_reason = StopReason::Tolerance;

    std::size_t r_index = 0;
    double r = cfg.r_list.front();

    struct Best {
        CandidateNode cand;
        double xi_sum = 0.0;
        double min_margin = 0.0;
    };

    // One pass over the weight-scale grid at contraction level r; pools the
    // candidates passing the constraint and keeps the xi* argmax.
    auto scan_grid = [&](double r_now, double* r_out, double* lambda_out, int* pool_out,
                         std::optional<Best>& best) {
        const double mu = (1.0 - r_now) / (nn + 1);
        const Eigen::Ref<const Matrix> states_view = xt.middleRows(k, nn);
        for (double lambda : cfg.lambda_grid) {
            best.reset();
            int pool = 0;
            for (int i = 0; i < cfg.g_max; ++i) {
                CandidateNode cand =
                    draw_candidate(net, states_view, train.u_r, lambda, cfg.sparsity, rng);
                const double g_norm = cand.g.norm();
                if (!(g_norm > 0) || g_norm >= b_g) continue;
                const ConstraintCheck cc = check_constraint(e, cand.g, b_g, constraint_c, r_now, mu);
                if (!cc.pass) continue;
                const XiStar xs = xi_star(e, cand.g, constraint_c, r_now, mu);
                if (xs.per_output.minCoeff() < 0) continue;
                ++pool;
                if (!best || xs.sum > best->xi_sum)
                    best = Best{std::move(cand), xs.sum, cc.margins.minCoeff()};
            }
            if (best) {
                *r_out = r_now;
                *lambda_out = lambda;
                *pool_out = pool;
                return true;
            }
        }
        return false;
    };

    while (nn < cfg.n_max_nodes && e.norm() > cfg.epsilon) {
        std::optional<Best> best;
        double r_used = r, lambda_used = 0.0;
        int pool = 0;
        bool found = false;
        while (!found) {
            found = scan_grid(r, &r_used, &lambda_used, &pool, best);
            if (found) break;
            // One seeded escalation at this level, then the next r level.
            const double tau = uniform01(rng) * (1.0 - r);
            const double r_esc = r + tau;
            found = scan_grid(r_esc, &r_used, &lambda_used, &pool, best);
            if (found) {
                r = r_esc;
                break;
            }
            while (r_index < cfg.r_list.size() && cfg.r_list[r_index] <= r) ++r_index;
            if (r_index >= cfg.r_list.size()) {
                report.final_nodes = nn;
                report.final_r = r;
                report.stop_reason = StopReason::MaxNodes;
                throw ConstructiveFailure(
                    "grow: no candidate satisfied the constraint after exhausting all weight "
                    "scales and contraction levels (nodes=" + std::to_string(nn) + ")",
                    report);
            }
            r = cfg.r_list[r_index];
        }

        // Append the accepted node; existing rows are untouched and the
        // capped self link keeps max |diag| <= alpha, so the stored states
        // remain exact and the echo-state rescale is the identity.
        const CandidateNode& cand = best->cand;
        net.w_in.conservativeResize(nn + 1, k);
        net.w_in.row(nn) = cand.w_in_row.transpose();
        net.b.conservativeResize(nn + 1);
        net.b(nn) = cand.bias;
        net.w_r.conservativeResize(nn + 1, nn + 1);
        net.w_r.topRightCorner(nn, 1).setZero();
        net.w_r.row(nn).head(nn) = cand.w_r_row.head(nn).transpose();
        net.w_r(nn, nn) = cand.w_r_row(nn);

        xt.row(k + nn) = cand.g.transpose();
        xv.row(k + nn) = candidate_states(cand.w_in_row, cand.w_r_row, cand.bias,
                                          xv.middleRows(k, nn), val.u_r)
                             .transpose();

        const int new_row = k + nn;
        gram.col(new_row).head(new_row + 1).noalias() =
            xt.topRows(new_row + 1) * xt.row(new_row).transpose();
        gram.row(new_row).head(new_row + 1) = gram.col(new_row).head(new_row + 1).transpose();
        rhs.row(new_row).noalias() = xt.row(new_row) * train.y_hat.transpose();

        ++nn;
        rows = k + nn;

        Matrix warm(l, rows);  // previous readout padded with a zero column
        warm.leftCols(rows - 1) = w;
        warm.col(rows - 1).setZero();
        solve_readout(&warm);
        refresh_error();

        NodeRecord rec;
        rec.node_index = nn;
        rec.lambda = lambda_used;
        rec.r_used = r_used;
        rec.xi_star = best->xi_sum;
        rec.margin = best->min_margin;
        rec.train_error_fro = e.norm();
        rec.val_nrmse = val_metric();
        rec.pool_size = pool;
        rec.penalized_objective =
            e.squaredNorm() + readout_penalty(w, cfg.readout, cfg.c, cfg.elastic_c_l);
        report.records.push_back(rec);
        report.val_history.push_back(rec.val_nrmse);

        if (early_stop_triggered(report.val_history, cfg.n_step)) {
            const int keep = std::max(1, nn - cfg.n_step);
            net.w_in.conservativeResize(keep, k);
            net.b.conservativeResize(keep);
            net.w_r.conservativeResize(keep, keep);
            nn = keep;
            rows = k + nn;
            solve_readout(nullptr);
            refresh_error();
            report.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    if (report.stop_reason != StopReason::EarlyStop)
        report.stop_reason =
            e.norm() <= cfg.epsilon ? StopReason::Tolerance : StopReason::MaxNodes;

    report.final_nodes = nn;
    report.final_r = r;

    GrowResult result;
    result.net = std::move(net);
    result.report = std::move(report);
    result.readout.c = cfg.readout == ReadoutKind::LeastSquares ? 0.0 : cfg.c;
    // Public column order is [states; inputs].
    result.readout.w_out.resize(l, rows);
    result.readout.w_out.leftCols(nn) = w.rightCols(nn);
    result.readout.w_out.rightCols(k) = w.leftCols(k);
    return result;
}

ReservoirNet build_esn(int k_r, int n_nodes, double lambda, double sparsity, double alpha,
                       std::uint64_t seed) {
    if (k_r < 1 || n_nodes < 1) throw ArgumentError("build_esn: need k_r >= 1, n_nodes >= 1");
    if (!(lambda > 0)) throw ArgumentError("build_esn: lambda must be > 0");
    if (!(sparsity > 0 && sparsity <= 1))
        throw ArgumentError("build_esn: sparsity must lie in (0,1]");
    if (!(alpha > 0 && alpha < 1)) throw ArgumentError("build_esn: alpha must lie in (0,1)");

    std::mt19937_64 rng(seed);
    ReservoirNet net;
    net.alpha = alpha;
    net.triangular = false;
    net.w_in.resize(n_nodes, k_r);
    net.b.resize(n_nodes);
    net.w_r = Matrix::Zero(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        for (int j = 0; j < k_r; ++j) net.w_in(i, j) = uniform_sym(rng, lambda);
        net.b(i) = uniform_sym(rng, lambda);
    }
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < n_nodes; ++j)
            if (uniform01(rng) < sparsity) net.w_r(i, j) = uniform_sym(rng, lambda);

    const double rho = spectral_radius(net.w_r);
    if (rho > 0) {
        net.w_r *= alpha / rho;
        net.echo_scaled = true;
    }
    return net;
}

Matrix predict_compensated(const ReservoirNet& net, const Readout& readout,
                           const LassoModel& lasso_model, const LaggedDataset& u_r_lagged,
                           const LaggedDataset& full_lagged) {
    if (u_r_lagged.n_eff() != full_lagged.n_eff())
        throw ShapeError("predict_compensated: dataset alignment mismatch");
    if (u_r_lagged.features() != net.input_dim())
        throw ShapeError("predict_compensated: selected-order dimension mismatch");
    if (readout.w_out.cols() != net.nodes() + net.input_dim())
        throw ShapeError("predict_compensated: readout width mismatch");

    const Matrix u_r = u_r_lagged.design.transpose();
    const Matrix states = compute_states(net, u_r);
    const Matrix y_reservoir = readout.w_out * extended_states(states, u_r);
    return predict(lasso_model, full_lagged) + y_reservoir;
}

}  // namespace rscn
