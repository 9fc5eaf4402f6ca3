#pragma once

#include "rscn/core.hpp"
#include "rscn/lasso.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rscn {

/// Recurrent net with tanh activation. Incrementally grown nets keep the
/// recurrent matrix lower triangular, so new nodes are invisible to old
/// ones and the spectral radius is max |diagonal|. Fixed-random baselines
/// (build_esn) set `triangular` false.
struct ReservoirNet {
    Matrix w_in;  // N x K_R
    Matrix w_r;   // N x N
    Vector b;     // N
    double alpha = 0.8;
    bool triangular = true;
    bool echo_scaled = false;  // spectral scaling applied (radius was > 0)

    int nodes() const { return static_cast<int>(w_r.rows()); }
    int input_dim() const { return static_cast<int>(w_in.cols()); }
    void validate() const;
};

struct CandidateNode {
    Vector w_in_row;  // K_R
    Vector w_r_row;   // N+1, sparse content in dense storage; last = self link
    double bias = 0.0;
    double lambda_used = 0.0;
    Vector g;  // candidate state sequence on training data
};

/// Linear readout over the extended state [x(t); u(t)].
struct Readout {
    Matrix w_out;  // L x (N + K_R)
    double c = 0.0;
};

enum class ReadoutKind { Ridge, LeastSquares, ElasticNet };

struct ScTrainConfig {
    int n_max_nodes = 300;
    int n_step = 5;
    int initial_nodes = 5;
    int g_max = 100;
    double epsilon = 1e-5;
    std::vector<double> lambda_grid{0.1, 0.5, 1, 5, 10, 30, 50, 100};
    std::vector<double> r_list{0.9, 0.99, 0.999, 0.9999, 0.99999};
    double c = 1e-3;          // L2 coefficient: readout ridge and constraint
    double constraint_c = -1; // supervisory-constraint c; negative means use c
    double sparsity = 0.03;   // recurrent-row density
    double alpha = 0.8;
    double b_g_margin = 1e-6; // b_g = sqrt(n_eff) * (1 + margin)
    ReadoutKind readout = ReadoutKind::Ridge;
    double elastic_c_l = 0.0; // L1 coefficient for the elastic-net readout
    std::uint64_t seed = 0;

    void validate() const;
};

struct NodeRecord {
    int node_index = 0;  // total nodes after acceptance
    double lambda = 0.0;
    double r_used = 0.0;
    double xi_star = 0.0;
    double margin = 0.0;  // min over outputs at acceptance time
    double train_error_fro = 0.0;
    double val_nrmse = 0.0;
    int pool_size = 0;
    double penalized_objective = 0.0;
};

enum class StopReason { Tolerance, MaxNodes, EarlyStop };

struct BuildReport {
    std::vector<NodeRecord> records;
    StopReason stop_reason = StopReason::Tolerance;
    int final_nodes = 0;
    double initial_error_fro = 0.0;
    double initial_objective = 0.0;
    std::vector<double> val_history;  // one entry after init, one per acceptance
    double final_r = 0.0;
};

std::string stop_reason_name(StopReason r);

/// Construction ran out of candidates at every weight scale and every
/// escalated contraction level.
struct ConstructiveFailure : Error {
    ConstructiveFailure(const std::string& msg, BuildReport r)
        : Error(msg), report(std::move(r)) {}
    BuildReport report;
};

/// x(t) = tanh(W_in u(t) + W_r x(t-1) + b), t = 1..n, x(0) = x0 (zero by
/// default). Returns the N x n state matrix.
Matrix compute_states(const ReservoirNet& net, const Matrix& u, const Vector* x0 = nullptr);

/// Stacks [x(t); u(t)] into the (N + K_R) x n matrix read by readouts.
Matrix extended_states(const Matrix& states, const Matrix& u);

struct EchoScaleResult {
    Matrix w_r;
    bool scaled = false;   // false means the radius was zero and scaling was skipped
    double rho = 0.0;      // radius before scaling
};

/// Rescales a triangular recurrent matrix to spectral radius alpha.
EchoScaleResult scale_echo_state(const Matrix& w_r, double alpha);

double triangular_spectral_radius(const Matrix& w_r);

/// Largest |eigenvalue| by power iteration; falls back to a dense
/// eigensolve for n <= 500 when the iteration does not settle.
double spectral_radius(const Matrix& w, int max_iter = 1000);

/// Draws a candidate node and evaluates its state sequence incrementally
/// from the stored states of the existing net. The self-recurrent entry is
/// drawn from [-min(lambda, alpha), min(lambda, alpha)] so that growth
/// never raises the spectral radius above alpha and existing states stay
/// valid verbatim.
CandidateNode draw_candidate(const ReservoirNet& net, const Eigen::Ref<const Matrix>& states,
                             const Eigen::Ref<const Matrix>& u, double lambda, double sparsity,
                             std::mt19937_64& rng);

struct ConstraintCheck {
    bool pass = false;
    Vector margins;  // per output
};

/// Supervisory inequality: margin_q = <e_q, g>^2
///   - [(b_g^2 + c)^2 / (b_g^2 + 2c)] * (1 - r - mu) * ||e_q||^2.
/// With c = 0 the factor reduces to b_g^2 (the non-regularized form).
ConstraintCheck check_constraint(const Matrix& e, const Vector& g, double b_g, double c,
                                 double r, double mu);

struct XiStar {
    Vector per_output;
    double sum = 0.0;
};

/// Ranking score: xi_q = <e_q, g>^2 / [(||g||^2 + c)^2 / (||g||^2 + 2c)]
///   - (1 - r - mu) * ||e_q||^2; c = 0 recovers the non-regularized form.
XiStar xi_star(const Matrix& e, const Vector& g, double c, double r, double mu);

/// W_out' = (X X' + c I)^{-1} X Y'; solved by LDLT.
Readout solve_readout_ridge(const Matrix& x_ext, const Matrix& y_hat, double c);

/// Minimum-norm least squares (pseudo-inverse convention).
Readout solve_readout_ls(const Matrix& x_ext, const Matrix& y_hat);

/// min ||W X - Y||^2 + c_l ||W||_1 + c ||W||_2^2 by coordinate descent.
Readout solve_readout_elastic(const Matrix& x_ext, const Matrix& y_hat, double c_l, double c,
                              double tol = 1e-9, int max_iter = 20000,
                              const Matrix* warm_start = nullptr);

struct TrainData {
    Matrix u_r;    // K_R x n
    Matrix y_hat;  // L x n
};

struct GrowResult {
    ReservoirNet net;
    Readout readout;
    BuildReport report;
};

/// Incremental construction under the supervisory mechanism with seeded
/// contraction-level escalation, global readout re-solve per acceptance,
/// and validation-based early stopping with exact truncation.
GrowResult grow(const TrainData& train, const TrainData& val, const ScTrainConfig& cfg);

/// True when the last n_step+1 entries of the validation-error history are
/// non-decreasing (the early stopping criterion).
bool early_stop_triggered(const std::vector<double>& val_history, int n_step);

/// Fixed random reservoir baseline: dense inputs, sparse non-triangular
/// recurrent weights scaled to spectral radius alpha.
ReservoirNet build_esn(int k_r, int n_nodes, double lambda, double sparsity, double alpha,
                       std::uint64_t seed);

/// Compensated output: linear-model prediction on the full lagged design
/// plus the reservoir readout on the selected-order inputs. Original units.
Matrix predict_compensated(const ReservoirNet& net, const Readout& readout,
                           const LassoModel& lasso_model, const LaggedDataset& u_r_lagged,
                           const LaggedDataset& full_lagged);

}  // namespace rscn
