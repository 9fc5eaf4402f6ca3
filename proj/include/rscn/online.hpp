#pragma once

#include "rscn/core.hpp"
#include "rscn/lasso.hpp"
#include "rscn/reservoir.hpp"

#include <vector>

namespace rscn {

/// Streaming state for projection-based readout adaptation.
struct OnlineState {
    Vector x;      // reservoir state (N)
    Matrix w_out;  // L x (N + K_R)
    long step = 0;
    double guard = 1e-8;  // denominator regularizer
};

struct StepResult {
    Vector prediction;  // emitted with the pre-update readout
    OnlineState next;
};

/// Advances the reservoir, predicts with the previous readout, then moves
/// the readout by the minimal amount that reproduces the new observation:
/// W(n) = W(n-1) + (y - W(n-1) g) g' / (guard + g'g) with g = [x; u_r].
/// y_obs is the residual target (plant output minus the linear-model output).
StepResult project_step(const OnlineState& state, const ReservoirNet& net, const Vector& u_r,
                        const Vector& y_obs);

struct StreamSample {
    Vector u_r;            // selected-order input vector (standardized)
    Vector full_features;  // full lagged vector for the linear model (standardized)
    Vector y_obs;          // measured plant output (original units)
    long index = -1;       // optional strictly increasing sample index
};

struct TrajectoryRow {
    Vector y_lasso;
    Vector y_reservoir;
    Vector y_total;
    Vector y_obs;
    Vector error;
    double cumulative_nrmse = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    double cumulative_nrmse = 0.0;
    Matrix w_out_final;
};

/// Streams samples through the compensated model. With adapt on, the
/// reservoir readout tracks y_obs - y_lasso; the linear model stays frozen.
Trajectory run_stream(const ReservoirNet& net, const Readout& readout0,
                      const LassoModel& lasso_model, const std::vector<StreamSample>& stream,
                      bool adapt, double guard = 1e-8);

/// Packs aligned datasets plus measured outputs into a sample stream.
std::vector<StreamSample> make_stream(const LaggedDataset& u_r_lagged,
                                      const LaggedDataset& full_lagged,
                                      const Matrix& y_observed);

}  // namespace rscn
