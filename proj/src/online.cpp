#include "rscn/online.hpp"

#include <cmath>
#include <limits>

namespace rscn {

StepResult project_step(const OnlineState& state, const ReservoirNet& net, const Vector& u_r,
                        const Vector& y_obs) {
    if (u_r.size() != net.input_dim()) throw ShapeError("project_step: input dimension mismatch");
    if (state.x.size() != net.nodes()) throw ShapeError("project_step: state dimension mismatch");
    if (state.w_out.cols() != net.nodes() + net.input_dim() ||
        state.w_out.rows() != y_obs.size())
        throw ShapeError("project_step: readout dimensions mismatch");
    if (!(state.guard > 0)) throw ArgumentError("project_step: guard must be > 0");
    if (!u_r.allFinite() || !y_obs.allFinite())
        throw NumericError("project_step: non-finite input");

    StepResult out;
    out.next.guard = state.guard;
    out.next.step = state.step + 1;

    Vector pre = net.w_in * u_r + net.b;
    if (net.triangular)
        pre.noalias() += net.w_r.triangularView<Eigen::Lower>() * state.x;
    else
        pre.noalias() += net.w_r * state.x;
    out.next.x = pre.array().tanh();

    Vector g_hat(net.nodes() + net.input_dim());
    g_hat.head(net.nodes()) = out.next.x;
    g_hat.tail(net.input_dim()) = u_r;

    out.prediction = state.w_out * g_hat;
    const Vector innovation = y_obs - out.prediction;
    const double denom = state.guard + g_hat.squaredNorm();
    out.next.w_out = state.w_out + (innovation / denom) * g_hat.transpose();
    return out;
}

Trajectory run_stream(const ReservoirNet& net, const Readout& readout0,
                      const LassoModel& lasso_model, const std::vector<StreamSample>& stream,
                      bool adapt, double guard) {
    if (readout0.w_out.cols() != net.nodes() + net.input_dim())
        throw ShapeError("run_stream: readout width mismatch");

    OnlineState state;
    state.x = Vector::Zero(net.nodes());
    state.w_out = readout0.w_out;
    state.guard = guard;

    Trajectory traj;
    traj.rows.reserve(stream.size());

    const int l = static_cast<int>(readout0.w_out.rows());
    Vector sum_err2 = Vector::Zero(l), sum_y = Vector::Zero(l), sum_y2 = Vector::Zero(l);
    long prev_index = -1;
    long count = 0;

    for (const StreamSample& sample : stream) {
        if (sample.index >= 0) {
            if (sample.index <= prev_index)
                throw SequencingError("run_stream: sample index " + std::to_string(sample.index) +
                                      " not after " + std::to_string(prev_index));
            prev_index = sample.index;
        }
        if (sample.u_r.size() != net.input_dim())
            throw ShapeError("run_stream: selected-order vector size mismatch");
        if (static_cast<int>(sample.full_features.size()) != lasso_model.weights.cols())
            throw ShapeError("run_stream: full feature vector size mismatch");

        const Vector y_lasso =
            lasso_model.weights * sample.full_features + lasso_model.intercept;
        const Vector residual_target = sample.y_obs - y_lasso;

        const StepResult step = project_step(state, net, sample.u_r, residual_target);
        const Vector y_reservoir = step.prediction;
        if (adapt) {
            state = step.next;
        } else {
            state.x = step.next.x;  // reservoir advances; readout frozen
            state.step = step.next.step;
        }

        TrajectoryRow row;
        row.y_lasso = y_lasso;
        row.y_reservoir = y_reservoir;
        row.y_total = y_lasso + y_reservoir;
        row.y_obs = sample.y_obs;
        row.error = sample.y_obs - row.y_total;

        ++count;
        double acc = 0.0;
        bool defined = true;
        for (int q = 0; q < l; ++q) {
            sum_err2(q) += row.error(q) * row.error(q);
            sum_y(q) += sample.y_obs(q);
            sum_y2(q) += sample.y_obs(q) * sample.y_obs(q);
            const double mean = sum_y(q) / count;
            const double var = sum_y2(q) / count - mean * mean;
            if (var > 0)
                acc += std::sqrt(sum_err2(q) / (count * var));
            else
                defined = false;
        }
        row.cumulative_nrmse = defined ? acc / l : std::numeric_limits<double>::quiet_NaN();
        traj.rows.push_back(std::move(row));
    }

    traj.cumulative_nrmse = traj.rows.empty() ? 0.0 : traj.rows.back().cumulative_nrmse;
    traj.w_out_final = state.w_out;
    return traj;
}

std::vector<StreamSample> make_stream(const LaggedDataset& u_r_lagged,
                                      const LaggedDataset& full_lagged,
                                      const Matrix& y_observed) {
    if (u_r_lagged.n_eff() != full_lagged.n_eff() || y_observed.cols() != u_r_lagged.n_eff())
        throw ShapeError("make_stream: sample alignment mismatch");
    std::vector<StreamSample> stream(u_r_lagged.n_eff());
    for (int t = 0; t < u_r_lagged.n_eff(); ++t) {
        stream[t].u_r = u_r_lagged.design.row(t).transpose();
        stream[t].full_features = full_lagged.design.row(t).transpose();
        stream[t].y_obs = y_observed.col(t);
        stream[t].index = t;
    }
    return stream;
}

}  // namespace rscn
