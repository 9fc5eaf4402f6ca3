#include <doctest.h>

#include "rscn/dataset.hpp"
#include "rscn/online.hpp"
#include "rscn/random.hpp"

#include <cmath>
#include <random>

using namespace rscn;

namespace {

ReservoirNet small_net(int nodes, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ReservoirNet net;
    net.w_in.resize(nodes, k);
    net.b.resize(nodes);
    net.w_r = Matrix::Zero(nodes, nodes);
    for (int i = 0; i < nodes; ++i) {
        for (int j = 0; j < k; ++j) net.w_in(i, j) = uniform_sym(rng, 0.6);
        net.b(i) = uniform_sym(rng, 0.2);
        for (int j = 0; j <= i; ++j)
            if (uniform01(rng) < 0.4) net.w_r(i, j) = uniform_sym(rng, 0.4);
    }
    return net;
}

}  // namespace

TEST_CASE("project_step update arithmetic") {
    ReservoirNet net = small_net(2, 1, 3);
    OnlineState state;
    state.x = Vector::Zero(2);
    state.w_out = Matrix::Zero(1, 3);
    state.w_out << 0.5, -0.2, 0.9;
    state.guard = 1e-12;

    Vector u(1);
    u << 0.3;
    Vector y(1);
    y << 0.7;

    StepResult res = project_step(state, net, u, y);

    // manual recursion
    Vector pre = net.w_in * u + net.b;
    Vector x_new = pre.array().tanh();
    Vector g(3);
    g << x_new(0), x_new(1), 0.3;
    const double expected_pred = state.w_out.row(0).dot(g);
    CHECK(res.prediction(0) == doctest::Approx(expected_pred).epsilon(1e-14));

    const double denom = state.guard + g.squaredNorm();
    Vector expected_w = state.w_out.row(0).transpose() + (y(0) - expected_pred) / denom * g;
    CHECK((res.next.w_out.row(0).transpose() - expected_w).cwiseAbs().maxCoeff() <= 1e-14);

    // interpolation: the updated readout reproduces the observation
    CHECK(res.next.w_out.row(0).dot(g) == doctest::Approx(y(0)).epsilon(1e-10));
    CHECK(res.next.step == 1);
}

TEST_CASE("project_step zero innovation leaves readout unchanged") {
    ReservoirNet net = small_net(3, 1, 5);
    OnlineState state;
    state.x = Vector::Zero(3);
    state.w_out = Matrix::Random(1, 4);
    state.guard = 1e-8;
    Vector u(1);
    u << -0.4;

    StepResult first = project_step(state, net, u, Vector::Constant(1, 123.0));
    // feed the model its own prediction: y_obs = W g exactly
    Vector y_self = first.prediction;
    StepResult res = project_step(state, net, u, y_self);
    CHECK((res.next.w_out - state.w_out).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("project_step interpolation property over random steps") {
    ReservoirNet net = small_net(4, 2, 7);
    std::mt19937_64 rng(11);
    OnlineState state;
    state.x = Vector::Zero(4);
    state.w_out = Matrix::Zero(1, 6);
    state.guard = 1e-10;

    for (int step = 0; step < 200; ++step) {
        Vector u(2);
        u << uniform_sym(rng, 1.0), uniform_sym(rng, 1.0);
        Vector y(1);
        y << uniform_sym(rng, 2.0);
        StepResult res = project_step(state, net, u, y);
        Vector g(6);
        g.head(4) = res.next.x;
        g.tail(2) = u;
        if (state.guard <= 1e-8 * g.squaredNorm())
            CHECK(std::abs(res.next.w_out.row(0).dot(g) - y(0)) <= 1e-8 * (1 + std::abs(y(0))));
        state = res.next;
    }
}

TEST_CASE("project_step minimal-change against the constrained oracle") {
    ReservoirNet net = small_net(3, 2, 13);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        OnlineState state;
        state.x = Vector::Zero(3);
        for (int i = 0; i < 3; ++i) state.x(i) = uniform_sym(rng, 0.5);
        state.w_out = Matrix::Zero(1, 5);
        for (int i = 0; i < 5; ++i) state.w_out(0, i) = uniform_sym(rng, 1.0);
        state.guard = 1e-300;

        Vector u(2);
        u << uniform_sym(rng, 1.0), uniform_sym(rng, 1.0);
        Vector y(1);
        y << uniform_sym(rng, 2.0);
        StepResult res = project_step(state, net, u, y);

        Vector g(5);
        g.head(3) = res.next.x;
        g.tail(2) = u;

        // equality-constrained least-change oracle via the KKT system
        Matrix kkt = Matrix::Zero(6, 6);
        kkt.topLeftCorner(5, 5) = Matrix::Identity(5, 5);
        kkt.topRightCorner(5, 1) = -g;
        kkt.bottomLeftCorner(1, 5) = g.transpose();
        Vector rhs(6);
        rhs.head(5) = state.w_out.row(0).transpose();
        rhs(5) = y(0);
        Vector sol = kkt.fullPivLu().solve(rhs);
        Vector v_oracle = sol.head(5);

        CHECK((res.next.w_out.row(0).transpose() - v_oracle).cwiseAbs().maxCoeff() <= 1e-9);

        // any feasible point is at least as far from the old readout
        const double moved = (res.next.w_out - state.w_out).norm();
        for (int probe = 0; probe < 5; ++probe) {
            Vector z(5);
            for (int i = 0; i < 5; ++i) z(i) = uniform_sym(rng, 1.0);
            Vector feasible = v_oracle + (z - g * (g.dot(z) / g.squaredNorm()));
            CHECK(std::abs(feasible.dot(g) - y(0)) <= 1e-8);
            CHECK(moved <= (feasible - state.w_out.row(0).transpose()).norm() + 1e-9);
        }
    }
}

TEST_CASE("run_stream frozen mode equals batch prediction") {
    RawSeries raw = generate_sysid_series(150, SysidPhase::Train, 21);
    LagSpec spec;
    spec.input_lags = {{"u", {0}}};
    spec.output_lags = {{"y", {1}}};
    LaggedDataset lag = build_lagged(raw, spec, 5);
    Standardizer stats = standardize_fit(lag);
    LaggedDataset z = standardize_apply(stats, lag);

    ReservoirNet net = small_net(6, 2, 23);
    Matrix u_r = z.design.transpose();
    Matrix states = compute_states(net, u_r);
    Readout readout = solve_readout_ridge(extended_states(states, u_r), z.targets, 1e-2);

    LassoModel linear;
    linear.weights = Matrix::Zero(1, 2);
    linear.intercept = stats.target_mean;
    linear.feature_map = z.feature_map;

    const Matrix batch = predict_compensated(net, readout, linear, z, z);

    std::vector<StreamSample> stream = make_stream(z, z, lag.targets);
    Trajectory traj = run_stream(net, readout, linear, stream, false);
    REQUIRE(traj.rows.size() == static_cast<std::size_t>(lag.n_eff()));
    for (int t = 0; t < lag.n_eff(); ++t)
        CHECK(traj.rows[t].y_total(0) == doctest::Approx(batch(0, t)).epsilon(1e-12));
    CHECK(traj.w_out_final.isApprox(readout.w_out, 0));
}

TEST_CASE("run_stream adaptive mode tracks an injected offset") {
    RawSeries raw = generate_sysid_series(500, SysidPhase::Train, 29);
    LagSpec spec;
    spec.input_lags = {{"u", {0}}};
    spec.output_lags = {{"y", {1}}};
    LaggedDataset lag = build_lagged(raw, spec, 5);
    Standardizer stats = standardize_fit(lag);
    LaggedDataset z = standardize_apply(stats, lag);

    ReservoirNet net = small_net(8, 2, 31);
    Matrix u_r = z.design.transpose();
    Matrix states = compute_states(net, u_r);
    Readout readout = solve_readout_ridge(extended_states(states, u_r), z.targets, 1e-2);

    LassoModel linear;
    linear.weights = Matrix::Zero(1, 2);
    linear.intercept = stats.target_mean;
    linear.feature_map = z.feature_map;

    Matrix shifted = lag.targets;
    for (int t = 200; t < shifted.cols(); ++t) shifted(0, t) += 0.4;
    std::vector<StreamSample> stream = make_stream(z, z, shifted);

    Trajectory frozen = run_stream(net, readout, linear, stream, false);
    Trajectory adaptive = run_stream(net, readout, linear, stream, true);

    auto window_rms = [](const Trajectory& traj, int begin, int end) {
        double acc = 0;
        for (int t = begin; t < end; ++t) acc += traj.rows[t].error(0) * traj.rows[t].error(0);
        return std::sqrt(acc / (end - begin));
    };
    const int end = static_cast<int>(stream.size());
    CHECK(window_rms(adaptive, 200, end) < window_rms(frozen, 200, end));
}

TEST_CASE("run_stream rejects out-of-order samples") {
    ReservoirNet net = small_net(2, 1, 37);
    Readout readout;
    readout.w_out = Matrix::Zero(1, 3);
    LassoModel linear;
    linear.weights = Matrix::Zero(1, 1);
    linear.intercept = Vector::Zero(1);
    linear.feature_map = {{"u", 0, false}};

    std::vector<StreamSample> stream(2);
    for (auto& s : stream) {
        s.u_r = Vector::Zero(1);
        s.full_features = Vector::Zero(1);
        s.y_obs = Vector::Zero(1);
    }
    stream[0].index = 5;
    stream[1].index = 5;
    CHECK_THROWS_AS(run_stream(net, readout, linear, stream, true), SequencingError);
}
