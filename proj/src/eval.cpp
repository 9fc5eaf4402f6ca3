#include "rscn/eval.hpp"

#include "rscn/online.hpp"
#include "rscn/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>

namespace rscn {

namespace {

const std::map<Variant, std::string> kVariantNames = {
    {Variant::ESN, "ESN"},
    {Variant::ESN_L12, "ESN-L1,2"},
    {Variant::LASSO_ESN, "LASSO-ESN"},
    {Variant::LASSO_ESN_L2, "LASSO-ESN-L2"},
    {Variant::RSCN, "RSCN"},
    {Variant::RSCN_L12, "RSCN-L1,2"},
    {Variant::LASSO_RSCN, "LASSO-RSCN"},
    {Variant::LASSO_RSCN_L2, "LASSO-RSCN-L2"},
};

}  // namespace

std::string variant_name(Variant v) { return kVariantNames.at(v); }

Variant parse_variant(const std::string& name) {
    for (const auto& [variant, vname] : kVariantNames)
        if (vname == name) return variant;
    throw ConfigError("unknown model variant '" + name + "'");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> order = {
        Variant::ESN,        Variant::ESN_L12,   Variant::LASSO_ESN,  Variant::LASSO_ESN_L2,
        Variant::RSCN,       Variant::RSCN_L12,  Variant::LASSO_RSCN, Variant::LASSO_RSCN_L2,
    };
    return order;
}

bool variant_uses_lasso(Variant v) {
    return v == Variant::LASSO_ESN || v == Variant::LASSO_ESN_L2 || v == Variant::LASSO_RSCN ||
           v == Variant::LASSO_RSCN_L2;
}

bool variant_grows_reservoir(Variant v) {
    return v == Variant::RSCN || v == Variant::RSCN_L12 || v == Variant::LASSO_RSCN ||
           v == Variant::LASSO_RSCN_L2;
}

ReadoutKind variant_readout(Variant v) {
    switch (v) {
        case Variant::ESN_L12:
        case Variant::RSCN_L12:
            return ReadoutKind::ElasticNet;
        case Variant::LASSO_ESN_L2:
        case Variant::LASSO_RSCN_L2:
            return ReadoutKind::Ridge;
        default:
            return ReadoutKind::LeastSquares;
    }
}

TaskData prepare_data(const TaskSpec& task, std::uint64_t seed) {
    TaskData data;
    switch (task.source) {
        case DataSource::Sysid:
            data.train = generate_sysid_series(task.n_train, SysidPhase::Train,
                                               mix_seed(seed, 1));
            data.val = generate_sysid_series(task.n_val, SysidPhase::Train, mix_seed(seed, 2));
            // The test input is the deterministic sinusoid; no seed involved.
            data.test = generate_sysid_series(task.n_test, SysidPhase::Test, 0);
            break;
        case DataSource::Surrogate:
            data.train = generate_surrogate_series(task.n_train, mix_seed(seed, 1));
            data.val = generate_surrogate_series(task.n_val, mix_seed(seed, 2));
            data.test = generate_surrogate_series(task.n_test, mix_seed(seed, 3));
            break;
        case DataSource::Csv:
            data.train = load_csv(task.train_csv, task.schema);
            data.test = load_csv(task.test_csv, task.schema);
            data.val = add_gaussian_noise(data.test, task.val_noise_sigma, mix_seed(seed, 2));
            break;
    }
    return data;
}

namespace {

LaggedDataset select_columns(const LaggedDataset& d, const std::vector<int>& columns) {
    LaggedDataset out;
    out.washout = d.washout;
    out.offset = d.offset;
    out.targets = d.targets;
    out.design.resize(d.n_eff(), static_cast<int>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out.design.col(static_cast<int>(i)) = d.design.col(columns[i]);
        out.feature_map.push_back(d.feature_map.at(columns[i]));
    }
    return out;
}

}  // namespace

TrialResult run_single_trial(const TaskSpec& task, Variant variant, std::uint64_t seed,
                             HybridModel* model_out) {
    const TaskData data = prepare_data(task, seed);
    const bool with_lasso = variant_uses_lasso(variant);
    const LagSpec& spec = with_lasso ? task.screening_spec : task.base_spec;

    const LaggedDataset lag_train = build_lagged(data.train, spec, task.washout);
    const LaggedDataset lag_val = build_lagged(data.val, spec, task.washout);
    const LaggedDataset lag_test = build_lagged(data.test, spec, task.washout);

    const Standardizer stats = standardize_fit(lag_train);
    const LaggedDataset s_train = standardize_apply(stats, lag_train);
    const LaggedDataset s_val = standardize_apply(stats, lag_val);
    const LaggedDataset s_test = standardize_apply(stats, lag_test);

    LassoModel linear;
    OrderSelection selection;
    std::vector<int> selected_cols;
    if (with_lasso) {
        const std::vector<double> grid =
            default_cl_grid(s_train, task.lasso_grid_points, task.lasso_grid_decades);
        const LassoPath path = fit_path(s_train, grid, task.lasso_folds);
        const double c_l = select_c_l(path);
        const auto it = std::find(path.grid.begin(), path.grid.end(), c_l);
        linear.weights = path.coefs.at(it - path.grid.begin());
        linear.c_l = c_l;
        linear.feature_map = s_train.feature_map;
        linear.intercept = stats.target_mean;
        selection = select_orders(linear, task.selection_threshold, &stats);
        for (int j = 0; j < s_train.features(); ++j) {
            const bool keep = std::find(selection.selected.begin(), selection.selected.end(),
                                        s_train.feature_map[j]) != selection.selected.end();
            if (keep) selected_cols.push_back(j);
        }
    } else {
        // Mean-only linear part; the reservoir then trains on centered
        // targets and every variant flows through the same compensation.
        linear.weights = Matrix::Zero(lag_train.targets.rows(), s_train.features());
        linear.c_l = 0.0;
        linear.feature_map = s_train.feature_map;
        linear.intercept = stats.target_mean;
        for (int j = 0; j < s_train.features(); ++j) selected_cols.push_back(j);
    }

    const Matrix y_lasso_train = predict(linear, s_train);
    const Matrix y_lasso_val = predict(linear, s_val);
    const Matrix y_lasso_test = predict(linear, s_test);
    const Matrix resid_train = residuals(lag_train.targets, y_lasso_train);
    const Matrix resid_val = residuals(lag_val.targets, y_lasso_val);

    const LaggedDataset ur_train = select_columns(s_train, selected_cols);
    const LaggedDataset ur_val = select_columns(s_val, selected_cols);
    const LaggedDataset ur_test = select_columns(s_test, selected_cols);

    TrialResult result;
    ReservoirNet net;
    Readout readout;
    using Clock = std::chrono::steady_clock;
    if (variant_grows_reservoir(variant)) {
        ScTrainConfig cfg = task.sc;
        cfg.seed = mix_seed(seed, 4);
        cfg.readout = variant_readout(variant);
        cfg.elastic_c_l = task.elastic_c_l;
        if (variant == Variant::LASSO_RSCN_L2) {
            cfg.constraint_c = -1;  // regularized constraint with c
        } else {
            cfg.constraint_c = 0.0;  // original supervisory mechanism
            if (cfg.readout == ReadoutKind::LeastSquares) cfg.c = 0.0;
        }
        const auto t0 = Clock::now();
        GrowResult grown = grow({ur_train.design.transpose(), resid_train},
                                {ur_val.design.transpose(), resid_val}, cfg);
        result.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        net = std::move(grown.net);
        readout = std::move(grown.readout);
        result.report = std::move(grown.report);
        result.has_report = true;
        result.reservoir_size = net.nodes();
    } else {
        const auto t0 = Clock::now();
        net = build_esn(static_cast<int>(selected_cols.size()), task.esn_nodes, task.esn_lambda,
                        task.sc.sparsity, task.sc.alpha, mix_seed(seed, 4));
        const Matrix u_r = ur_train.design.transpose();
        const Matrix ext = extended_states(compute_states(net, u_r), u_r);
        switch (variant_readout(variant)) {
            case ReadoutKind::Ridge:
                readout = solve_readout_ridge(ext, resid_train, task.sc.c);
                break;
            case ReadoutKind::ElasticNet:
                readout = solve_readout_elastic(ext, resid_train, task.elastic_c_l, task.sc.c);
                break;
            case ReadoutKind::LeastSquares:
                readout = solve_readout_ls(ext, resid_train);
                break;
        }
        result.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        result.reservoir_size = task.esn_nodes;
    }

    const Matrix train_pred = predict_compensated(net, readout, linear, ur_train, s_train);
    const Matrix test_pred = predict_compensated(net, readout, linear, ur_test, s_test);
    result.train_nrmse = nrmse(train_pred, lag_train.targets);
    result.test_nrmse = nrmse(test_pred, lag_test.targets);

    if (model_out) {
        model_out->lasso = std::move(linear);
        model_out->standardizer = stats;
        model_out->selected_columns = selected_cols;
        model_out->selection = std::move(selection);
        model_out->net = std::move(net);
        model_out->readout = std::move(readout);
        model_out->spec = spec;
        model_out->washout = task.washout;
        model_out->target_names = data.train.target_names;
    }
    return result;
}

Matrix predict_series(const HybridModel& model, const RawSeries& raw, bool free_running) {
    if (!free_running) {
        const LaggedDataset lag = build_lagged(raw, model.spec, model.washout);
        const LaggedDataset s = standardize_apply(model.standardizer, lag);
        const LaggedDataset ur = select_columns(s, model.selected_columns);
        return predict_compensated(model.net, model.readout, model.lasso, ur, s);
    }

    // Free-running: measured outputs are replaced by the model's own
    // predictions in every output-lag regressor once available.
    const LaggedDataset lag = build_lagged(raw, model.spec, model.washout);
    Matrix fed_targets = raw.targets;
    const int offset = lag.offset;
    const int n_eff = lag.n_eff();
    const int f = static_cast<int>(model.spec.input_lags.size());
    Matrix predictions(raw.targets.rows(), n_eff);

    auto target_row = [&](const std::string& name) {
        for (int q = 0; q < static_cast<int>(model.target_names.size()); ++q)
            if (model.target_names[q] == name) return q;
        throw SchemaError("predict_series: unknown target '" + name + "'");
    };
    auto input_row = [&](const std::string& name) {
        for (int k = 0; k < static_cast<int>(raw.input_names.size()); ++k)
            if (raw.input_names[k] == name) return k;
        throw SchemaError("predict_series: unknown input '" + name + "'");
    };
    (void)f;

    Vector x = Vector::Zero(model.net.nodes());
    for (int t = 0; t < n_eff; ++t) {
        const int abs_t = t + offset;
        Vector features(lag.features());
        for (int j = 0; j < lag.features(); ++j) {
            const FeatureKey& key = lag.feature_map[j];
            const double v = key.is_output ? fed_targets(target_row(key.variable), abs_t - key.lag)
                                           : raw.inputs(input_row(key.variable), abs_t - key.lag);
            features(j) = (v - model.standardizer.feature_mean(j)) /
                          model.standardizer.feature_scale(j);
        }
        const Vector y_lasso = model.lasso.weights * features + model.lasso.intercept;
        Vector u_r(model.selected_columns.size());
        for (std::size_t i = 0; i < model.selected_columns.size(); ++i)
            u_r(static_cast<int>(i)) = features(model.selected_columns[i]);

        Vector pre = model.net.w_in * u_r + model.net.b;
        pre.noalias() += model.net.w_r.triangularView<Eigen::Lower>() * x;
        x = pre.array().tanh();
        Vector ext(model.net.nodes() + u_r.size());
        ext.head(model.net.nodes()) = x;
        ext.tail(u_r.size()) = u_r;
        const Vector y_total = y_lasso + model.readout.w_out * ext;
        predictions.col(t) = y_total;
        fed_targets.col(abs_t) = y_total;
    }
    return predictions;
}

namespace {

struct Welford {
    double mean(const std::vector<double>& xs) const {
        double m = 0;
        for (double x : xs) m += x;
        return xs.empty() ? 0.0 : m / xs.size();
    }
    double pop_std(const std::vector<double>& xs) const {
        if (xs.size() < 2) return 0.0;
        const double m = mean(xs);
        double acc = 0;
        for (double x : xs) acc += (x - m) * (x - m);
        return std::sqrt(acc / xs.size());
    }
};

}  // namespace

TrialSummary run_trials(const TaskSpec& task, Variant variant, int n_trials,
                        std::uint64_t base_seed, int workers) {
    if (n_trials < 1) throw ArgumentError("run_trials: n_trials must be >= 1");
    TrialSummary summary;
    summary.model = variant_name(variant);

    std::vector<std::optional<TrialResult>> results(n_trials);
    std::vector<std::string> failures(n_trials);
    auto run_one = [&](int i) {
        try {
            results[i] = run_single_trial(task, variant, base_seed + static_cast<std::uint64_t>(i));
        } catch (const std::exception& ex) {
            failures[i] = "trial " + std::to_string(i) + ": " + ex.what();
        }
    };

    if (workers <= 1) {
        for (int i = 0; i < n_trials; ++i) run_one(i);
    } else {
        for (int begin = 0; begin < n_trials; begin += workers) {
            std::vector<std::future<void>> batch;
            const int end = std::min(n_trials, begin + workers);
            for (int i = begin; i < end; ++i)
                batch.push_back(std::async(std::launch::async, run_one, i));
            for (auto& f : batch) f.get();
        }
    }

    std::vector<double> train_nrmse, test_nrmse, seconds, sizes;
    for (int i = 0; i < n_trials; ++i) {
        if (!results[i]) {
            summary.complete = false;
            summary.failures.push_back(failures[i]);
            continue;
        }
        summary.per_trial.push_back(*results[i]);
        train_nrmse.push_back(results[i]->train_nrmse);
        test_nrmse.push_back(results[i]->test_nrmse);
        seconds.push_back(results[i]->train_seconds);
        sizes.push_back(results[i]->reservoir_size);
    }
    summary.trials = static_cast<int>(summary.per_trial.size());
    if (summary.trials == 0)
        throw NumericError("run_trials: every trial failed; first failure: " +
                           (summary.failures.empty() ? "?" : summary.failures.front()));

    const Welford w;
    summary.train_nrmse_mean = w.mean(train_nrmse);
    summary.train_nrmse_std = w.pop_std(train_nrmse);
    summary.test_nrmse_mean = w.mean(test_nrmse);
    summary.test_nrmse_std = w.pop_std(test_nrmse);
    summary.train_seconds_mean = w.mean(seconds);
    summary.train_seconds_std = w.pop_std(seconds);
    summary.reservoir_size_mean = w.mean(sizes);
    return summary;
}

std::pair<int, int> GridSurface::argmin_cell() const {
    int best_n = -1, best_c = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int ni = 0; ni < mean_nrmse.rows(); ++ni)
        for (int ci = 0; ci < mean_nrmse.cols(); ++ci)
            if (trials(ni, ci) > 0 && mean_nrmse(ni, ci) < best) {
                best = mean_nrmse(ni, ci);
                best_n = ni;
                best_c = ci;
            }
    if (best_n < 0) throw NumericError("GridSurface: no successful cells");
    return {best_n, best_c};
}

GridSurface grid_search(const TaskSpec& task, Variant variant, const std::vector<double>& c_values,
                        const std::vector<int>& n_values, int trials_per_cell,
                        std::uint64_t base_seed, int workers) {
    if (c_values.empty() || n_values.empty()) throw ArgumentError("grid_search: empty axes");
    if (trials_per_cell < 1) throw ArgumentError("grid_search: trials_per_cell must be >= 1");

    GridSurface surface;
    surface.c_values = c_values;
    surface.n_values = n_values;
    surface.trials_per_cell = trials_per_cell;
    const int rows = static_cast<int>(n_values.size());
    const int cols = static_cast<int>(c_values.size());
    surface.mean_nrmse = Matrix::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
    surface.std_nrmse = Matrix::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
    surface.trials = Eigen::MatrixXi::Zero(rows, cols);

    struct Cell {
        int ni, ci, trial;
        std::optional<double> nrmse;
        std::string failure;
    };
    std::vector<Cell> cells;
    for (int ni = 0; ni < rows; ++ni)
        for (int ci = 0; ci < cols; ++ci)
            for (int t = 0; t < trials_per_cell; ++t) cells.push_back({ni, ci, t, {}, {}});

    auto run_cell = [&](Cell& cell) {
        TaskSpec cfg = task;
        cfg.sc.c = c_values[cell.ci];
        cfg.sc.n_max_nodes = n_values[cell.ni];
        cfg.sc.n_step = std::min(cfg.sc.n_step, std::max(1, n_values[cell.ni] - 1));
        cfg.sc.initial_nodes = std::min(cfg.sc.initial_nodes, n_values[cell.ni]);
        try {
            // Trial seeds repeat across cells: common random numbers keep
            // cells comparable and capped-identical runs exactly tied.
            const TrialResult r = run_single_trial(
                cfg, variant, base_seed + static_cast<std::uint64_t>(cell.trial));
            cell.nrmse = r.test_nrmse;
        } catch (const std::exception& ex) {
            cell.failure = "cell (c=" + std::to_string(c_values[cell.ci]) +
                           ", n=" + std::to_string(n_values[cell.ni]) + ") trial " +
                           std::to_string(cell.trial) + ": " + ex.what();
        }
    };

    if (workers <= 1) {
        for (auto& cell : cells) run_cell(cell);
    } else {
        for (std::size_t begin = 0; begin < cells.size(); begin += workers) {
            std::vector<std::future<void>> batch;
            const std::size_t end = std::min(cells.size(), begin + workers);
            for (std::size_t i = begin; i < end; ++i)
                batch.push_back(std::async(std::launch::async, run_cell, std::ref(cells[i])));
            for (auto& f : batch) f.get();
        }
    }

    for (int ni = 0; ni < rows; ++ni) {
        for (int ci = 0; ci < cols; ++ci) {
            std::vector<double> vals;
            for (const Cell& cell : cells) {
                if (cell.ni != ni || cell.ci != ci) continue;
                if (cell.nrmse) vals.push_back(*cell.nrmse);
                else surface.failures.push_back(cell.failure);
            }
            if (vals.empty()) continue;
            const Welford w;
            surface.mean_nrmse(ni, ci) = w.mean(vals);
            surface.std_nrmse(ni, ci) = w.pop_std(vals);
            surface.trials(ni, ci) = static_cast<int>(vals.size());
        }
    }
    return surface;
}

namespace {

void ensure_writable(std::ofstream& out, const std::string& path) {
    if (!out) throw ParseError("cannot write '" + path + "'");
}

}  // namespace

void export_summary_csv(const std::string& path, const std::vector<TrialSummary>& summaries) {
    if (summaries.empty()) throw ArgumentError("export_summary_csv: nothing to export");
    std::ofstream out(path);
    ensure_writable(out, path);
    out.precision(17);
    out << "model,reservoir_size,training_time_mean,training_time_std,"
           "training_nrmse_mean,training_nrmse_std,testing_nrmse_mean,testing_nrmse_std,"
           "trials,complete\n";
    for (const auto& s : summaries) {
        out << s.model << ',' << s.reservoir_size_mean << ',' << s.train_seconds_mean << ','
            << s.train_seconds_std << ',' << s.train_nrmse_mean << ',' << s.train_nrmse_std << ','
            << s.test_nrmse_mean << ',' << s.test_nrmse_std << ',' << s.trials << ','
            << (s.complete ? 1 : 0) << '\n';
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void export_summary_json(const std::string& path, const std::vector<TrialSummary>& summaries) {
    if (summaries.empty()) throw ArgumentError("export_summary_json: nothing to export");
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& s : summaries) {
        nlohmann::json trials = nlohmann::json::array();
        for (const auto& t : s.per_trial) {
            trials.push_back({{"train_nrmse", t.train_nrmse},
                              {"test_nrmse", t.test_nrmse},
                              {"train_seconds", t.train_seconds},
                              {"reservoir_size", t.reservoir_size}});
        }
        doc.push_back({{"model", s.model},
                       {"reservoir_size_mean", s.reservoir_size_mean},
                       {"training_time_mean", s.train_seconds_mean},
                       {"training_time_std", s.train_seconds_std},
                       {"training_nrmse_mean", s.train_nrmse_mean},
                       {"training_nrmse_std", s.train_nrmse_std},
                       {"testing_nrmse_mean", s.test_nrmse_mean},
                       {"testing_nrmse_std", s.test_nrmse_std},
                       {"trials", s.trials},
                       {"complete", s.complete},
                       {"failures", s.failures},
                       {"per_trial", trials}});
    }
    std::ofstream out(path);
    ensure_writable(out, path);
    out << doc.dump(2) << '\n';
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void export_surface_csv(const std::string& path, const GridSurface& surface) {
    if (surface.c_values.empty() || surface.n_values.empty())
        throw ArgumentError("export_surface_csv: empty surface");
    std::ofstream out(path);
    ensure_writable(out, path);
    out.precision(17);
    out << "c,n,mean,std,trials\n";
    for (std::size_t ni = 0; ni < surface.n_values.size(); ++ni)
        for (std::size_t ci = 0; ci < surface.c_values.size(); ++ci)
            out << surface.c_values[ci] << ',' << surface.n_values[ni] << ','
                << surface.mean_nrmse(ni, ci) << ',' << surface.std_nrmse(ni, ci) << ','
                << surface.trials(ni, ci) << '\n';
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void export_surface_json(const std::string& path, const GridSurface& surface) {
    if (surface.c_values.empty() || surface.n_values.empty())
        throw ArgumentError("export_surface_json: empty surface");
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t ni = 0; ni < surface.n_values.size(); ++ni)
        for (std::size_t ci = 0; ci < surface.c_values.size(); ++ci)
            cells.push_back({{"c", surface.c_values[ci]},
                             {"n", surface.n_values[ni]},
                             {"mean", surface.trials(ni, ci) > 0
                                          ? nlohmann::json(surface.mean_nrmse(ni, ci))
                                          : nlohmann::json(nullptr)},
                             {"std", surface.trials(ni, ci) > 0
                                         ? nlohmann::json(surface.std_nrmse(ni, ci))
                                         : nlohmann::json(nullptr)},
                             {"trials", surface.trials(ni, ci)}});
    nlohmann::json doc = {{"c_values", surface.c_values},
                          {"n_values", surface.n_values},
                          {"trials_per_cell", surface.trials_per_cell},
                          {"cells", cells},
                          {"failures", surface.failures}};
    std::ofstream out(path);
    ensure_writable(out, path);
    out << doc.dump(2) << '\n';
    if (!out) throw ParseError("write failed for '" + path + "'");
}

}  // namespace rscn
