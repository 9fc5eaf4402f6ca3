#include <doctest.h>

#include "rscn/eval.hpp"
#include "rscn/presets.hpp"
#include "rscn/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace rscn;

namespace {

std::string temp_path(const std::string& stem) {
    return (std::filesystem::temp_directory_path() / ("rscn_eval_" + stem)).string();
}

// Desk-scale task so the multi-trial harness stays fast in unit tests.
TaskSpec small_sysid_task() {
    TaskSpec task = sysid_task();
    task.n_train = 300;
    task.n_val = 150;
    task.n_test = 150;
    task.lasso_grid_points = 15;
    task.sc.n_max_nodes = 15;
    task.sc.n_step = 3;
    task.sc.g_max = 20;
    task.sc.sparsity = 0.1;
    task.esn_nodes = 12;
    return task;
}

}  // namespace

TEST_CASE("nrmse identities") {
    Matrix t(1, 4);
    t << 1, 2, 3, 4;
    SUBCASE("perfect prediction") { CHECK(nrmse(t, t) == 0.0); }
    SUBCASE("constant-mean predictor scores one") {
        Matrix y = Matrix::Constant(1, 4, t.mean());
        CHECK(nrmse(y, t) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("direct evaluation with population variance") {
        Matrix t2(1, 2);
        t2 << 0, 2;
        Matrix y2 = Matrix::Zero(1, 2);
        CHECK(nrmse(y2, t2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("scale invariance") {
        Matrix y(1, 4);
        y << 1.5, 1.0, 3.2, 4.4;
        CHECK(nrmse(7.0 * y, 7.0 * t) == doctest::Approx(nrmse(y, t)).epsilon(1e-12));
    }
    SUBCASE("constant target is an error") {
        Matrix c = Matrix::Constant(1, 4, 3.0);
        CHECK_THROWS_AS(nrmse(t, c), NumericError);
    }
    SUBCASE("multi-output averages per-output values") {
        Matrix t2(2, 3), y2(2, 3);
        t2 << 1, 2, 3, 4, 6, 8;
        y2 << 1, 2, 3, 4, 6, 8;
        CHECK(nrmse(y2, t2) == 0.0);
    }
}

TEST_CASE("variant naming round trip") {
    for (Variant v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("LSTM"), ConfigError);
    CHECK(variant_uses_lasso(Variant::LASSO_RSCN_L2));
    CHECK_FALSE(variant_uses_lasso(Variant::RSCN));
    CHECK(variant_grows_reservoir(Variant::RSCN_L12));
    CHECK_FALSE(variant_grows_reservoir(Variant::ESN_L12));
    CHECK(variant_readout(Variant::LASSO_RSCN_L2) == ReadoutKind::Ridge);
    CHECK(variant_readout(Variant::ESN_L12) == ReadoutKind::ElasticNet);
    CHECK(variant_readout(Variant::LASSO_ESN) == ReadoutKind::LeastSquares);
}

TEST_CASE("run_trials determinism and statistics") {
    TaskSpec task = small_sysid_task();
    SUBCASE("single trial has zero std") {
        TrialSummary s = run_trials(task, Variant::LASSO_ESN_L2, 1, 7);
        CHECK(s.trials == 1);
        CHECK(s.test_nrmse_std == 0.0);
        CHECK(s.complete);
    }
    SUBCASE("same base seed reproduces the summary") {
        TrialSummary a = run_trials(task, Variant::LASSO_RSCN_L2, 2, 11);
        TrialSummary b = run_trials(task, Variant::LASSO_RSCN_L2, 2, 11);
        CHECK(a.test_nrmse_mean == b.test_nrmse_mean);
        CHECK(a.train_nrmse_mean == b.train_nrmse_mean);
        CHECK(a.reservoir_size_mean == b.reservoir_size_mean);
    }
    SUBCASE("summary statistics match per-trial records") {
        TrialSummary s = run_trials(task, Variant::ESN, 3, 5);
        double mean = 0;
        for (const auto& t : s.per_trial) mean += t.test_nrmse;
        mean /= s.per_trial.size();
        CHECK(s.test_nrmse_mean == doctest::Approx(mean).epsilon(1e-12));
        double var = 0;
        for (const auto& t : s.per_trial) var += (t.test_nrmse - mean) * (t.test_nrmse - mean);
        CHECK(s.test_nrmse_std == doctest::Approx(std::sqrt(var / s.per_trial.size())).epsilon(1e-12));
    }
}

TEST_CASE("grid_search single cell equals run_trials") {
    TaskSpec task = small_sysid_task();
    GridSurface surface =
        grid_search(task, Variant::LASSO_RSCN_L2, {task.sc.c}, {task.sc.n_max_nodes}, 2, 13);
    TrialSummary direct = run_trials(task, Variant::LASSO_RSCN_L2, 2, 13);
    CHECK(surface.mean_nrmse(0, 0) == doctest::Approx(direct.test_nrmse_mean).epsilon(1e-12));
    auto [ni, ci] = surface.argmin_cell();
    CHECK(ni == 0);
    CHECK(ci == 0);
}

TEST_CASE("grid argmin is the smallest mean") {
    TaskSpec task = small_sysid_task();
    GridSurface surface = grid_search(task, Variant::LASSO_RSCN_L2, {1e-3, 1e-1}, {8, 15}, 1, 3);
    auto [ni, ci] = surface.argmin_cell();
    for (int i = 0; i < surface.mean_nrmse.rows(); ++i)
        for (int j = 0; j < surface.mean_nrmse.cols(); ++j)
            if (surface.trials(i, j) > 0) CHECK(surface.mean_nrmse(ni, ci) <= surface.mean_nrmse(i, j));
}

TEST_CASE("summary export round trip") {
    TaskSpec task = small_sysid_task();
    TrialSummary s = run_trials(task, Variant::ESN, 2, 19);
    const std::string csv = temp_path("summary.csv");
    const std::string json_path = temp_path("summary.json");
    export_summary_csv(csv, {s});
    export_summary_json(json_path, {s});

    std::ifstream in(json_path);
    nlohmann::json doc;
    in >> doc;
    CHECK(doc[0]["model"] == "ESN");
    CHECK(doc[0]["testing_nrmse_mean"].get<double>() == s.test_nrmse_mean);
    CHECK(doc[0]["per_trial"].size() == 2);

    std::ifstream csv_in(csv);
    std::string header;
    std::getline(csv_in, header);
    CHECK(header ==
          "model,reservoir_size,training_time_mean,training_time_std,training_nrmse_mean,"
          "training_nrmse_std,testing_nrmse_mean,testing_nrmse_std,trials,complete");
    std::remove(csv.c_str());
    std::remove(json_path.c_str());
}

TEST_CASE("surface export and empty-surface error") {
    GridSurface empty;
    CHECK_THROWS_AS(export_surface_csv(temp_path("s.csv"), empty), ArgumentError);

    TaskSpec task = small_sysid_task();
    GridSurface surface = grid_search(task, Variant::LASSO_ESN_L2, {1e-2}, {10}, 1, 23);
    const std::string path = temp_path("surface.json");
    export_surface_json(path, surface);
    std::ifstream in(path);
    nlohmann::json doc;
    in >> doc;
    CHECK(doc["c_values"].size() == 1);
    CHECK(doc["cells"].size() == 1);
    CHECK(doc["cells"][0]["trials"] == 1);
    std::remove(path.c_str());
}

TEST_CASE("hybrid model round trip through JSON") {
    TaskSpec task = small_sysid_task();
    HybridModel model;
    run_single_trial(task, Variant::LASSO_RSCN_L2, 31, &model);

    const std::string path = temp_path("model.json");
    save_model(path, model);
    HybridModel loaded = load_model(path);
    std::remove(path.c_str());

    RawSeries test = generate_sysid_series(120, SysidPhase::Test, 0);
    Matrix a = predict_series(model, test);
    Matrix b = predict_series(loaded, test);
    CHECK(a.isApprox(b, 1e-12));
    CHECK(loaded.net.nodes() == model.net.nodes());
    CHECK(loaded.selected_columns == model.selected_columns);
}

TEST_CASE("free-running equals teacher forcing without output lags") {
    TaskSpec task = small_sysid_task();
    task.screening_spec.output_lags.clear();  // inputs only
    HybridModel model;
    run_single_trial(task, Variant::LASSO_RSCN_L2, 37, &model);
    RawSeries test = generate_sysid_series(100, SysidPhase::Test, 0);
    Matrix forced = predict_series(model, test, false);
    Matrix free = predict_series(model, test, true);
    CHECK(forced.isApprox(free, 1e-10));
}

TEST_CASE("free-running diverges from teacher forcing with output lags") {
    TaskSpec task = small_sysid_task();
    HybridModel model;
    run_single_trial(task, Variant::LASSO_RSCN_L2, 41, &model);
    RawSeries test = generate_sysid_series(100, SysidPhase::Test, 0);
    Matrix forced = predict_series(model, test, false);
    Matrix free = predict_series(model, test, true);
    CHECK_FALSE(forced.isApprox(free, 1e-6));
}

TEST_CASE("task config json round trip rejects unknown keys") {
    TaskSpec task = sysid_task();
    const std::string text = task_to_json_string(task);
    TaskSpec back = task_from_json_string(text);
    CHECK(back.name == task.name);
    CHECK(back.n_train == task.n_train);
    CHECK(back.sc.n_max_nodes == task.sc.n_max_nodes);
    CHECK(back.sc.lambda_grid == task.sc.lambda_grid);
    CHECK(back.screening_spec.input_lags == task.screening_spec.input_lags);
    CHECK(back.base_spec.output_lags == task.base_spec.output_lags);

    CHECK_THROWS_AS(task_from_json_string("{\"definitely_not_a_key\": 1}"), ConfigError);
    CHECK_THROWS_AS(task_from_json_string("{\"reservoir\": {\"bogus\": 1}}"), ConfigError);
    CHECK_THROWS_AS(task_from_json_string("not json"), ParseError);
}

TEST_CASE("build report and selection exports") {
    TaskSpec task = small_sysid_task();
    HybridModel model;
    TrialResult res = run_single_trial(task, Variant::LASSO_RSCN_L2, 43, &model);
    REQUIRE(res.has_report);

    const std::string report_path = temp_path("report.csv");
    save_build_report_csv(report_path, res.report);
    std::ifstream in(report_path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == static_cast<int>(res.report.records.size()) + 2);  // header + trailer
    std::remove(report_path.c_str());

    const std::string sel_path = temp_path("orders.json");
    save_order_selection_json(sel_path, model.selection, model.target_names);
    std::ifstream sel_in(sel_path);
    nlohmann::json doc;
    sel_in >> doc;
    CHECK(doc["orders"].size() == model.selection.selected.size());
    std::remove(sel_path.c_str());
}
