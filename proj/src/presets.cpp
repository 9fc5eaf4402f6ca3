#include "rscn/presets.hpp"

namespace rscn {

LagSpec uniform_lag_spec(const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs, int max_input_lag,
                         int max_output_lag) {
    LagSpec spec;
    std::vector<int> in_lags, out_lags;
    for (int l = 0; l <= max_input_lag; ++l) in_lags.push_back(l);
    for (int l = 1; l <= max_output_lag; ++l) out_lags.push_back(l);
    for (const auto& name : inputs) spec.input_lags.emplace_back(name, in_lags);
    for (const auto& name : outputs) spec.output_lags.emplace_back(name, out_lags);
    return spec;
}

TaskSpec sysid_task() {
    TaskSpec task;
    task.name = "sysid";
    task.source = DataSource::Sysid;
    task.n_train = 2000;
    task.n_val = 1000;
    task.n_test = 800;
    task.washout = 10;
    // Screening design: ten-order delays on the input and the output.
    task.screening_spec = uniform_lag_spec({"u"}, {"y"}, 9, 10);
    task.base_spec.input_lags = {{"u", {0}}};
    task.base_spec.output_lags = {{"y", {1}}};

    task.sc.n_max_nodes = 300;
    task.sc.n_step = 6;
    task.sc.initial_nodes = 5;
    task.sc.g_max = 100;
    task.sc.epsilon = 1e-5;
    task.sc.lambda_grid = {0.1, 0.5, 1, 5, 10, 30, 50, 100};
    task.sc.r_list = {0.9, 0.99, 0.999, 0.9999, 0.99999};
    task.sc.c = 1e-3;
    task.sc.sparsity = 0.03;
    task.sc.alpha = 0.8;
    task.esn_nodes = 150;
    task.esn_lambda = 1.0;
    task.elastic_c_l = 0.01;
    return task;
}

TaskSpec surrogate_task() {
    TaskSpec task;
    task.name = "surrogate";
    task.source = DataSource::Surrogate;
    task.n_train = 1200;
    task.n_val = 600;
    task.n_test = 600;
    task.washout = 30;
    const std::vector<std::string> inputs = {"u1", "u2", "u3", "u4", "u5", "u6", "u7"};
    task.screening_spec = uniform_lag_spec(inputs, {"y"}, 2, 3);
    for (const auto& name : inputs) task.base_spec.input_lags.emplace_back(name, std::vector<int>{0});
    task.base_spec.output_lags = {{"y", {1}}};

    task.sc.n_max_nodes = 100;
    task.sc.n_step = 6;
    task.sc.initial_nodes = 5;
    task.sc.g_max = 100;
    task.sc.epsilon = 1e-5;
    task.sc.lambda_grid = {0.1, 0.5, 1, 5, 10, 30, 50, 100};
    task.sc.r_list = {0.9, 0.99, 0.999, 0.9999, 0.99999};
    task.sc.c = 1e-3;
    task.sc.sparsity = 0.05;
    task.sc.alpha = 0.8;
    task.esn_nodes = 80;
    task.esn_lambda = 1.0;
    task.elastic_c_l = 0.01;
    return task;
}

TaskSpec debutanizer_task(const std::string& train_csv, const std::string& test_csv) {
    TaskSpec task;
    task.name = "debutanizer";
    task.source = DataSource::Csv;
    task.train_csv = train_csv;
    task.test_csv = test_csv;
    task.washout = 100;
    task.val_noise_sigma = 0.01;
    const std::vector<std::string> inputs = {"u1", "u2", "u3", "u4", "u5", "u6", "u7"};
    for (const auto& name : inputs) task.schema.emplace_back(name, ColumnRole::Input);
    task.schema.emplace_back("y", ColumnRole::Target);
    task.screening_spec = uniform_lag_spec(inputs, {"y"}, 2, 4);
    for (const auto& name : {"u1", "u2", "u3", "u4", "u5"})
        task.base_spec.input_lags.emplace_back(name, std::vector<int>{0});
    task.base_spec.output_lags = {{"y", {1}}};

    task.sc.n_max_nodes = 200;
    task.sc.n_step = 6;
    task.sc.initial_nodes = 5;
    task.sc.g_max = 100;
    task.sc.epsilon = 1e-5;
    task.sc.lambda_grid = {0.1, 0.5, 1, 5, 10, 30, 50, 100};
    task.sc.r_list = {0.9, 0.99, 0.999, 0.9999, 0.99999};
    task.sc.c = 1e-2;
    task.sc.sparsity = 0.06;
    task.sc.alpha = 0.7;
    task.esn_nodes = 150;
    task.esn_lambda = 1.0;
    task.elastic_c_l = 0.01;
    return task;
}

TaskSpec load_forecast_task(const std::string& train_csv, const std::string& test_csv) {
    TaskSpec task;
    task.name = "load";
    task.source = DataSource::Csv;
    task.train_csv = train_csv;
    task.test_csv = test_csv;
    task.washout = 30;
    task.val_noise_sigma = 0.01;
    const std::vector<std::string> inputs = {"u1", "u2", "u3", "u4"};
    for (const auto& name : inputs) task.schema.emplace_back(name, ColumnRole::Input);
    task.schema.emplace_back("y", ColumnRole::Target);
    task.screening_spec = uniform_lag_spec(inputs, {"y"}, 2, 3);
    for (const auto& name : inputs) task.base_spec.input_lags.emplace_back(name, std::vector<int>{0});
    task.base_spec.output_lags = {{"y", {1}}};

    task.sc.n_max_nodes = 300;
    task.sc.n_step = 6;
    task.sc.initial_nodes = 5;
    task.sc.g_max = 100;
    task.sc.epsilon = 1e-5;
    task.sc.lambda_grid = {0.1, 0.5, 1, 5, 10, 30, 50, 100};
    task.sc.r_list = {0.9, 0.99, 0.999, 0.9999, 0.99999};
    task.sc.c = 1e-3;
    task.sc.sparsity = 0.03;
    task.sc.alpha = 0.8;
    task.esn_nodes = 100;
    task.esn_lambda = 1.0;
    task.elastic_c_l = 0.01;
    return task;
}

TaskSpec preset_task(const std::string& name) {
    if (name == "sysid") return sysid_task();
    if (name == "surrogate") return surrogate_task();
    if (name == "debutanizer") return debutanizer_task();
    if (name == "load") return load_forecast_task();
    throw ConfigError("unknown task preset '" + name + "'");
}

bool is_known_task(const std::string& name) {
    return name == "sysid" || name == "surrogate" || name == "debutanizer" || name == "load";
}

}  // namespace rscn
