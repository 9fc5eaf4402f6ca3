#include "rscn/serialize.hpp"

#include "rscn/presets.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace rscn {

using nlohmann::json;

namespace {

constexpr const char* kModelSchema = "rscn-hybrid/1";

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    if (!rows.is_array()) throw ParseError("model document: expected matrix");
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c)
            throw ParseError("model document: ragged matrix");
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
    return v;
}

json triplets_to_json(const Matrix& m) {
    json arr = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) arr.push_back({i, j, m(i, j)});
    return arr;
}

Matrix triplets_from_json(const json& arr, int rows, int cols) {
    Matrix m = Matrix::Zero(rows, cols);
    for (const auto& t : arr) m(t[0].get<int>(), t[1].get<int>()) = t[2].get<double>();
    return m;
}

json feature_map_to_json(const std::vector<FeatureKey>& map) {
    json arr = json::array();
    for (const auto& key : map)
        arr.push_back({{"variable", key.variable}, {"lag", key.lag}, {"output", key.is_output}});
    return arr;
}

std::vector<FeatureKey> feature_map_from_json(const json& arr) {
    std::vector<FeatureKey> map;
    for (const auto& item : arr)
        map.push_back({item.at("variable").get<std::string>(), item.at("lag").get<int>(),
                       item.at("output").get<bool>()});
    return map;
}

json lag_spec_to_json(const LagSpec& spec) {
    json inputs = json::object(), outputs = json::object();
    for (const auto& [name, lags] : spec.input_lags) inputs[name] = lags;
    for (const auto& [name, lags] : spec.output_lags) outputs[name] = lags;
    // object keys lose declaration order; keep it explicitly
    json in_order = json::array(), out_order = json::array();
    for (const auto& [name, lags] : spec.input_lags) in_order.push_back(name);
    for (const auto& [name, lags] : spec.output_lags) out_order.push_back(name);
    return {{"inputs", inputs}, {"outputs", outputs},
            {"input_order", in_order}, {"output_order", out_order}};
}

LagSpec lag_spec_from_json(const json& doc) {
    LagSpec spec;
    std::vector<std::string> in_order, out_order;
    if (doc.contains("input_order")) {
        for (const auto& n : doc.at("input_order")) in_order.push_back(n.get<std::string>());
    } else {
        for (const auto& [name, lags] : doc.at("inputs").items()) in_order.push_back(name);
    }
    if (doc.contains("output_order")) {
        for (const auto& n : doc.at("output_order")) out_order.push_back(n.get<std::string>());
    } else {
        for (const auto& [name, lags] : doc.at("outputs").items()) out_order.push_back(name);
    }
    for (const auto& name : in_order)
        spec.input_lags.emplace_back(name, doc.at("inputs").at(name).get<std::vector<int>>());
    for (const auto& name : out_order)
        spec.output_lags.emplace_back(name, doc.at("outputs").at(name).get<std::vector<int>>());
    return spec;
}

void write_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw ParseError("write failed for '" + path + "'");
}

json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& ex) {
        throw ParseError("'" + path + "': " + ex.what());
    }
    return doc;
}

}  // namespace

void save_model(const std::string& path, const HybridModel& model) {
    json doc;
    doc["schema"] = kModelSchema;
    doc["dimensions"] = {{"nodes", model.net.nodes()},
                         {"k_r", model.net.input_dim()},
                         {"outputs", static_cast<int>(model.lasso.weights.rows())},
                         {"features", static_cast<int>(model.lasso.weights.cols())}};
    doc["reservoir"] = {{"w_in", matrix_to_json(model.net.w_in)},
                        {"b", vector_to_json(model.net.b)},
                        {"w_r_triplets", triplets_to_json(model.net.w_r)},
                        {"alpha", model.net.alpha},
                        {"triangular", model.net.triangular},
                        {"echo_scaled", model.net.echo_scaled}};
    doc["readout"] = {{"w_out", matrix_to_json(model.readout.w_out)}, {"c", model.readout.c}};
    doc["lasso"] = {{"weights", matrix_to_json(model.lasso.weights)},
                    {"intercept", vector_to_json(model.lasso.intercept)},
                    {"c_l", model.lasso.c_l},
                    {"feature_map", feature_map_to_json(model.lasso.feature_map)}};
    doc["standardizer"] = {{"feature_mean", vector_to_json(model.standardizer.feature_mean)},
                           {"feature_scale", vector_to_json(model.standardizer.feature_scale)},
                           {"constant", model.standardizer.constant},
                           {"target_mean", vector_to_json(model.standardizer.target_mean)},
                           {"target_scale", vector_to_json(model.standardizer.target_scale)}};
    doc["selected_columns"] = model.selected_columns;
    doc["selected_orders"] = feature_map_to_json(model.selection.selected);
    doc["spec"] = lag_spec_to_json(model.spec);
    doc["washout"] = model.washout;
    doc["target_names"] = model.target_names;
    write_file(path, doc);
}

HybridModel load_model(const std::string& path) {
    const json doc = read_file(path);
    if (!doc.contains("schema") || doc.at("schema").get<std::string>() != kModelSchema)
        throw ParseError("'" + path + "': unsupported model schema");

    HybridModel model;
    const int nodes = doc.at("dimensions").at("nodes").get<int>();
    model.net.w_in = matrix_from_json(doc.at("reservoir").at("w_in"));
    model.net.b = vector_from_json(doc.at("reservoir").at("b"));
    model.net.w_r = triplets_from_json(doc.at("reservoir").at("w_r_triplets"), nodes, nodes);
    model.net.alpha = doc.at("reservoir").at("alpha").get<double>();
    model.net.triangular = doc.at("reservoir").at("triangular").get<bool>();
    model.net.echo_scaled = doc.at("reservoir").at("echo_scaled").get<bool>();
    model.readout.w_out = matrix_from_json(doc.at("readout").at("w_out"));
    model.readout.c = doc.at("readout").at("c").get<double>();
    model.lasso.weights = matrix_from_json(doc.at("lasso").at("weights"));
    model.lasso.intercept = vector_from_json(doc.at("lasso").at("intercept"));
    model.lasso.c_l = doc.at("lasso").at("c_l").get<double>();
    model.lasso.feature_map = feature_map_from_json(doc.at("lasso").at("feature_map"));
    model.standardizer.feature_mean =
        vector_from_json(doc.at("standardizer").at("feature_mean"));
    model.standardizer.feature_scale =
        vector_from_json(doc.at("standardizer").at("feature_scale"));
    model.standardizer.constant = doc.at("standardizer").at("constant").get<std::vector<bool>>();
    model.standardizer.target_mean = vector_from_json(doc.at("standardizer").at("target_mean"));
    model.standardizer.target_scale =
        vector_from_json(doc.at("standardizer").at("target_scale"));
    model.selected_columns = doc.at("selected_columns").get<std::vector<int>>();
    model.selection.selected = feature_map_from_json(doc.at("selected_orders"));
    model.spec = lag_spec_from_json(doc.at("spec"));
    model.washout = doc.at("washout").get<int>();
    model.target_names = doc.at("target_names").get<std::vector<std::string>>();
    model.net.validate();
    return model;
}

void save_build_report_csv(const std::string& path, const BuildReport& report) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out.precision(17);
    out << "node_index,lambda,r,xi_star,margin,train_error_fro,val_nrmse,pool_size,"
           "penalized_objective\n";
    for (const auto& rec : report.records)
        out << rec.node_index << ',' << rec.lambda << ',' << rec.r_used << ',' << rec.xi_star
            << ',' << rec.margin << ',' << rec.train_error_fro << ',' << rec.val_nrmse << ','
            << rec.pool_size << ',' << rec.penalized_objective << '\n';
    out << "# stop_reason=" << stop_reason_name(report.stop_reason)
        << " final_nodes=" << report.final_nodes << '\n';
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void save_order_selection_json(const std::string& path, const OrderSelection& selection,
                               const std::vector<std::string>& output_names) {
    json orders = json::array();
    for (std::size_t i = 0; i < selection.selected.size(); ++i) {
        json coef = json::array(), std_coef = json::array();
        for (int q = 0; q < selection.coefficients.rows(); ++q) {
            coef.push_back(selection.coefficients(q, static_cast<int>(i)));
            std_coef.push_back(selection.std_coefficients(q, static_cast<int>(i)));
        }
        orders.push_back({{"variable", selection.selected[i].variable},
                          {"lag", selection.selected[i].lag},
                          {"output_variable", selection.selected[i].is_output},
                          {"coefficients", coef},
                          {"standardized_coefficients", std_coef}});
    }
    write_file(path, {{"c_l_used", selection.c_l_used},
                      {"outputs", output_names},
                      {"orders", orders}});
}

void save_lasso_path_json(const std::string& path, const LassoPath& path_data,
                          const std::vector<FeatureKey>& feature_map) {
    json points = json::array();
    for (std::size_t g = 0; g < path_data.grid.size(); ++g) {
        points.push_back({{"c_l", path_data.grid[g]},
                          {"cv_mse", path_data.cv_mse[g]},
                          {"cv_se", path_data.cv_se[g]},
                          {"p", path_data.p_values[g]},
                          {"coefficients", matrix_to_json(path_data.coefs[g])}});
    }
    write_file(path, {{"features", feature_map_to_json(feature_map)}, {"path", points}});
}

void save_coefficients_csv(const std::string& path, const LassoModel& model) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out.precision(17);
    out << "variable,lag,output_variable";
    for (int q = 0; q < model.weights.rows(); ++q) out << ",coefficient_" << q;
    out << '\n';
    for (int j = 0; j < model.weights.cols(); ++j) {
        const FeatureKey& key = model.feature_map.at(j);
        out << key.variable << ',' << key.lag << ',' << (key.is_output ? 1 : 0);
        for (int q = 0; q < model.weights.rows(); ++q) out << ',' << model.weights(q, j);
        out << '\n';
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void save_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out.precision(17);
    const int l = trajectory.rows.empty() ? 1 : static_cast<int>(trajectory.rows[0].y_obs.size());
    out << "step";
    auto block = [&](const std::string& name) {
        if (l == 1) out << ',' << name;
        else
            for (int q = 0; q < l; ++q) out << ',' << name << '_' << q;
    };
    block("y_lasso");
    block("y_reservoir");
    block("y_total");
    block("y_obs");
    block("error");
    out << ",cumulative_nrmse\n";
    for (std::size_t t = 0; t < trajectory.rows.size(); ++t) {
        const auto& row = trajectory.rows[t];
        out << t;
        for (const Vector* v : {&row.y_lasso, &row.y_reservoir, &row.y_total, &row.y_obs,
                                &row.error})
            for (int q = 0; q < l; ++q) out << ',' << (*v)(q);
        out << ',' << row.cumulative_nrmse << '\n';
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

namespace {

json sc_config_to_json(const ScTrainConfig& sc) {
    return {{"n_max_nodes", sc.n_max_nodes},
            {"n_step", sc.n_step},
            {"initial_nodes", sc.initial_nodes},
            {"g_max", sc.g_max},
            {"epsilon", sc.epsilon},
            {"lambda_grid", sc.lambda_grid},
            {"r_list", sc.r_list},
            {"c", sc.c},
            {"constraint_c", sc.constraint_c},
            {"sparsity", sc.sparsity},
            {"alpha", sc.alpha},
            {"b_g_margin", sc.b_g_margin}};
}

void sc_config_from_json(const json& doc, ScTrainConfig& sc) {
    static const std::set<std::string> known = {
        "n_max_nodes", "n_step",    "initial_nodes", "g_max",      "epsilon", "lambda_grid",
        "r_list",      "c",         "constraint_c",  "sparsity",   "alpha",   "b_g_margin"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw ConfigError("unknown reservoir config key '" + key + "'");
    if (doc.contains("n_max_nodes")) sc.n_max_nodes = doc["n_max_nodes"].get<int>();
    if (doc.contains("n_step")) sc.n_step = doc["n_step"].get<int>();
    if (doc.contains("initial_nodes")) sc.initial_nodes = doc["initial_nodes"].get<int>();
    if (doc.contains("g_max")) sc.g_max = doc["g_max"].get<int>();
    if (doc.contains("epsilon")) sc.epsilon = doc["epsilon"].get<double>();
    if (doc.contains("lambda_grid")) sc.lambda_grid = doc["lambda_grid"].get<std::vector<double>>();
    if (doc.contains("r_list")) sc.r_list = doc["r_list"].get<std::vector<double>>();
    if (doc.contains("c")) sc.c = doc["c"].get<double>();
    if (doc.contains("constraint_c")) sc.constraint_c = doc["constraint_c"].get<double>();
    if (doc.contains("sparsity")) sc.sparsity = doc["sparsity"].get<double>();
    if (doc.contains("alpha")) sc.alpha = doc["alpha"].get<double>();
    if (doc.contains("b_g_margin")) sc.b_g_margin = doc["b_g_margin"].get<double>();
}

std::string source_name(DataSource s) {
    switch (s) {
        case DataSource::Sysid: return "sysid";
        case DataSource::Surrogate: return "surrogate";
        case DataSource::Csv: return "csv";
    }
    return "sysid";
}

DataSource source_from_name(const std::string& name) {
    if (name == "sysid") return DataSource::Sysid;
    if (name == "surrogate") return DataSource::Surrogate;
    if (name == "csv") return DataSource::Csv;
    throw ConfigError("unknown data source '" + name + "'");
}

json schema_to_json(const CsvSchema& schema) {
    json arr = json::array();
    for (const auto& [name, role] : schema) {
        std::string r = role == ColumnRole::Input ? "input"
                        : role == ColumnRole::Target ? "target" : "ignore";
        arr.push_back({{"column", name}, {"role", r}});
    }
    return arr;
}

CsvSchema schema_from_json(const json& arr) {
    CsvSchema schema;
    for (const auto& item : arr) {
        const std::string role = item.at("role").get<std::string>();
        ColumnRole r;
        if (role == "input") r = ColumnRole::Input;
        else if (role == "target") r = ColumnRole::Target;
        else if (role == "ignore") r = ColumnRole::Ignore;
        else throw ConfigError("unknown column role '" + role + "'");
        schema.emplace_back(item.at("column").get<std::string>(), r);
    }
    return schema;
}

}  // namespace

std::string task_to_json_string(const TaskSpec& task) {
    json doc = {{"name", task.name},
                {"source", source_name(task.source)},
                {"n_train", task.n_train},
                {"n_val", task.n_val},
                {"n_test", task.n_test},
                {"train_csv", task.train_csv},
                {"test_csv", task.test_csv},
                {"schema", schema_to_json(task.schema)},
                {"val_noise_sigma", task.val_noise_sigma},
                {"screening_spec", lag_spec_to_json(task.screening_spec)},
                {"base_spec", lag_spec_to_json(task.base_spec)},
                {"washout", task.washout},
                {"lasso_grid_points", task.lasso_grid_points},
                {"lasso_grid_decades", task.lasso_grid_decades},
                {"lasso_folds", task.lasso_folds},
                {"selection_threshold", task.selection_threshold},
                {"lasso_tol", task.lasso_tol},
                {"lasso_max_iter", task.lasso_max_iter},
                {"reservoir", sc_config_to_json(task.sc)},
                {"esn_nodes", task.esn_nodes},
                {"esn_lambda", task.esn_lambda},
                {"elastic_c_l", task.elastic_c_l}};
    return doc.dump(2);
}

TaskSpec task_from_json_string(const std::string& text, const TaskSpec* base) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& ex) {
        throw ParseError(std::string("task config: ") + ex.what());
    }
    static const std::set<std::string> known = {
        "name",          "source",        "n_train",      "n_val",
        "n_test",        "train_csv",     "test_csv",     "schema",
        "val_noise_sigma", "screening_spec", "base_spec",  "washout",
        "lasso_grid_points", "lasso_grid_decades", "lasso_folds", "selection_threshold",
        "lasso_tol",     "lasso_max_iter", "reservoir",   "esn_nodes",
        "esn_lambda",    "elastic_c_l"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key)) throw ConfigError("unknown task config key '" + key + "'");

    TaskSpec task;
    if (base) task = *base;
    else if (doc.contains("name") && is_known_task(doc["name"].get<std::string>()))
        task = preset_task(doc["name"].get<std::string>());

    if (doc.contains("name")) task.name = doc["name"].get<std::string>();
    if (doc.contains("source")) task.source = source_from_name(doc["source"].get<std::string>());
    if (doc.contains("n_train")) task.n_train = doc["n_train"].get<int>();
    if (doc.contains("n_val")) task.n_val = doc["n_val"].get<int>();
    if (doc.contains("n_test")) task.n_test = doc["n_test"].get<int>();
    if (doc.contains("train_csv")) task.train_csv = doc["train_csv"].get<std::string>();
    if (doc.contains("test_csv")) task.test_csv = doc["test_csv"].get<std::string>();
    if (doc.contains("schema")) task.schema = schema_from_json(doc["schema"]);
    if (doc.contains("val_noise_sigma")) task.val_noise_sigma = doc["val_noise_sigma"].get<double>();
    if (doc.contains("screening_spec")) task.screening_spec = lag_spec_from_json(doc["screening_spec"]);
    if (doc.contains("base_spec")) task.base_spec = lag_spec_from_json(doc["base_spec"]);
    if (doc.contains("washout")) task.washout = doc["washout"].get<int>();
    if (doc.contains("lasso_grid_points")) task.lasso_grid_points = doc["lasso_grid_points"].get<int>();
    if (doc.contains("lasso_grid_decades")) task.lasso_grid_decades = doc["lasso_grid_decades"].get<double>();
    if (doc.contains("lasso_folds")) task.lasso_folds = doc["lasso_folds"].get<int>();
    if (doc.contains("selection_threshold")) task.selection_threshold = doc["selection_threshold"].get<double>();
    if (doc.contains("lasso_tol")) task.lasso_tol = doc["lasso_tol"].get<double>();
    if (doc.contains("lasso_max_iter")) task.lasso_max_iter = doc["lasso_max_iter"].get<int>();
    if (doc.contains("reservoir")) sc_config_from_json(doc["reservoir"], task.sc);
    if (doc.contains("esn_nodes")) task.esn_nodes = doc["esn_nodes"].get<int>();
    if (doc.contains("esn_lambda")) task.esn_lambda = doc["esn_lambda"].get<double>();
    if (doc.contains("elastic_c_l")) task.elastic_c_l = doc["elastic_c_l"].get<double>();
    return task;
}

}  // namespace rscn
