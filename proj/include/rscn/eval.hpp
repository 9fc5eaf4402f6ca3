#pragma once

#include "rscn/core.hpp"
#include "rscn/dataset.hpp"
#include "rscn/lasso.hpp"
#include "rscn/metrics.hpp"
#include "rscn/reservoir.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rscn {

/// Model variants compared in the benchmark harness. The LASSO- prefix adds
/// order selection plus residual compensation, the -L2 suffix the ridge
/// readout and regularized constraint, and -L1,2 the elastic-net readout.
enum class Variant {
    ESN,
    ESN_L12,
    LASSO_ESN,
    LASSO_ESN_L2,
    RSCN,
    RSCN_L12,
    LASSO_RSCN,
    LASSO_RSCN_L2,
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();
bool variant_uses_lasso(Variant v);
bool variant_grows_reservoir(Variant v);
ReadoutKind variant_readout(Variant v);

enum class DataSource { Sysid, Surrogate, Csv };

/// Everything needed to run one benchmark end to end.
struct TaskSpec {
    std::string name = "sysid";
    DataSource source = DataSource::Sysid;
    int n_train = 2000;
    int n_val = 1000;
    int n_test = 800;
    std::string train_csv;
    std::string test_csv;
    CsvSchema schema;
    double val_noise_sigma = 0.01;

    LagSpec screening_spec;  // LASSO order identification design
    LagSpec base_spec;       // regressors for the non-LASSO models
    int washout = 10;

    int lasso_grid_points = 50;
    double lasso_grid_decades = 4.0;
    int lasso_folds = 5;
    double selection_threshold = 1e-8;
    double lasso_tol = 1e-6;
    int lasso_max_iter = 10000;

    ScTrainConfig sc;
    int esn_nodes = 150;
    double esn_lambda = 1.0;
    double elastic_c_l = 0.01;
};

/// Trained compensated model bundle: linear part over the full lagged
/// design, reservoir part over the selected-order columns.
struct HybridModel {
    LassoModel lasso;
    Standardizer standardizer;
    std::vector<int> selected_columns;
    OrderSelection selection;
    ReservoirNet net;
    Readout readout;
    LagSpec spec;
    int washout = 0;
    std::vector<std::string> target_names;
};

/// Predictions of the hybrid model on a raw series, original units.
/// Teacher forcing feeds measured outputs into the regressor; the
/// free-running mode feeds the model's own predictions instead.
Matrix predict_series(const HybridModel& model, const RawSeries& raw, bool free_running = false);

struct TrialResult {
    double train_nrmse = 0.0;
    double test_nrmse = 0.0;
    double train_seconds = 0.0;
    int reservoir_size = 0;
    BuildReport report;
    bool has_report = false;
};

struct TrialSummary {
    std::string model;
    int trials = 0;
    double train_nrmse_mean = 0.0, train_nrmse_std = 0.0;
    double test_nrmse_mean = 0.0, test_nrmse_std = 0.0;
    double train_seconds_mean = 0.0, train_seconds_std = 0.0;
    double reservoir_size_mean = 0.0;
    bool complete = true;
    std::vector<TrialResult> per_trial;
    std::vector<std::string> failures;
};

struct TaskData {
    RawSeries train, val, test;
};

TaskData prepare_data(const TaskSpec& task, std::uint64_t seed);

/// Runs the full pipeline once; the returned model is optional because the
/// multi-trial harness discards it.
TrialResult run_single_trial(const TaskSpec& task, Variant variant, std::uint64_t seed,
                             HybridModel* model_out = nullptr);

TrialSummary run_trials(const TaskSpec& task, Variant variant, int n_trials,
                        std::uint64_t base_seed, int workers = 1);

struct GridSurface {
    std::vector<double> c_values;
    std::vector<int> n_values;
    Matrix mean_nrmse;   // n_values.size() x c_values.size()
    Matrix std_nrmse;
    Eigen::MatrixXi trials;
    int trials_per_cell = 0;
    std::vector<std::string> failures;

    /// (n index, c index) of the smallest mean; scan order n then c, so
    /// exact ties resolve toward smaller reservoirs.
    std::pair<int, int> argmin_cell() const;
};

GridSurface grid_search(const TaskSpec& task, Variant variant, const std::vector<double>& c_values,
                        const std::vector<int>& n_values, int trials_per_cell,
                        std::uint64_t base_seed, int workers = 1);

void export_summary_csv(const std::string& path, const std::vector<TrialSummary>& summaries);
void export_summary_json(const std::string& path, const std::vector<TrialSummary>& summaries);
void export_surface_csv(const std::string& path, const GridSurface& surface);
void export_surface_json(const std::string& path, const GridSurface& surface);

}  // namespace rscn
