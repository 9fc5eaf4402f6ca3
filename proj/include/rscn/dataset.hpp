#pragma once

#include "rscn/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rscn {

/// Aligned multivariate input/target time series.
struct RawSeries {
    Matrix inputs;   // K x n
    Matrix targets;  // L x n
    std::vector<std::string> input_names;
    std::vector<std::string> target_names;
    std::optional<double> sample_period;

    int k() const { return static_cast<int>(inputs.rows()); }
    int l() const { return static_cast<int>(targets.rows()); }
    int n() const { return static_cast<int>(inputs.cols()); }

    void validate() const;
};

enum class ColumnRole { Input, Target, Ignore };

/// Column-role mapping for CSV ingestion; order fixes the variable order.
using CsvSchema = std::vector<std::pair<std::string, ColumnRole>>;

/// Lag sets per variable. Input lags may include 0 (same-time input);
/// output lags are strictly positive (no target leakage).
struct LagSpec {
    std::vector<std::pair<std::string, std::vector<int>>> input_lags;
    std::vector<std::pair<std::string, std::vector<int>>> output_lags;

    int max_lag() const;
    void validate() const;
};

/// One design-matrix column: a (variable, lag) pair.
struct FeatureKey {
    std::string variable;
    int lag = 0;
    bool is_output = false;

    bool operator==(const FeatureKey&) const = default;
};

std::string feature_name(const FeatureKey& key);

/// Lagged design matrix aligned to targets, washout applied.
/// Row t of `design` holds the regressors for targets.col(t); column j
/// equals the source series value at absolute index (t + offset - lag_j).
struct LaggedDataset {
    Matrix design;   // n_eff x F
    Matrix targets;  // L x n_eff
    std::vector<FeatureKey> feature_map;
    int washout = 0;
    int offset = 0;  // max_lag + washout

    int n_eff() const { return static_cast<int>(design.rows()); }
    int features() const { return static_cast<int>(design.cols()); }
};

/// Training-set statistics for z-scoring features and centering targets.
struct Standardizer {
    Vector feature_mean;
    Vector feature_scale;           // population std; 1 for constant columns
    std::vector<bool> constant;     // flagged columns, excluded downstream
    Vector target_mean;
    Vector target_scale;            // informational (population std)

    bool has_constant() const;
};

enum class SysidPhase { Train, Test };

RawSeries load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const std::string& path, const RawSeries& raw);
void save_lagged_csv(const std::string& path, const LaggedDataset& d,
                     const std::vector<std::string>& target_names);

/// Synthetic nonlinear system identification benchmark. Sample i pairs the
/// input u(i) with the plant output one step later, so the same-time input
/// column (u, lag 0) is a true regressor of the target.
RawSeries generate_sysid_series(int n, SysidPhase phase, std::uint64_t seed);

/// Seeded 7-input NARX surrogate for the industrial-task regression test.
RawSeries generate_surrogate_series(int n, std::uint64_t seed);

LaggedDataset build_lagged(const RawSeries& raw, const LagSpec& spec, int washout);

RawSeries add_gaussian_noise(const RawSeries& raw, double sigma_rel, std::uint64_t seed);

Standardizer standardize_fit(const LaggedDataset& train);
LaggedDataset standardize_apply(const Standardizer& s, const LaggedDataset& d);
/// Inverse of the feature/target transform applied by standardize_apply.
LaggedDataset standardize_invert(const Standardizer& s, const LaggedDataset& d);
Matrix destandardize_targets(const Standardizer& s, const Matrix& centered);

}  // namespace rscn
