#pragma once

#include "rscn/eval.hpp"
#include "rscn/online.hpp"

#include <string>

namespace rscn {

/// Versioned JSON model document: dimensions, dense w_in/b, triplet-form
/// w_r, alpha, readout, the paired linear model, standardizer, and the
/// feature map of the selected orders.
void save_model(const std::string& path, const HybridModel& model);
HybridModel load_model(const std::string& path);

/// One CSV row per accepted node.
void save_build_report_csv(const std::string& path, const BuildReport& report);

void save_order_selection_json(const std::string& path, const OrderSelection& selection,
                               const std::vector<std::string>& output_names);
void save_lasso_path_json(const std::string& path, const LassoPath& path_data,
                          const std::vector<FeatureKey>& feature_map);
/// Coefficient-distribution table: one row per (variable, lag) with the
/// standardized coefficient per output.
void save_coefficients_csv(const std::string& path, const LassoModel& model);

void save_trajectory_csv(const std::string& path, const Trajectory& trajectory);

/// Task configuration as a JSON document. Loading starts from `base`
/// (typically a preset) and applies the document's keys on top; unknown
/// keys are rejected.
std::string task_to_json_string(const TaskSpec& task);
TaskSpec task_from_json_string(const std::string& text, const TaskSpec* base = nullptr);

}  // namespace rscn
