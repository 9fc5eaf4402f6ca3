#pragma once

#include "rscn/eval.hpp"

#include <string>

namespace rscn {

/// Bundled benchmark configurations. CSV-backed tasks need data paths
/// supplied at run time; their schemas and protocol parameters ship here.
TaskSpec sysid_task();
TaskSpec surrogate_task();
TaskSpec debutanizer_task(const std::string& train_csv = "", const std::string& test_csv = "");
TaskSpec load_forecast_task(const std::string& train_csv = "", const std::string& test_csv = "");

TaskSpec preset_task(const std::string& name);
bool is_known_task(const std::string& name);

/// Uniform lag sets {0..max_input_lag} per input and {1..max_output_lag}
/// per output, in schema order.
LagSpec uniform_lag_spec(const std::vector<std::string>& inputs,
                         const std::vector<std::string>& outputs, int max_input_lag,
                         int max_output_lag);

}  // namespace rscn
