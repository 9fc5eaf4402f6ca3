#include "rscn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace rscn {

void RawSeries::validate() const {
    if (inputs.cols() != targets.cols())
        throw ShapeError("RawSeries: inputs and targets disagree on sample count");
    if (inputs.rows() < 1 || targets.rows() < 1 || inputs.cols() < 1)
        throw ShapeError("RawSeries: need K >= 1, L >= 1, n >= 1");
    if (static_cast<int>(input_names.size()) != k() ||
        static_cast<int>(target_names.size()) != l())
        throw ShapeError("RawSeries: name count mismatch");
    require_finite(inputs, "RawSeries inputs");
    require_finite(targets, "RawSeries targets");
}

int LagSpec::max_lag() const {
    int m = 0;
    for (const auto& [name, lags] : input_lags)
        for (int lag : lags) m = std::max(m, lag);
    for (const auto& [name, lags] : output_lags)
        for (int lag : lags) m = std::max(m, lag);
    return m;
}

void LagSpec::validate() const {
    if (input_lags.empty() && output_lags.empty())
        throw SchemaError("LagSpec: empty specification");
    for (const auto& [name, lags] : input_lags) {
        if (lags.empty()) throw SchemaError("LagSpec: no lags for input '" + name + "'");
        for (int lag : lags)
            if (lag < 0) throw SchemaError("LagSpec: negative lag for input '" + name + "'");
    }
    for (const auto& [name, lags] : output_lags) {
        if (lags.empty()) throw SchemaError("LagSpec: no lags for output '" + name + "'");
        for (int lag : lags)
            if (lag < 1)
                throw SchemaError("LagSpec: output lag must be >= 1 for '" + name +
                                  "' (target leakage)");
    }
}

std::string feature_name(const FeatureKey& key) {
    return key.variable + "_lag" + std::to_string(key.lag);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double uniform01(std::mt19937_64& rng) {
    // 53-bit mantissa draw; keeps the byte-identical determinism contract
    // independent of the stdlib's distribution implementation.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_sym(std::mt19937_64& rng, double half_width) {
    return (2.0 * uniform01(rng) - 1.0) * half_width;
}

}  // namespace

RawSeries load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "': empty file");
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    std::map<std::string, int> col_index;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) col_index[header[i]] = i;

    std::vector<std::pair<std::string, int>> input_cols, target_cols;
    for (const auto& [name, role] : schema) {
        auto it = col_index.find(name);
        if (it == col_index.end())
            throw SchemaError("'" + path + "': schema column '" + name + "' missing");
        if (role == ColumnRole::Input) input_cols.emplace_back(name, it->second);
        else if (role == ColumnRole::Target) target_cols.emplace_back(name, it->second);
    }
    if (input_cols.empty()) throw SchemaError("'" + path + "': schema assigns no input column");
    if (target_cols.empty()) throw SchemaError("'" + path + "': schema assigns no target column");

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("'" + path + "' row " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        std::vector<double> row(header.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = trim(cells[c]);
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cell.size() || cell.empty())
                throw ParseError("'" + path + "' row " + std::to_string(line_no) + " column '" +
                                 header[c] + "': non-numeric cell '" + cell + "'");
            row[c] = v;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("'" + path + "': no samples");

    RawSeries raw;
    const int n = static_cast<int>(rows.size());
    raw.inputs.resize(static_cast<int>(input_cols.size()), n);
    raw.targets.resize(static_cast<int>(target_cols.size()), n);
    for (int t = 0; t < n; ++t) {
        for (int i = 0; i < static_cast<int>(input_cols.size()); ++i)
            raw.inputs(i, t) = rows[t][input_cols[i].second];
        for (int i = 0; i < static_cast<int>(target_cols.size()); ++i)
            raw.targets(i, t) = rows[t][target_cols[i].second];
    }
    for (const auto& [name, idx] : input_cols) raw.input_names.push_back(name);
    for (const auto& [name, idx] : target_cols) raw.target_names.push_back(name);
    raw.validate();
    return raw;
}

void save_csv(const std::string& path, const RawSeries& raw) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out.precision(17);
    for (int i = 0; i < raw.k(); ++i) out << raw.input_names[i] << ',';
    for (int i = 0; i < raw.l(); ++i)
        out << raw.target_names[i] << (i + 1 < raw.l() ? ',' : '\n');
    for (int t = 0; t < raw.n(); ++t) {
        for (int i = 0; i < raw.k(); ++i) out << raw.inputs(i, t) << ',';
        for (int i = 0; i < raw.l(); ++i)
            out << raw.targets(i, t) << (i + 1 < raw.l() ? ',' : '\n');
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

void save_lagged_csv(const std::string& path, const LaggedDataset& d,
                     const std::vector<std::string>& target_names) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out.precision(17);
    for (const auto& key : d.feature_map) out << feature_name(key) << ',';
    for (std::size_t i = 0; i < target_names.size(); ++i)
        out << target_names[i] << (i + 1 < target_names.size() ? ',' : '\n');
    for (int t = 0; t < d.n_eff(); ++t) {
        for (int j = 0; j < d.features(); ++j) out << d.design(t, j) << ',';
        for (int q = 0; q < d.targets.rows(); ++q)
            out << d.targets(q, t) << (q + 1 < d.targets.rows() ? ',' : '\n');
    }
    if (!out) throw ParseError("write failed for '" + path + "'");
}

RawSeries generate_sysid_series(int n, SysidPhase phase, std::uint64_t seed) {
    if (n < 5) throw ArgumentError("generate_sysid_series: need n >= 5");

    Vector u(n);
    if (phase == SysidPhase::Train) {
        std::mt19937_64 rng(seed);
        for (int i = 0; i < n; ++i) u(i) = uniform_sym(rng, 0.7);
    } else {
        const double pi = std::numbers::pi;
        for (int i = 0; i < n; ++i) {
            u(i) = (i < 500) ? 0.3 * std::sin(pi * i / 125.0) + 0.2 * std::sin(pi * i / 25.0)
                             : 0.6 * std::sin(pi * i / 25.0);
        }
    }

    // y(1..4) initial, then y(m+1) recursed from three past outputs and two
    // past inputs; sample i pairs u(i) with y(i+2) (the response to u(i)).
    Vector y(n + 2);
    if (phase == SysidPhase::Train) {
        y(1) = 0.0; y(2) = 0.0; y(3) = 0.0; y(4) = 0.1;
    } else {
        y(1) = -0.3; y(2) = -0.1; y(3) = 0.3; y(4) = 0.0;
    }
    y(0) = 0.0;  // unused slot, keeps 1-based indexing below
    for (int m = 4; m <= n; ++m) {
        const double num =
            y(m) * y(m - 1) * y(m - 2) * u(m - 2) * (y(m - 2) - 1.0) + u(m - 1);
        const double den = 1.0 + y(m - 1) * y(m - 1) + y(m - 2) * y(m - 2);
        y(m + 1) = num / den;
    }

    RawSeries raw;
    raw.inputs.resize(1, n);
    raw.targets.resize(1, n);
    raw.inputs.row(0) = u.transpose();
    for (int i = 0; i < n; ++i) raw.targets(0, i) = y(i + 2);
    raw.input_names = {"u"};
    raw.target_names = {"y"};
    raw.validate();
    return raw;
}

RawSeries generate_surrogate_series(int n, std::uint64_t seed) {
    if (n < 5) throw ArgumentError("generate_surrogate_series: need n >= 5");
    constexpr int kInputs = 7;
    std::mt19937_64 rng(seed);

    Matrix u(kInputs, n);
    Vector state = Vector::Zero(kInputs);
    for (int t = 0; t < n; ++t) {
        for (int k = 0; k < kInputs; ++k) {
            state(k) = 0.8 * state(k) + 0.6 * uniform_sym(rng, 1.0);
            u(k, t) = state(k);
        }
    }

    Vector y = Vector::Zero(n);
    for (int t = 0; t < n; ++t) {
        const double y1 = t >= 1 ? y(t - 1) : 0.0;
        const double y2 = t >= 2 ? y(t - 2) : 0.0;
        const double u2_1 = t >= 1 ? u(1, t - 1) : 0.0;
        const double u4_2 = t >= 2 ? u(3, t - 2) : 0.0;
        y(t) = 0.45 * y1 - 0.2 * y2 + 0.8 * u(0, t) + 0.5 * u2_1 - 0.6 * u4_2 +
               0.35 * u(2, t) * u(4, t) + 0.3 * std::tanh(2.0 * u(5, t)) +
               0.15 * std::sin(u(6, t) * y1);
    }

    RawSeries raw;
    raw.inputs = u;
    raw.targets.resize(1, n);
    raw.targets.row(0) = y.transpose();
    for (int k = 0; k < kInputs; ++k) raw.input_names.push_back("u" + std::to_string(k + 1));
    raw.target_names = {"y"};
    raw.validate();
    return raw;
}

LaggedDataset build_lagged(const RawSeries& raw, const LagSpec& spec, int washout) {
    raw.validate();
    spec.validate();
    if (washout < 0) throw ArgumentError("build_lagged: negative washout");

    auto index_of = [](const std::vector<std::string>& names, const std::string& name) {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) return -1;
        return static_cast<int>(it - names.begin());
    };

    struct Column {
        FeatureKey key;
        int source_row;
    };
    std::vector<Column> columns;
    for (const auto& [name, lags] : spec.input_lags) {
        int row = index_of(raw.input_names, name);
        if (row < 0) throw SchemaError("build_lagged: unknown input variable '" + name + "'");
        std::vector<int> sorted = lags;
        std::sort(sorted.begin(), sorted.end());
        for (int lag : sorted) columns.push_back({{name, lag, false}, row});
    }
    for (const auto& [name, lags] : spec.output_lags) {
        int row = index_of(raw.target_names, name);
        if (row < 0) throw SchemaError("build_lagged: unknown output variable '" + name + "'");
        std::vector<int> sorted = lags;
        std::sort(sorted.begin(), sorted.end());
        for (int lag : sorted) columns.push_back({{name, lag, true}, row});
    }

    const int max_lag = spec.max_lag();
    const int offset = max_lag + washout;
    const int n_eff = raw.n() - offset;
    if (n_eff < 1)
        throw ArgumentError("build_lagged: washout + max_lag leaves no samples (n=" +
                            std::to_string(raw.n()) + ", offset=" + std::to_string(offset) + ")");

    LaggedDataset d;
    d.washout = washout;
    d.offset = offset;
    d.design.resize(n_eff, static_cast<int>(columns.size()));
    d.targets.resize(raw.l(), n_eff);
    for (int t = 0; t < n_eff; ++t) {
        const int abs_t = t + offset;
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto& col = columns[j];
            const double v = col.key.is_output ? raw.targets(col.source_row, abs_t - col.key.lag)
                                               : raw.inputs(col.source_row, abs_t - col.key.lag);
            d.design(t, static_cast<int>(j)) = v;
        }
        d.targets.col(t) = raw.targets.col(abs_t);
    }
    for (const auto& col : columns) d.feature_map.push_back(col.key);
    return d;
}

RawSeries add_gaussian_noise(const RawSeries& raw, double sigma_rel, std::uint64_t seed) {
    if (sigma_rel < 0) throw ArgumentError("add_gaussian_noise: sigma_rel must be >= 0");
    raw.validate();
    RawSeries out = raw;
    if (sigma_rel == 0.0) return out;

    std::mt19937_64 rng(seed);
    for (int q = 0; q < raw.l(); ++q) {
        const double mean = raw.targets.row(q).mean();
        const double var = (raw.targets.row(q).array() - mean).square().mean();
        const double sigma = sigma_rel * std::sqrt(var);
        for (int t = 0; t < raw.n(); ++t) {
            // Box-Muller on the deterministic 53-bit uniform stream.
            double u1 = uniform01(rng);
            double u2 = uniform01(rng);
            while (u1 <= 0.0) u1 = uniform01(rng);
            const double z = std::sqrt(-2.0 * std::log(u1)) *
                             std::cos(2.0 * std::numbers::pi * u2);
            out.targets(q, t) += sigma * z;
        }
    }
    return out;
}

Standardizer standardize_fit(const LaggedDataset& train) {
    if (train.n_eff() < 1) throw ArgumentError("standardize_fit: empty dataset");
    Standardizer s;
    const int f = train.features();
    s.feature_mean.resize(f);
    s.feature_scale.resize(f);
    s.constant.assign(f, false);
    for (int j = 0; j < f; ++j) {
        const double mean = train.design.col(j).mean();
        const double var = (train.design.col(j).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        s.feature_mean(j) = mean;
        if (sd <= 0.0 || !std::isfinite(sd)) {
            s.constant[j] = true;
            s.feature_scale(j) = 1.0;
        } else {
            s.feature_scale(j) = sd;
        }
    }
    const int l = static_cast<int>(train.targets.rows());
    s.target_mean.resize(l);
    s.target_scale.resize(l);
    for (int q = 0; q < l; ++q) {
        const double mean = train.targets.row(q).mean();
        const double var = (train.targets.row(q).array() - mean).square().mean();
        s.target_mean(q) = mean;
        s.target_scale(q) = std::sqrt(var);
    }
    return s;
}

bool Standardizer::has_constant() const {
    return std::any_of(constant.begin(), constant.end(), [](bool b) { return b; });
}

LaggedDataset standardize_apply(const Standardizer& s, const LaggedDataset& d) {
    if (d.features() != s.feature_mean.size())
        throw ShapeError("standardize_apply: feature count mismatch");
    if (d.targets.rows() != s.target_mean.size())
        throw ShapeError("standardize_apply: target count mismatch");
    LaggedDataset out = d;
    for (int j = 0; j < d.features(); ++j)
        out.design.col(j) = (d.design.col(j).array() - s.feature_mean(j)) / s.feature_scale(j);
    out.targets = d.targets.colwise() - s.target_mean;
    return out;
}

LaggedDataset standardize_invert(const Standardizer& s, const LaggedDataset& d) {
    if (d.features() != s.feature_mean.size())
        throw ShapeError("standardize_invert: feature count mismatch");
    LaggedDataset out = d;
    for (int j = 0; j < d.features(); ++j)
        out.design.col(j) = d.design.col(j).array() * s.feature_scale(j) + s.feature_mean(j);
    out.targets = d.targets.colwise() + s.target_mean;
    return out;
}

Matrix destandardize_targets(const Standardizer& s, const Matrix& centered) {
    if (centered.rows() != s.target_mean.size())
        throw ShapeError("destandardize_targets: target count mismatch");
    return centered.colwise() + s.target_mean;
}

}  // namespace rscn
