#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dnt/errors.hpp"

namespace dnt {

// Reported twin-quality errors are capped at this value; raw values are kept
// so orderings above the cap stay observable.
inline constexpr double kErrorCap = 100.0;

// A raw traffic record counts as 3 numeric fields: cell, time, value.
inline constexpr double kRawRecordUnits = 3.0;

struct QualityReport {
    double mae = 0.0;
    double mse = 0.0;
    std::optional<double> nrmse;  // absent when the truth range is zero
    double raw_mae = 0.0;
    double raw_mse = 0.0;
    std::optional<double> raw_nrmse;
    bool mae_capped = false;
    bool mse_capped = false;
    bool nrmse_capped = false;
};

// MAE / MSE / range-normalized RMSE between predictions and ground truth.
QualityReport quality_report(std::span<const double> predictions, std::span<const double> truth);

struct CostEvent {
    enum class Kind { model_transfer, raw_upload, compute };
    Kind kind;
    // model_transfer: a = transfer count, b = parameters per model
    // raw_upload:     a = record count,   b unused
    // compute:        a = epochs,         b = samples
    long long a = 0;
    long long b = 0;
};

struct CostReport {
    double comm_units = 0.0;
    double raw_data_units = 0.0;
    double compute_units = 0.0;
    double wall_time_s = 0.0;  // informational, excluded from totals

    double total() const { return comm_units + raw_data_units + compute_units; }

    CostReport& operator+=(const CostReport& o) {
        comm_units += o.comm_units;
        raw_data_units += o.raw_data_units;
        compute_units += o.compute_units;
        wall_time_s += o.wall_time_s;
        return *this;
    }
    friend CostReport operator+(CostReport a, const CostReport& b) { return a += b; }
};

CostReport cost_accounting(std::span<const CostEvent> event_log);

// 100 * (1 - candidate/baseline) over equal-weighted ledger totals.
double cost_reduction(const CostReport& candidate, const CostReport& baseline);

}  // namespace dnt
