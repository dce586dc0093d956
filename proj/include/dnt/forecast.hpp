#pragma once

#include <span>
#include <utility>
#include <vector>

#include "dnt/errors.hpp"

namespace dnt {

// Flat parameter vector, the unit of federated exchange.
using ParameterVector = std::vector<double>;

// Per-cell min-max statistics, frozen from the training split so parameter
// scales stay comparable across cells.
struct NormStats {
    double lo = 0.0;
    double hi = 1.0;

    static NormStats identity() { return NormStats{0.0, 1.0}; }
    static NormStats fit(std::span<const double> series);

    // Degenerate (hi == lo) series map to 0 and round-trip exactly.
    double scale() const { return hi - lo > 0.0 ? hi - lo : 1.0; }
    double norm(double v) const { return (v - lo) / scale(); }
    double denorm(double v) const { return v * scale() + lo; }
};

// Linear autoregressive one-step forecaster over a fixed window. Packed
// parameter order is [w_1 .. w_W, bias]; window values are chronological,
// oldest first.
struct ForecastModel {
    int window = 0;
    std::vector<double> weights;
    double bias = 0.0;

    static ForecastModel zeros(int window);

    ParameterVector pack() const;
    static ForecastModel unpack(std::span<const double> params);
};

struct TrainingConfig {
    double learning_rate = 0.05;
    int epochs = 5;  // 0 is a no-op
    NormStats norm;
};

struct Sample {
    std::vector<double> window;
    double target = 0.0;
};

double predict(const ForecastModel& model, std::span<const double> window_values);

double mse_loss(const ForecastModel& model, std::span<const Sample> samples);

// Exact gradient of mse_loss w.r.t. the packed parameters.
ParameterVector gradient(const ForecastModel& model, std::span<const Sample> samples);

// Sliding windows over an (already normalized) series.
std::vector<Sample> make_windows(std::span<const double> series, int window);

// Full-batch gradient descent on min-max-normalized sliding windows.
// Returns the updated model and the number of windows used.
std::pair<ForecastModel, long long> train_local(ForecastModel model, std::span<const double> series,
                                                const TrainingConfig& cfg);

// Teacher-forced one-step forecasts. Prediction i targets series[window + i]
// and uses the true (normalized) history ending there; output is denormalized
// to traffic units and has exactly `horizon` entries.
std::vector<double> rolling_forecast(const ForecastModel& model, std::span<const double> series,
                                     int horizon, const NormStats& norm);

}  // namespace dnt
