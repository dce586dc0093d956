#include "dnt/forecast.hpp"

#include <algorithm>
#include <cmath>

namespace dnt {

NormStats NormStats::fit(std::span<const double> series) {
    if (series.empty()) throw DomainError("NormStats::fit: empty series");
    double lo = series[0], hi = series[0];
    for (double v : series) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return NormStats{lo, hi};
}

ForecastModel ForecastModel::zeros(int window) {
    if (window < 1) throw ConfigError("ForecastModel: window must be >= 1");
    ForecastModel m;
    m.window = window;
    m.weights.assign(static_cast<std::size_t>(window), 0.0);
    m.bias = 0.0;
    return m;
}

ParameterVector ForecastModel::pack() const {
    ParameterVector p = weights;
    p.push_back(bias);
    return p;
}

ForecastModel ForecastModel::unpack(std::span<const double> params) {
    if (params.size() < 2) throw DimensionError("ForecastModel::unpack: need at least 2 parameters");
    ForecastModel m;
    m.window = static_cast<int>(params.size()) - 1;
    m.weights.assign(params.begin(), params.end() - 1);
    m.bias = params.back();
    return m;
}

double predict(const ForecastModel& model, std::span<const double> window_values) {
    if (static_cast<int>(window_values.size()) != model.window)
        throw DimensionError("predict: window length mismatch");
    double acc = model.bias;
    for (int i = 0; i < model.window; ++i) acc += model.weights[static_cast<std::size_t>(i)] * window_values[static_cast<std::size_t>(i)];
    return acc;
}

double mse_loss(const ForecastModel& model, std::span<const Sample> samples) {
    if (samples.empty()) throw DomainError("mse_loss: empty sample set");
    double acc = 0.0;
    for (const Sample& s : samples) {
        double r = predict(model, s.window) - s.target;
        acc += r * r;
    }
    return acc / static_cast<double>(samples.size());
}

ParameterVector gradient(const ForecastModel& model, std::span<const Sample> samples) {
    if (samples.empty()) throw DomainError("gradient: empty sample set");
    ParameterVector g(static_cast<std::size_t>(model.window) + 1, 0.0);
    for (const Sample& s : samples) {
        double r = predict(model, s.window) - s.target;
        for (int i = 0; i < model.window; ++i) g[static_cast<std::size_t>(i)] += r * s.window[static_cast<std::size_t>(i)];
        g.back() += r;
    }
    double scale = 2.0 / static_cast<double>(samples.size());
    for (double& v : g) v *= scale;
    return g;
}

std::vector<Sample> make_windows(std::span<const double> series, int window) {
    if (static_cast<int>(series.size()) <= window)
        throw DomainError("make_windows: series must be longer than the window");
    std::vector<Sample> out;
    out.reserve(series.size() - static_cast<std::size_t>(window));
    for (std::size_t t = static_cast<std::size_t>(window); t < series.size(); ++t) {
        Sample s;
        s.window.assign(series.begin() + static_cast<std::ptrdiff_t>(t) - window,
                        series.begin() + static_cast<std::ptrdiff_t>(t));
        s.target = series[t];
        out.push_back(std::move(s));
    }
    return out;
}

std::pair<ForecastModel, long long> train_local(ForecastModel model, std::span<const double> series,
                                                const TrainingConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw ConfigError("train_local: learning_rate must be positive");
    if (cfg.epochs < 0) throw ConfigError("train_local: epochs must be >= 0");
    if (static_cast<int>(series.size()) <= model.window)
        throw DomainError("train_local: series must be longer than the model window");

    std::vector<double> normalized(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) normalized[i] = cfg.norm.norm(series[i]);
    std::vector<Sample> samples = make_windows(normalized, model.window);

    for (int e = 0; e < cfg.epochs; ++e) {
        ParameterVector g = gradient(model, samples);
        for (int i = 0; i < model.window; ++i) model.weights[static_cast<std::size_t>(i)] -= cfg.learning_rate * g[static_cast<std::size_t>(i)];
        model.bias -= cfg.learning_rate * g.back();
    }
    return {std::move(model), static_cast<long long>(samples.size())};
}

std::vector<double> rolling_forecast(const ForecastModel& model, std::span<const double> series,
                                     int horizon, const NormStats& norm) {
    if (horizon < 1) throw DomainError("rolling_forecast: horizon must be >= 1");
    if (series.size() < static_cast<std::size_t>(model.window) + static_cast<std::size_t>(horizon))
        throw DomainError("rolling_forecast: series too short for window + horizon");

    std::vector<double> normalized(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) normalized[i] = norm.norm(series[i]);

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int i = 0; i < horizon; ++i) {
        std::span<const double> win(normalized.data() + i, static_cast<std::size_t>(model.window));
        out.push_back(norm.denorm(predict(model, win)));
    }
    return out;
}

}  // namespace dnt
