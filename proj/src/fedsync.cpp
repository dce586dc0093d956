#include "dnt/fedsync.hpp"

#include <algorithm>
#include <cmath>

#include "dnt/rng.hpp"

namespace dnt {

std::string AggregationRule::name() const {
    switch (kind) {
        case Kind::mean: return "Mean";
        case Kind::median: return "Median";
        case Kind::fltrust: return "FLTrust";
        case Kind::tid: return "TID";
    }
    throw DomainError("AggregationRule: unknown kind");
}

AggregationRule AggregationRule::from_name(const std::string& name, double tau) {
    AggregationRule r;
    r.tau = tau;
    if (name == "Mean" || name == "mean") r.kind = Kind::mean;
    else if (name == "Median" || name == "median") r.kind = Kind::median;
    else if (name == "FLTrust" || name == "fltrust") r.kind = Kind::fltrust;
    else if (name == "TID" || name == "tid") r.kind = Kind::tid;
    else throw ConfigError("unknown aggregation rule '" + name + "'");
    return r;
}

namespace {

void check_updates(std::span<const ClientUpdate> updates, const char* who) {
    if (updates.empty()) throw DomainError(std::string(who) + ": empty update list");
    std::size_t dim = updates[0].params.size();
    if (dim == 0) throw DimensionError(std::string(who) + ": zero-dimensional update");
    for (const ClientUpdate& u : updates) {
        if (u.params.size() != dim) throw DimensionError(std::string(who) + ": mixed update dimensions");
        if (u.sample_count < 0) throw DomainError(std::string(who) + ": negative sample count");
        for (double v : u.params)
            if (!std::isfinite(v)) throw DomainError(std::string(who) + ": non-finite parameter");
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double dot(const ParameterVector& a, const ParameterVector& b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const ParameterVector& a) { return std::sqrt(dot(a, a)); }

}  // namespace

ParameterVector aggregate_mean(std::span<const ClientUpdate> updates) {
    check_updates(updates, "aggregate_mean");
    std::size_t dim = updates[0].params.size();
    double total_weight = 0;
    for (const ClientUpdate& u : updates) total_weight += static_cast<double>(u.sample_count);

    ParameterVector out(dim, 0.0);
    if (total_weight > 0) {
        for (const ClientUpdate& u : updates) {
            double w = static_cast<double>(u.sample_count) / total_weight;
            for (std::size_t d = 0; d < dim; ++d) out[d] += w * u.params[d];
        }
    } else {
        double w = 1.0 / static_cast<double>(updates.size());
        for (const ClientUpdate& u : updates)
            for (std::size_t d = 0; d < dim; ++d) out[d] += w * u.params[d];
    }
    return out;
}

ParameterVector aggregate_median(std::span<const ClientUpdate> updates) {
    check_updates(updates, "aggregate_median");
    std::size_t dim = updates[0].params.size();
    ParameterVector out(dim, 0.0);
    std::vector<double> col(updates.size());
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < updates.size(); ++i) col[i] = updates[i].params[d];
        out[d] = median_of(col);
    }
    return out;
}

ParameterVector aggregate_fltrust(std::span<const ClientUpdate> updates,
                                  const ParameterVector& server_update,
                                  const ParameterVector& global) {
    check_updates(updates, "aggregate_fltrust");
    std::size_t dim = updates[0].params.size();
    if (server_update.size() != dim || global.size() != dim)
        throw DimensionError("aggregate_fltrust: server/global dimension mismatch");

    ParameterVector d_s(dim);
    for (std::size_t d = 0; d < dim; ++d) d_s[d] = server_update[d] - global[d];
    double ns = norm2(d_s);
    if (ns == 0.0) throw DomainError("aggregate_fltrust: zero-norm server direction");

    ParameterVector acc(dim, 0.0);
    double trust_sum = 0;
    for (const ClientUpdate& u : updates) {
        ParameterVector d_i(dim);
        for (std::size_t d = 0; d < dim; ++d) d_i[d] = u.params[d] - global[d];
        double ni = norm2(d_i);
        if (ni == 0.0) continue;  // zero direction carries zero trust
        double trust = std::max(0.0, dot(d_i, d_s) / (ni * ns));
        if (trust == 0.0) continue;
        double rescale = ns / ni;
        for (std::size_t d = 0; d < dim; ++d) acc[d] += trust * rescale * d_i[d];
        trust_sum += trust;
    }

    ParameterVector out = global;
    if (trust_sum > 0) {
        for (std::size_t d = 0; d < dim; ++d) out[d] += acc[d] / trust_sum;
    }
    return out;
}

ParameterVector aggregate_tid(std::span<const ClientUpdate> updates, double tau) {
    if (tau <= 0) throw ConfigError("aggregate_tid: tau must be positive");
    if (updates.size() < 3) throw DomainError("aggregate_tid: needs at least 3 updates");
    check_updates(updates, "aggregate_tid");

    constexpr double kMadConsistency = 1.4826;
    std::size_t n = updates.size();
    std::size_t dim = updates[0].params.size();

    std::vector<double> med(dim), mad(dim);
    std::vector<double> col(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) col[i] = updates[i].params[d];
        med[d] = median_of(col);
        for (std::size_t i = 0; i < n; ++i) col[i] = std::fabs(updates[i].params[d] - med[d]);
        mad[d] = median_of(col);
    }

    // Outlier marks; dimensions with zero spread trim nothing.
    std::vector<std::vector<bool>> outlier(n, std::vector<bool>(dim, false));
    std::vector<std::size_t> outlier_dims(n, 0);
    for (std::size_t d = 0; d < dim; ++d) {
        if (mad[d] <= 0.0) continue;
        double threshold = tau * kMadConsistency * mad[d];
        for (std::size_t i = 0; i < n; ++i) {
            if (std::fabs(updates[i].params[d] - med[d]) > threshold) {
                outlier[i][d] = true;
                ++outlier_dims[i];
            }
        }
    }

    std::vector<double> benign_frac(n), weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        benign_frac[i] = 1.0 - static_cast<double>(outlier_dims[i]) / static_cast<double>(dim);
        weight[i] = static_cast<double>(updates[i].sample_count) * benign_frac[i];
    }

    ParameterVector out(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        double wsum = 0, acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (outlier[i][d]) continue;
            wsum += weight[i];
            acc += weight[i] * updates[i].params[d];
        }
        if (wsum > 0) {
            out[d] = acc / wsum;
            continue;
        }
        // Sample counts may all be zero; weight survivors by benign fraction.
        double fsum = 0, facc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (outlier[i][d]) continue;
            fsum += benign_frac[i];
            facc += benign_frac[i] * updates[i].params[d];
        }
        out[d] = fsum > 0 ? facc / fsum : med[d];
    }
    return out;
}

double staleness_weight(long long staleness, double beta) {
    if (staleness < 0) throw DomainError("staleness_weight: negative staleness");
    if (beta <= 0 || beta > 1) throw ConfigError("staleness_weight: beta must be in (0, 1]");
    return beta / (1.0 + static_cast<double>(staleness));
}

FedScenario make_scenario(const TrafficDataset& dataset, const std::vector<int>& cluster_cells,
                          double train_frac, double maint_frac) {
    if (cluster_cells.empty()) throw DomainError("make_scenario: no cells");
    if (train_frac <= 0 || maint_frac < 0 || train_frac + maint_frac >= 1)
        throw ConfigError("make_scenario: fractions must satisfy 0 < train, 0 <= maint, train+maint < 1");

    FedScenario sc;
    int horizon = static_cast<int>(dataset.timestamps.size());
    sc.train_end = static_cast<int>(train_frac * horizon);
    sc.maint_end = sc.train_end + static_cast<int>(maint_frac * horizon);
    sc.eval_end = horizon;
    for (int cell : cluster_cells) {
        CellSeries cs;
        cs.cell_id = cell;
        cs.series = dataset.values[dataset.cell_index(cell)];
        cs.norm = NormStats::fit(std::span<const double>(cs.series.data(),
                                                         static_cast<std::size_t>(sc.train_end)));
        sc.cells.push_back(std::move(cs));
    }
    return sc;
}

std::vector<double> server_root_series(const FedScenario& scenario, const FedConfig& cfg) {
    if (scenario.train_end <= cfg.window + 1)
        throw DomainError("server_root_series: training split too short");
    std::size_t train_len = static_cast<std::size_t>(scenario.train_end);
    std::vector<double> mean_series(train_len, 0.0);
    for (const CellSeries& cs : scenario.cells) {
        for (std::size_t t = 0; t < train_len; ++t) mean_series[t] += cs.norm.norm(cs.series[t]);
    }
    for (double& v : mean_series) v /= static_cast<double>(scenario.cells.size());

    std::size_t want = static_cast<std::size_t>(
        std::max<long long>(cfg.window + 2, std::llround(cfg.root_frac * static_cast<double>(train_len))));
    want = std::min(want, train_len);
    return std::vector<double>(mean_series.end() - static_cast<std::ptrdiff_t>(want), mean_series.end());
}

namespace {

ParameterVector apply_rule(const AggregationRule& rule, std::span<const ClientUpdate> updates,
                           const GlobalTwin& twin, const std::vector<double>& root,
                           const FedConfig& cfg) {
    switch (rule.kind) {
        case AggregationRule::Kind::mean: return aggregate_mean(updates);
        case AggregationRule::Kind::median: return aggregate_median(updates);
        case AggregationRule::Kind::tid: return aggregate_tid(updates, rule.tau);
        case AggregationRule::Kind::fltrust: {
            TrainingConfig tc{cfg.learning_rate, cfg.epochs, NormStats::identity()};
            auto [server_model, n] = train_local(ForecastModel::unpack(twin.params), root, tc);
            (void)n;
            return aggregate_fltrust(updates, server_model.pack(), twin.params);
        }
    }
    throw DomainError("apply_rule: unknown rule");
}

}  // namespace

void collect_forecasts(const ParameterVector& params, const FedScenario& scenario,
                       const FedConfig& cfg, int from, int to, std::vector<double>& predictions,
                       std::vector<double>& truth) {
    ForecastModel model = ForecastModel::unpack(params);
    for (const CellSeries& cs : scenario.cells) {
        int lo = from - cfg.window;
        if (lo < 0 || to > static_cast<int>(cs.series.size()) || to <= from)
            throw DomainError("collect_forecasts: evaluation slice out of range");
        std::span<const double> slice(cs.series.data() + lo, static_cast<std::size_t>(to - lo));
        auto p = rolling_forecast(model, slice, to - from, cs.norm);
        predictions.insert(predictions.end(), p.begin(), p.end());
        truth.insert(truth.end(), cs.series.begin() + from, cs.series.begin() + to);
    }
}

namespace {

// Pooled rolling-forecast quality over [from, to) for every cell.
QualityReport pooled_quality(const ParameterVector& params, const FedScenario& scenario,
                             const FedConfig& cfg, int from, int to) {
    std::vector<double> preds, truth;
    collect_forecasts(params, scenario, cfg, from, to, preds, truth);
    return quality_report(preds, truth);
}

}  // namespace

QualityReport evaluate_twin(const ParameterVector& params, const FedScenario& scenario,
                            const FedConfig& cfg) {
    return pooled_quality(params, scenario, cfg, scenario.maint_end, scenario.eval_end);
}

GlobalTwin run_vtwin(const FedScenario& scenario, int rounds, const AggregationRule& rule,
                     const FedConfig& cfg, int cluster_id, const RoundInterceptor& interceptor,
                     std::vector<TimelinePoint>* timeline) {
    if (rounds < 1) throw DomainError("run_vtwin: rounds must be >= 1");
    if (scenario.cells.empty()) throw DomainError("run_vtwin: empty scenario");
    if (scenario.train_end <= cfg.window + 1) throw DomainError("run_vtwin: training split too short");

    GlobalTwin twin;
    twin.cluster_id = cluster_id;
    Rng init_rng = Rng::substream(cfg.seed, "vtwin/init", static_cast<std::uint64_t>(cluster_id));
    twin.params.resize(static_cast<std::size_t>(cfg.window) + 1);
    for (double& p : twin.params) p = init_rng.normal(0.0, 0.05);

    std::vector<double> root = server_root_series(scenario, cfg);
    long long param_count = static_cast<long long>(twin.params.size());

    for (int r = 0; r < rounds; ++r) {
        std::vector<ClientUpdate> updates;
        updates.reserve(scenario.cells.size());
        for (const CellSeries& cs : scenario.cells) {
            TrainingConfig tc{cfg.learning_rate, cfg.epochs, cs.norm};
            std::span<const double> train(cs.series.data(), static_cast<std::size_t>(scenario.train_end));
            auto [model, n_samples] = train_local(ForecastModel::unpack(twin.params), train, tc);
            updates.push_back(ClientUpdate{cs.cell_id, model.pack(), n_samples, twin.version, true});
            twin.ledger.push_back(CostEvent{CostEvent::Kind::model_transfer, 2, param_count});
            twin.ledger.push_back(CostEvent{CostEvent::Kind::compute, cfg.epochs, n_samples});
        }
        if (interceptor) interceptor(twin, r, updates);
        twin.params = apply_rule(rule, updates, twin, root, cfg);
        twin.version += 1;

        if (timeline) {
            int eval_to = std::min(scenario.train_end + cfg.eval_window, scenario.eval_end);
            QualityReport q = pooled_quality(twin.params, scenario, cfg, scenario.train_end, eval_to);
            CostReport cost = twin.cost();
            timeline->push_back(TimelinePoint{twin.version, q.mae, q.mse, q.nrmse.value_or(0.0),
                                              cost.comm_units, cost.compute_units});
        }
    }
    return twin;
}

AsyncSchedule AsyncSchedule::make(int n_clients, int n_events, int batch_size, std::uint64_t seed) {
    if (n_clients < 1) throw ConfigError("AsyncSchedule: need at least one client");
    if (n_events < 1) throw ConfigError("AsyncSchedule: need at least one event");
    if (batch_size < 1) throw ConfigError("AsyncSchedule: batch size must be >= 1");

    Rng rng = Rng::substream(seed, "htwin/schedule");
    std::vector<int> period(static_cast<std::size_t>(n_clients));
    std::vector<int> offset(static_cast<std::size_t>(n_clients));
    for (int i = 0; i < n_clients; ++i) {
        period[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(2, 4));
        offset[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(0, period[static_cast<std::size_t>(i)] - 1));
    }

    AsyncSchedule sched;
    sched.batch_size = batch_size;
    for (long long t = 0; static_cast<int>(sched.arrivals.size()) < n_events; ++t) {
        for (int i = 0; i < n_clients && static_cast<int>(sched.arrivals.size()) < n_events; ++i) {
            if (t % period[static_cast<std::size_t>(i)] == offset[static_cast<std::size_t>(i)])
                sched.arrivals.push_back(Arrival{t, i});
        }
    }
    return sched;
}

TwinTimeline run_htwin(GlobalTwin twin, const FedScenario& scenario, const AsyncSchedule& schedule,
                       const AggregationRule& rule, const FedConfig& cfg,
                       const RoundInterceptor& interceptor) {
    if (twin.params.empty() || twin.version < 1)
        throw StateError("run_htwin: twin must be initialized by run_vtwin");
    if (scenario.maint_end <= scenario.train_end)
        throw DomainError("run_htwin: empty maintenance window");
    if (schedule.arrivals.empty()) throw DomainError("run_htwin: empty schedule");

    int n_clients = static_cast<int>(scenario.cells.size());
    for (const auto& a : schedule.arrivals) {
        if (a.client_index < 0 || a.client_index >= n_clients)
            throw DomainError("run_htwin: schedule references unknown client");
    }

    std::vector<double> root = server_root_series(scenario, cfg);
    long long param_count = static_cast<long long>(twin.params.size());

    std::vector<ParameterVector> fetch_params(static_cast<std::size_t>(n_clients), twin.params);
    std::vector<long long> fetch_version(static_cast<std::size_t>(n_clients), twin.version);

    std::size_t n_batches = schedule.arrivals.size() / static_cast<std::size_t>(schedule.batch_size);
    if (n_batches == 0) throw DomainError("run_htwin: schedule shorter than one batch");

    TwinTimeline timeline;
    int maint_span = scenario.maint_end - scenario.train_end;
    int train_back = std::max(cfg.maint_window, cfg.window + 2);

    for (std::size_t b = 0; b < n_batches; ++b) {
        int data_end = scenario.train_end +
                       static_cast<int>((static_cast<long long>(b + 1) * maint_span) /
                                        static_cast<long long>(n_batches));

        std::vector<ClientUpdate> updates;
        for (int e = 0; e < schedule.batch_size; ++e) {
            const auto& arrival = schedule.arrivals[b * static_cast<std::size_t>(schedule.batch_size) +
                                                    static_cast<std::size_t>(e)];
            const CellSeries& cs = scenario.cells[static_cast<std::size_t>(arrival.client_index)];
            int lo = std::max(0, data_end - train_back);
            std::span<const double> recent(cs.series.data() + lo, static_cast<std::size_t>(data_end - lo));
            TrainingConfig tc{cfg.learning_rate, cfg.epochs, cs.norm};
            auto [model, n_samples] = train_local(
                ForecastModel::unpack(fetch_params[static_cast<std::size_t>(arrival.client_index)]), recent, tc);
            updates.push_back(ClientUpdate{cs.cell_id, model.pack(), n_samples,
                                           fetch_version[static_cast<std::size_t>(arrival.client_index)], true});
            twin.ledger.push_back(CostEvent{CostEvent::Kind::model_transfer, 2, param_count});
            twin.ledger.push_back(CostEvent{CostEvent::Kind::compute, cfg.epochs, n_samples});
        }
        if (interceptor) interceptor(twin, static_cast<long long>(b), updates);

        std::vector<double> stalenesses;
        stalenesses.reserve(updates.size());
        for (const ClientUpdate& u : updates)
            stalenesses.push_back(static_cast<double>(std::max<long long>(0, twin.version - u.base_version)));
        std::sort(stalenesses.begin(), stalenesses.end());
        long long s_med = static_cast<long long>(stalenesses[(stalenesses.size() - 1) / 2]);
        double w = staleness_weight(s_med, cfg.beta);

        ParameterVector aggregated = apply_rule(rule, updates, twin, root, cfg);
        for (std::size_t d = 0; d < twin.params.size(); ++d)
            twin.params[d] += w * (aggregated[d] - twin.params[d]);
        twin.version += 1;

        for (int e = 0; e < schedule.batch_size; ++e) {
            int c = schedule.arrivals[b * static_cast<std::size_t>(schedule.batch_size) +
                                      static_cast<std::size_t>(e)]
                        .client_index;
            fetch_params[static_cast<std::size_t>(c)] = twin.params;
            fetch_version[static_cast<std::size_t>(c)] = twin.version;
        }

        int eval_to = std::min(data_end + cfg.eval_window, scenario.eval_end);
        QualityReport q = pooled_quality(twin.params, scenario, cfg, data_end, eval_to);
        CostReport cost = twin.cost();
        timeline.points.push_back(TimelinePoint{twin.version, q.mae, q.mse, q.nrmse.value_or(0.0),
                                                cost.comm_units, cost.compute_units});
    }

    timeline.twin = std::move(twin);
    return timeline;
}

}  // namespace dnt
