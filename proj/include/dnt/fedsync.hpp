#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dnt/forecast.hpp"
#include "dnt/metrics.hpp"
#include "dnt/network.hpp"

namespace dnt {

// One participant's contribution to an aggregation step. `params` carries the
// full updated local model. `authentic` is hidden from the aggregator and
// used only by the evaluation harness.
struct ClientUpdate {
    int client_id = 0;
    ParameterVector params;
    long long sample_count = 0;
    long long base_version = 0;
    bool authentic = true;
};

struct AggregationRule {
    enum class Kind { mean, median, fltrust, tid };
    Kind kind = Kind::mean;
    double tau = 3.0;  // TID trim threshold

    std::string name() const;
    static AggregationRule from_name(const std::string& name, double tau = 3.0);
};

// Sample-count-weighted mean; unweighted when every count is zero.
ParameterVector aggregate_mean(std::span<const ClientUpdate> updates);

// Coordinate-wise median; sample counts ignored.
ParameterVector aggregate_median(std::span<const ClientUpdate> updates);

// Server-rooted aggregation: clients scored by clipped cosine between their
// direction and the server direction, directions rescaled to the server norm.
ParameterVector aggregate_fltrust(std::span<const ClientUpdate> updates,
                                  const ParameterVector& server_update,
                                  const ParameterVector& global);

// Robust z-score trim (median/MAD, consistency constant 1.4826) per
// dimension, then a re-weighted mean where each client's weight is
// sample_count * (1 - fraction of dimensions trimmed).
ParameterVector aggregate_tid(std::span<const ClientUpdate> updates, double tau);

// Hyperbolic staleness discount beta / (1 + s).
double staleness_weight(long long staleness, double beta);

// Per-cluster aggregated twin model.
struct GlobalTwin {
    int cluster_id = 0;
    ParameterVector params;
    long long version = 0;
    std::vector<CostEvent> ledger;

    CostReport cost() const { return cost_accounting(ledger); }
};

// One cell's data as seen by the federation: full series plus normalization
// statistics frozen from the V-twin training split.
struct CellSeries {
    int cell_id = 0;
    std::vector<double> series;
    NormStats norm;
};

// Split layout over the shared time axis:
//   [0, train_end)          V-twin training data
//   [train_end, maint_end)  H-twin maintenance stream
//   [maint_end, eval_end)   held-out evaluation data
struct FedScenario {
    std::vector<CellSeries> cells;
    int train_end = 0;
    int maint_end = 0;
    int eval_end = 0;
};

FedScenario make_scenario(const TrafficDataset& dataset, const std::vector<int>& cluster_cells,
                          double train_frac = 0.6, double maint_frac = 0.2);

struct FedConfig {
    int window = 12;
    double learning_rate = 0.05;
    int epochs = 5;
    double beta = 0.5;        // staleness base weight
    double root_frac = 0.05;  // FLTrust server root slice, fraction of the training split
    int maint_window = 120;   // recent points a client trains on during maintenance
    int eval_window = 120;    // rolling evaluation window for timelines
    std::uint64_t seed = 1;
};

// Hook for update injection (attacks); may reorder/extend the update list.
using RoundInterceptor =
    std::function<void(const GlobalTwin&, long long round, std::vector<ClientUpdate>&)>;

struct TimelinePoint {
    long long version = 0;
    double mae = 0.0;
    double mse = 0.0;
    double nrmse = 0.0;
    double comm_cost = 0.0;
    double compute_cost = 0.0;
};

// Synchronous V-twin construction: every cell trains each round, the rule
// aggregates all updates at once, version advances once per round. When
// `timeline` is given, per-round quality on the early maintenance window is
// recorded alongside cumulative costs.
GlobalTwin run_vtwin(const FedScenario& scenario, int rounds, const AggregationRule& rule,
                     const FedConfig& cfg, int cluster_id = 0,
                     const RoundInterceptor& interceptor = {},
                     std::vector<TimelinePoint>* timeline = nullptr);

struct TwinTimeline {
    GlobalTwin twin;
    std::vector<TimelinePoint> points;
};

// Deterministic arrival pattern: each client submits when its (period,
// offset) fires; consecutive submissions are grouped into fixed-size batches.
struct AsyncSchedule {
    struct Arrival {
        long long time = 0;
        int client_index = 0;
    };
    std::vector<Arrival> arrivals;
    int batch_size = 1;

    static AsyncSchedule make(int n_clients, int n_events, int batch_size, std::uint64_t seed);
};

// Asynchronous H-twin maintenance: stale client updates are aggregated per
// batch with the configured rule and applied as a staleness-weighted delta.
TwinTimeline run_htwin(GlobalTwin twin, const FedScenario& scenario, const AsyncSchedule& schedule,
                       const AggregationRule& rule, const FedConfig& cfg,
                       const RoundInterceptor& interceptor = {});

// Pooled teacher-forced forecast error of `params` over the held-out slice.
QualityReport evaluate_twin(const ParameterVector& params, const FedScenario& scenario,
                            const FedConfig& cfg);

// Appends every cell's forecasts and truths over [from, to) — used to pool
// evaluation across clusters.
void collect_forecasts(const ParameterVector& params, const FedScenario& scenario,
                       const FedConfig& cfg, int from, int to, std::vector<double>& predictions,
                       std::vector<double>& truth);

// FLTrust server root: tail slice of the cross-cell mean normalized training
// series (already normalized; train with identity stats).
std::vector<double> server_root_series(const FedScenario& scenario, const FedConfig& cfg);

}  // namespace dnt
