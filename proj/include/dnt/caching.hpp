#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnt/forecast.hpp"

namespace dnt {

// 5 base stations, 150 local cache slots each, 8 listed clients per BS,
// clients served by at most two BSs. Cache access is strictly local.
struct CacheTopology {
    static constexpr int kNumBs = 5;
    static constexpr int kSlotsPerBs = 150;
    static constexpr int kClientsPerBs = 8;

    std::vector<std::vector<int>> bs_clients;  // exactly 8 per BS
    std::vector<std::vector<int>> client_bs;   // 1 or 2 BSs per client

    int n_clients() const { return static_cast<int>(client_bs.size()); }
    void validate() const;

    // n_dual clients are shared between adjacent BSs; the rest are single-served.
    static CacheTopology make(int n_dual = 8);
};

struct RequestEvent {
    long long time = 0;
    int client_id = 0;
    int content_id = 0;
    int serving_bs = -1;
};

struct SafetyShield {
    double theta = 1.5;  // max allowed ratio of a BS's window load to the mean
    double rho = 0.5;    // reward penalty weight
    bool enabled = false;
    long long intervention_count = 0;
};

struct CacheConfig {
    int n_dual = 8;
    int catalog_size = 1000;
    double zipf_alpha = 0.8;
    int drift_steps = 500;   // popularity permutation drifts this often
    double theta = 1.5;
    double rho = 0.5;
    int load_window = 200;   // sliding load window, steps
    int count_window = 50;   // steps per demand-count window
    int twin_window = 6;     // forecaster input length, in count windows
    double rare_rate = 0.3;  // per-window probability of a cold-content spike
    int episodes = 24;
    int episode_steps = 800;
    int eval_steps = 4000;
    double alpha = 0.15;  // Q-learning step size
    double gamma = 0.9;
    double epsilon = 0.1;  // training exploration
    std::uint64_t seed = 1;
};

enum class CacheVariant { lru, lfu, rl, rl_dnt, reliable_rl, reliable_rl_dnt };
const char* variant_name(CacheVariant v);
CacheVariant variant_from_name(const std::string& name);
bool variant_uses_shield(CacheVariant v);
bool variant_uses_twin(CacheVariant v);

// Zipf(alpha) requests with a drifting rank->content permutation; dual-served
// clients route to the less-loaded of their BSs (ties to the lower id).
std::vector<RequestEvent> simulate_request_stream(const CacheTopology& topo,
                                                  const CacheConfig& cfg, std::uint64_t seed,
                                                  int horizon_steps);

// The twin as demand forecaster: an AR model over per-content request counts
// aggregated into fixed-length count windows.
struct TwinDemandModel {
    ForecastModel model;
    NormStats norm;
    int count_window = 50;
    bool trained = false;
};

TwinDemandModel train_demand_twin(const std::vector<RequestEvent>& history, const CacheConfig& cfg);

// Synthetic stream sampled from twin-forecasted per-content demand, with cold
// contents spiked to the hot tier at rare_rate per window.
struct TwinGenOutput {
    std::vector<RequestEvent> events;
    std::vector<int> forecasts;  // per window: top predicted-demand content
    std::vector<int> spiked;     // per window: spiked cold content, -1 if none
};
TwinGenOutput twin_generate(const TwinDemandModel& twin, const CacheTopology& topo,
                            const CacheConfig& cfg, const std::vector<RequestEvent>& history,
                            int n_events, double rare_rate, std::uint64_t seed);

// Live caching world: per-BS caches with LRU/LFU bookkeeping, sliding load
// windows, and recent-demand counters driving popularity tiers.
class CacheWorld {
  public:
    CacheWorld(const CacheTopology& topo, const CacheConfig& cfg,
               const TwinDemandModel* twin = nullptr);

    const CacheTopology& topology() const { return topo_; }
    const std::vector<int>& cache(int bs) const { return bs_[static_cast<std::size_t>(bs)].contents; }
    bool cached(int bs, int content) const;
    bool cache_full(int bs) const;
    long long window_load(int bs) const;
    double load_ratio(int bs) const;
    long long total_served(int bs) const { return bs_[static_cast<std::size_t>(bs)].total_served; }

    // Eviction candidates ("slots" index into cache(bs)).
    int lru_slot(int bs) const;
    int lfu_slot(int bs) const;
    int lowest_demand_slot(int bs) const;

    // Discretized state: popularity tier x occupancy tier x load-ratio tier.
    static constexpr int kStates = 27;
    static constexpr int kActions = 3;
    int state_index(const RequestEvent& ev) const;

    double demand_estimate(int content) const;

    struct StepResult {
        bool hit = false;
        double reward = 0.0;
    };
    // victim_slot < 0 requests plain insert (valid while the cache has room).
    StepResult step(const RequestEvent& ev, int victim_slot, const SafetyShield& shield);

    long long now() const { return now_; }

  private:
    struct BsState {
        std::vector<int> contents;
        std::map<int, long long> last_used;
        std::map<int, long long> use_count;
        std::deque<long long> served_times;
        long long total_served = 0;
    };

    void note_request(const RequestEvent& ev);
    void trim_windows();

    CacheTopology topo_;
    CacheConfig cfg_;
    const TwinDemandModel* twin_;
    std::array<BsState, CacheTopology::kNumBs> bs_;
    std::deque<std::pair<long long, int>> recent_requests_;  // (time, content)
    std::map<int, int> recent_counts_;
    std::map<int, std::deque<double>> content_windows_;  // rolling count windows per content
    long long window_epoch_ = 0;
    long long serve_counter_ = 0;  // recency clock, one tick per served request
    long long now_ = 0;
};

CacheWorld::StepResult step_env(CacheWorld& world, const RequestEvent& ev, int victim_slot,
                                const SafetyShield& shield);

// Returns the (possibly overridden) victim slot and whether the shield
// intervened: on a miss at a BS whose load ratio exceeds theta, the override
// evicts that BS's least-recently-used entry.
std::pair<int, bool> safety_shield(const CacheWorld& world, const RequestEvent& ev,
                                   int proposed_victim, SafetyShield& shield);

struct CachePolicy {
    CacheVariant variant = CacheVariant::lru;
    std::vector<double> q;  // kStates x kActions, empty for lru/lfu
    std::uint64_t seed = 0;
    std::optional<TwinDemandModel> twin;  // carried by +DNT variants
};

struct CachingReport {
    CacheVariant variant = CacheVariant::lru;
    long long hits = 0;
    long long requests = 0;
    double hit_rate = 0.0;
    long long interventions = 0;
    std::array<double, CacheTopology::kNumBs> bs_loads{};
    double load_cv = 0.0;
};

// Tabular Q-learning over the discretized state with a 3-action eviction
// menu; +DNT variants interleave twin-generated episodes with real ones.
CachePolicy train_policy(const CacheConfig& cfg, CacheVariant variant, int episodes,
                         std::uint64_t seed);

CachingReport evaluate_caching(const CachePolicy& policy, const CacheConfig& cfg,
                               const std::vector<RequestEvent>& events);

// Shared evaluation pipeline: trains all requested variants and scores them
// on one common evaluation stream.
std::vector<CachingReport> run_cache_sim(const CacheConfig& cfg,
                                         const std::vector<CacheVariant>& variants);

}  // namespace dnt
