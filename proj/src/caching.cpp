#include "dnt/caching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dnt/rng.hpp"

namespace dnt {

void CacheTopology::validate() const {
    if (static_cast<int>(bs_clients.size()) != kNumBs)
        throw ConfigError("topology: expected 5 base stations");
    std::vector<int> service_count(client_bs.size(), 0);
    for (int b = 0; b < kNumBs; ++b) {
        if (static_cast<int>(bs_clients[static_cast<std::size_t>(b)].size()) != kClientsPerBs)
            throw ConfigError("topology: BS " + std::to_string(b) + " must list exactly 8 clients");
        for (int c : bs_clients[static_cast<std::size_t>(b)]) {
            if (c < 0 || c >= n_clients()) throw ConfigError("topology: unknown client id");
            ++service_count[static_cast<std::size_t>(c)];
        }
    }
    for (int c = 0; c < n_clients(); ++c) {
        const auto& set = client_bs[static_cast<std::size_t>(c)];
        if (set.empty() || set.size() > 2)
            throw ConfigError("topology: client " + std::to_string(c) + " must be served by 1 or 2 BSs");
        if (static_cast<std::size_t>(service_count[static_cast<std::size_t>(c)]) != set.size())
            throw ConfigError("topology: inconsistent service map for client " + std::to_string(c));
    }
}

CacheTopology CacheTopology::make(int n_dual) {
    int slots = kNumBs * kClientsPerBs;
    if (n_dual < 0 || 2 * n_dual > slots)
        throw ConfigError("topology: n_dual out of range");

    CacheTopology topo;
    topo.bs_clients.assign(kNumBs, {});
    int n_clients = slots - n_dual;
    topo.client_bs.assign(static_cast<std::size_t>(n_clients), {});

    // Dual clients bridge adjacent BSs; singles fill the least-loaded lists.
    for (int j = 0; j < n_dual; ++j) {
        int b1 = j % kNumBs;
        int b2 = (j + 1) % kNumBs;
        topo.bs_clients[static_cast<std::size_t>(b1)].push_back(j);
        topo.bs_clients[static_cast<std::size_t>(b2)].push_back(j);
        topo.client_bs[static_cast<std::size_t>(j)] = {std::min(b1, b2), std::max(b1, b2)};
    }
    for (int c = n_dual; c < n_clients; ++c) {
        int best = 0;
        for (int b = 1; b < kNumBs; ++b) {
            if (topo.bs_clients[static_cast<std::size_t>(b)].size() <
                topo.bs_clients[static_cast<std::size_t>(best)].size())
                best = b;
        }
        topo.bs_clients[static_cast<std::size_t>(best)].push_back(c);
        topo.client_bs[static_cast<std::size_t>(c)] = {best};
    }
    topo.validate();
    return topo;
}

const char* variant_name(CacheVariant v) {
    switch (v) {
        case CacheVariant::lru: return "LRU";
        case CacheVariant::lfu: return "LFU";
        case CacheVariant::rl: return "RL";
        case CacheVariant::rl_dnt: return "RL+DNT";
        case CacheVariant::reliable_rl: return "ReliableRL";
        case CacheVariant::reliable_rl_dnt: return "ReliableRL+DNT";
    }
    throw DomainError("variant_name: unknown variant");
}

CacheVariant variant_from_name(const std::string& name) {
    for (CacheVariant v : {CacheVariant::lru, CacheVariant::lfu, CacheVariant::rl,
                           CacheVariant::rl_dnt, CacheVariant::reliable_rl,
                           CacheVariant::reliable_rl_dnt}) {
        if (name == variant_name(v)) return v;
    }
    throw ConfigError("unknown cache variant '" + name + "'");
}

bool variant_uses_shield(CacheVariant v) {
    return v == CacheVariant::reliable_rl || v == CacheVariant::reliable_rl_dnt;
}

bool variant_uses_twin(CacheVariant v) {
    return v == CacheVariant::rl_dnt || v == CacheVariant::reliable_rl_dnt;
}

namespace {

// Requests/window loads used for routing inside stream generation. The world
// recomputes the same quantity while consuming events.
struct RoutingLoads {
    std::array<std::deque<long long>, CacheTopology::kNumBs> served;
    int window;

    explicit RoutingLoads(int w) : window(w) {}

    void trim(long long now) {
        for (auto& dq : served)
            while (!dq.empty() && dq.front() <= now - window) dq.pop_front();
    }

    int pick_bs(const std::vector<int>& candidates) const {
        int best = candidates[0];
        for (std::size_t i = 1; i < candidates.size(); ++i) {
            int b = candidates[i];
            if (served[static_cast<std::size_t>(b)].size() <
                served[static_cast<std::size_t>(best)].size())
                best = b;
        }
        return best;
    }
};

std::vector<double> zipf_cdf(int catalog, double alpha) {
    std::vector<double> cdf(static_cast<std::size_t>(catalog));
    double acc = 0;
    for (int r = 0; r < catalog; ++r) {
        acc += 1.0 / std::pow(static_cast<double>(r + 1), alpha);
        cdf[static_cast<std::size_t>(r)] = acc;
    }
    for (double& v : cdf) v /= acc;
    return cdf;
}

int sample_cdf(const std::vector<double>& cdf, double u) {
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return static_cast<int>(cdf.size()) - 1;
    return static_cast<int>(it - cdf.begin());
}

}  // namespace

std::vector<RequestEvent> simulate_request_stream(const CacheTopology& topo,
                                                  const CacheConfig& cfg, std::uint64_t seed,
                                                  int horizon_steps) {
    if (cfg.catalog_size < 1) throw ConfigError("simulate_request_stream: catalog_size must be >= 1");
    if (cfg.zipf_alpha < 0) throw ConfigError("simulate_request_stream: zipf_alpha must be >= 0");
    if (horizon_steps < 1) throw ConfigError("simulate_request_stream: horizon must be >= 1");

    std::vector<double> cdf = zipf_cdf(cfg.catalog_size, cfg.zipf_alpha);
    std::vector<int> perm(static_cast<std::size_t>(cfg.catalog_size));
    for (int i = 0; i < cfg.catalog_size; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng perm_rng = Rng::substream(seed, "cache/perm");
    perm_rng.shuffle(perm);

    Rng req_rng = Rng::substream(seed, "cache/requests");
    RoutingLoads loads(cfg.load_window);

    std::vector<RequestEvent> events;
    events.reserve(static_cast<std::size_t>(horizon_steps) * static_cast<std::size_t>(topo.n_clients()));
    int drift_epoch = 0;
    for (long long t = 0; t < horizon_steps; ++t) {
        if (cfg.drift_steps > 0 && t > 0 && t % cfg.drift_steps == 0) {
            // Drift the popularity ranking by a batch of transpositions.
            Rng drift_rng = Rng::substream(seed, "cache/drift", static_cast<std::uint64_t>(++drift_epoch));
            int swaps = std::max(1, cfg.catalog_size / 10);
            for (int s = 0; s < swaps; ++s) {
                auto i = static_cast<std::size_t>(drift_rng.uniform_int(0, cfg.catalog_size - 1));
                auto j = static_cast<std::size_t>(drift_rng.uniform_int(0, cfg.catalog_size - 1));
                std::swap(perm[i], perm[j]);
            }
        }
        loads.trim(t);
        for (int c = 0; c < topo.n_clients(); ++c) {
            RequestEvent ev;
            ev.time = t;
            ev.client_id = c;
            ev.content_id = perm[static_cast<std::size_t>(sample_cdf(cdf, req_rng.uniform()))];
            ev.serving_bs = loads.pick_bs(topo.client_bs[static_cast<std::size_t>(c)]);
            loads.served[static_cast<std::size_t>(ev.serving_bs)].push_back(t);
            events.push_back(ev);
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// Twin demand model

namespace {

// Per-content request counts aggregated into fixed-length windows.
std::map<int, std::vector<double>> count_series(const std::vector<RequestEvent>& events,
                                                int count_window) {
    if (events.empty()) throw DomainError("count_series: empty history");
    long long horizon = events.back().time + 1;
    std::size_t n_windows = static_cast<std::size_t>((horizon + count_window - 1) / count_window);
    std::map<int, std::vector<double>> series;
    for (const RequestEvent& ev : events) {
        auto& s = series[ev.content_id];
        if (s.empty()) s.assign(n_windows, 0.0);
        s[static_cast<std::size_t>(ev.time / count_window)] += 1.0;
    }
    return series;
}

}  // namespace

TwinDemandModel train_demand_twin(const std::vector<RequestEvent>& history, const CacheConfig& cfg) {
    auto series = count_series(history, cfg.count_window);

    double lo = 0, hi = 1;
    for (const auto& [content, s] : series)
        for (double v : s) hi = std::max(hi, v);
    NormStats norm{lo, hi};

    int W = cfg.twin_window;
    std::vector<Sample> samples;
    for (const auto& [content, s] : series) {
        if (static_cast<int>(s.size()) <= W) continue;
        std::vector<double> normalized(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) normalized[i] = norm.norm(s[i]);
        auto w = make_windows(normalized, W);
        samples.insert(samples.end(), w.begin(), w.end());
    }
    if (samples.empty()) throw DomainError("train_demand_twin: history too short for the twin window");

    ForecastModel model = ForecastModel::zeros(W);
    constexpr int kEpochs = 60;
    constexpr double kLr = 0.2;
    for (int e = 0; e < kEpochs; ++e) {
        ParameterVector g = gradient(model, samples);
        for (int i = 0; i < W; ++i) model.weights[static_cast<std::size_t>(i)] -= kLr * g[static_cast<std::size_t>(i)];
        model.bias -= kLr * g.back();
    }

    TwinDemandModel twin;
    twin.model = std::move(model);
    twin.norm = norm;
    twin.count_window = cfg.count_window;
    twin.trained = true;
    return twin;
}

TwinGenOutput twin_generate(const TwinDemandModel& twin, const CacheTopology& topo,
                            const CacheConfig& cfg, const std::vector<RequestEvent>& history,
                            int n_events, double rare_rate, std::uint64_t seed) {
    if (!twin.trained) throw StateError("twin_generate: twin is not trained");
    if (rare_rate < 0 || rare_rate > 1) throw ConfigError("twin_generate: rare_rate must be in [0,1]");
    if (n_events < 1) throw ConfigError("twin_generate: n_events must be >= 1");

    int W = twin.model.window;
    auto series = count_series(history, twin.count_window);

    // Rolling per-content window-count state, seeded from the history tail.
    std::vector<std::vector<double>> state(static_cast<std::size_t>(cfg.catalog_size),
                                           std::vector<double>(static_cast<std::size_t>(W), 0.0));
    for (const auto& [content, s] : series) {
        if (content < 0 || content >= cfg.catalog_size) continue;
        auto& st = state[static_cast<std::size_t>(content)];
        for (int i = 0; i < W; ++i) {
            long long idx = static_cast<long long>(s.size()) - W + i;
            if (idx >= 0) st[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(idx)];
        }
    }

    Rng rng = Rng::substream(seed, "cache/twin-gen");
    RoutingLoads loads(cfg.load_window);
    TwinGenOutput out;
    out.events.reserve(static_cast<std::size_t>(n_events));

    std::vector<double> demand(static_cast<std::size_t>(cfg.catalog_size));
    std::vector<double> cdf(static_cast<std::size_t>(cfg.catalog_size));
    long long t = 0;
    while (static_cast<int>(out.events.size()) < n_events) {
        // One-step demand forecast per content for the upcoming window.
        double total = 0, peak = 0;
        int top = 0;
        for (int c = 0; c < cfg.catalog_size; ++c) {
            std::vector<double> in(static_cast<std::size_t>(W));
            for (int i = 0; i < W; ++i) in[static_cast<std::size_t>(i)] = twin.norm.norm(state[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]);
            double d = std::max(0.0, twin.norm.denorm(predict(twin.model, in)));
            demand[static_cast<std::size_t>(c)] = d;
            total += d;
            if (d > peak) {
                peak = d;
                top = c;
            }
        }
        out.forecasts.push_back(top);

        double avg = total / cfg.catalog_size;
        int spiked = -1;
        if (rng.uniform() < rare_rate) {
            // Spike one cold content into the hot tier.
            std::vector<int> cold;
            for (int c = 0; c < cfg.catalog_size; ++c)
                if (demand[static_cast<std::size_t>(c)] < 0.5 * avg) cold.push_back(c);
            if (!cold.empty()) {
                spiked = cold[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cold.size()) - 1))];
                demand[static_cast<std::size_t>(spiked)] = std::max(2.0 * avg, peak);
            }
        }
        out.spiked.push_back(spiked);

        double acc = 0;
        for (int c = 0; c < cfg.catalog_size; ++c) {
            acc += demand[static_cast<std::size_t>(c)] + 1e-9;
            cdf[static_cast<std::size_t>(c)] = acc;
        }
        for (double& v : cdf) v /= acc;

        std::vector<double> realized(static_cast<std::size_t>(cfg.catalog_size), 0.0);
        for (int step = 0; step < twin.count_window && static_cast<int>(out.events.size()) < n_events;
             ++step, ++t) {
            loads.trim(t);
            for (int c = 0; c < topo.n_clients() && static_cast<int>(out.events.size()) < n_events; ++c) {
                RequestEvent ev;
                ev.time = t;
                ev.client_id = c;
                ev.content_id = sample_cdf(cdf, rng.uniform());
                ev.serving_bs = loads.pick_bs(topo.client_bs[static_cast<std::size_t>(c)]);
                loads.served[static_cast<std::size_t>(ev.serving_bs)].push_back(t);
                realized[static_cast<std::size_t>(ev.content_id)] += 1.0;
                out.events.push_back(ev);
            }
        }
        for (int c = 0; c < cfg.catalog_size; ++c) {
            auto& st = state[static_cast<std::size_t>(c)];
            st.erase(st.begin());
            st.push_back(realized[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cache world

CacheWorld::CacheWorld(const CacheTopology& topo, const CacheConfig& cfg,
                       const TwinDemandModel* twin)
    : topo_(topo), cfg_(cfg), twin_(twin) {
    topo_.validate();
}

bool CacheWorld::cached(int bs, int content) const {
    return bs_[static_cast<std::size_t>(bs)].last_used.count(content) > 0;
}

bool CacheWorld::cache_full(int bs) const {
    return static_cast<int>(bs_[static_cast<std::size_t>(bs)].contents.size()) >= CacheTopology::kSlotsPerBs;
}

long long CacheWorld::window_load(int bs) const {
    return static_cast<long long>(bs_[static_cast<std::size_t>(bs)].served_times.size());
}

double CacheWorld::load_ratio(int bs) const {
    long long total = 0;
    for (int b = 0; b < CacheTopology::kNumBs; ++b) total += window_load(b);
    if (total == 0) return 1.0;
    double mean = static_cast<double>(total) / CacheTopology::kNumBs;
    return static_cast<double>(window_load(bs)) / mean;
}

int CacheWorld::lru_slot(int bs) const {
    const BsState& s = bs_[static_cast<std::size_t>(bs)];
    if (s.contents.empty()) throw DomainError("lru_slot: cache is empty");
    int best = 0;
    long long best_t = std::numeric_limits<long long>::max();
    for (std::size_t i = 0; i < s.contents.size(); ++i) {
        long long t = s.last_used.at(s.contents[i]);
        if (t < best_t) {
            best_t = t;
            best = static_cast<int>(i);
        }
    }
    return best;
}

int CacheWorld::lfu_slot(int bs) const {
    const BsState& s = bs_[static_cast<std::size_t>(bs)];
    if (s.contents.empty()) throw DomainError("lfu_slot: cache is empty");
    int best = 0;
    long long best_n = std::numeric_limits<long long>::max();
    for (std::size_t i = 0; i < s.contents.size(); ++i) {
        long long n = s.use_count.at(s.contents[i]);
        if (n < best_n) {
            best_n = n;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double CacheWorld::demand_estimate(int content) const {
    if (twin_ && twin_->trained) {
        int W = twin_->model.window;
        std::vector<double> in(static_cast<std::size_t>(W), twin_->norm.norm(0.0));
        auto it = content_windows_.find(content);
        if (it != content_windows_.end()) {
            const auto& hist = it->second;
            std::size_t n = hist.size();
            for (std::size_t i = 0; i < n && i < static_cast<std::size_t>(W); ++i)
                in[static_cast<std::size_t>(W) - 1 - i] = twin_->norm.norm(hist[n - 1 - i]);
        }
        return twin_->norm.denorm(predict(twin_->model, in));
    }
    auto it = recent_counts_.find(content);
    return it == recent_counts_.end() ? 0.0 : static_cast<double>(it->second);
}

int CacheWorld::lowest_demand_slot(int bs) const {
    const BsState& s = bs_[static_cast<std::size_t>(bs)];
    if (s.contents.empty()) throw DomainError("lowest_demand_slot: cache is empty");
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < s.contents.size(); ++i) {
        double d = demand_estimate(s.contents[i]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

int CacheWorld::state_index(const RequestEvent& ev) const {
    double avg = recent_requests_.empty()
                     ? 0.0
                     : static_cast<double>(recent_requests_.size()) / cfg_.catalog_size;
    auto it = recent_counts_.find(ev.content_id);
    double c = it == recent_counts_.end() ? 0.0 : static_cast<double>(it->second);
    int pop = (c <= 0.5 * avg || c == 0.0) ? 0 : (c >= 2.0 * avg ? 2 : 1);

    int size = static_cast<int>(bs_[static_cast<std::size_t>(ev.serving_bs)].contents.size());
    int occ = size < CacheTopology::kSlotsPerBs / 2 ? 0
              : size < CacheTopology::kSlotsPerBs  ? 1
                                                   : 2;

    double r = load_ratio(ev.serving_bs);
    int load = r < 1.0 ? 0 : (r < cfg_.theta ? 1 : 2);
    return pop * 9 + occ * 3 + load;
}

void CacheWorld::trim_windows() {
    for (auto& s : bs_)
        while (!s.served_times.empty() && s.served_times.front() <= now_ - cfg_.load_window)
            s.served_times.pop_front();
    while (!recent_requests_.empty() && recent_requests_.front().first <= now_ - cfg_.load_window) {
        auto it = recent_counts_.find(recent_requests_.front().second);
        if (--it->second == 0) recent_counts_.erase(it);
        recent_requests_.pop_front();
    }
}

void CacheWorld::note_request(const RequestEvent& ev) {
    // Roll per-content count windows when crossing a window boundary.
    long long win = ev.time / cfg_.count_window;
    while (window_epoch_ < win) {
        for (auto it = content_windows_.begin(); it != content_windows_.end();) {
            auto& dq = it->second;
            dq.push_back(0.0);
            while (static_cast<int>(dq.size()) > cfg_.twin_window) dq.pop_front();
            bool all_zero = true;
            for (double v : dq)
                if (v != 0.0) all_zero = false;
            it = all_zero ? content_windows_.erase(it) : std::next(it);
        }
        ++window_epoch_;
    }
    auto& dq = content_windows_[ev.content_id];
    if (dq.empty()) dq.push_back(0.0);
    dq.back() += 1.0;

    now_ = ev.time;
    trim_windows();
    recent_requests_.emplace_back(ev.time, ev.content_id);
    ++recent_counts_[ev.content_id];
}

CacheWorld::StepResult CacheWorld::step(const RequestEvent& ev, int victim_slot,
                                        const SafetyShield& shield) {
    if (ev.serving_bs < 0 || ev.serving_bs >= CacheTopology::kNumBs)
        throw DomainError("step: bad serving BS");
    note_request(ev);

    BsState& s = bs_[static_cast<std::size_t>(ev.serving_bs)];
    StepResult res;
    res.hit = s.last_used.count(ev.content_id) > 0;

    if (res.hit) {
        s.last_used[ev.content_id] = serve_counter_;
        ++s.use_count[ev.content_id];
    } else {
        if (victim_slot >= 0) {
            if (victim_slot >= static_cast<int>(s.contents.size()))
                throw DomainError("step: eviction index out of range");
            int victim = s.contents[static_cast<std::size_t>(victim_slot)];
            s.contents.erase(s.contents.begin() + victim_slot);
            s.last_used.erase(victim);
            s.use_count.erase(victim);
        } else if (static_cast<int>(s.contents.size()) >= CacheTopology::kSlotsPerBs) {
            throw DomainError("step: cache full but no eviction victim given");
        }
        s.contents.push_back(ev.content_id);
        s.last_used[ev.content_id] = serve_counter_;
        s.use_count[ev.content_id] = 1;
    }
    ++serve_counter_;
    s.served_times.push_back(ev.time);
    ++s.total_served;

    res.reward = res.hit ? 1.0 : 0.0;
    if (shield.enabled) {
        double ratio = load_ratio(ev.serving_bs);
        res.reward -= shield.rho * std::max(0.0, ratio - shield.theta);
    }
    return res;
}

CacheWorld::StepResult step_env(CacheWorld& world, const RequestEvent& ev, int victim_slot,
                                const SafetyShield& shield) {
    return world.step(ev, victim_slot, shield);
}

std::pair<int, bool> safety_shield(const CacheWorld& world, const RequestEvent& ev,
                                   int proposed_victim, SafetyShield& shield) {
    if (!shield.enabled) return {proposed_victim, false};
    if (world.cached(ev.serving_bs, ev.content_id)) return {proposed_victim, false};
    if (world.cache(ev.serving_bs).empty()) return {proposed_victim, false};

    // Prospective window load ratio once this request is served.
    long long total = 0;
    for (int b = 0; b < CacheTopology::kNumBs; ++b) total += world.window_load(b);
    double mean = static_cast<double>(total + 1) / CacheTopology::kNumBs;
    double ratio = static_cast<double>(world.window_load(ev.serving_bs) + 1) / mean;
    if (ratio <= shield.theta) return {proposed_victim, false};

    ++shield.intervention_count;
    return {world.lru_slot(ev.serving_bs), true};
}

// ---------------------------------------------------------------------------
// Policies

namespace {

int choose_action(const CachePolicy& policy, int state, bool learn, double epsilon, Rng& rng) {
    if (learn && rng.uniform() < epsilon)
        return static_cast<int>(rng.uniform_int(0, CacheWorld::kActions - 1));
    const double* row = policy.q.data() + static_cast<std::size_t>(state) * CacheWorld::kActions;
    double best = row[0];
    for (int a = 1; a < CacheWorld::kActions; ++a) best = std::max(best, row[a]);
    int candidates[CacheWorld::kActions];
    int n = 0;
    for (int a = 0; a < CacheWorld::kActions; ++a)
        if (row[a] == best) candidates[n++] = a;
    if (n == 1) return candidates[0];
    return candidates[rng.uniform_int(0, n - 1)];
}

int slot_for_action(const CacheWorld& world, int bs, int action) {
    switch (action) {
        case 0: return world.lru_slot(bs);
        case 1: return world.lfu_slot(bs);
        case 2: return world.lowest_demand_slot(bs);
        default: throw DomainError("slot_for_action: unknown action");
    }
}

struct EpisodeStats {
    long long hits = 0;
    long long requests = 0;
};

// Decisions are eviction choices (miss with a full cache); the reward between
// consecutive decisions accrues to the earlier one.
EpisodeStats run_episode(CacheWorld& world, const std::vector<RequestEvent>& events,
                         CachePolicy& policy, bool learn, SafetyShield& shield,
                         const CacheConfig& cfg, Rng& rng) {
    EpisodeStats stats;
    bool is_rl = policy.variant != CacheVariant::lru && policy.variant != CacheVariant::lfu;
    bool pending = false;
    int pend_state = 0, pend_action = 0;
    double pend_reward = 0;

    for (const RequestEvent& ev : events) {
        int victim = -1;
        bool decide = !world.cached(ev.serving_bs, ev.content_id) && world.cache_full(ev.serving_bs);
        int state = 0, action = 0;
        if (decide) {
            if (is_rl) {
                state = world.state_index(ev);
                action = choose_action(policy, state, learn, cfg.epsilon, rng);
                victim = slot_for_action(world, ev.serving_bs, action);
            } else {
                victim = policy.variant == CacheVariant::lru ? world.lru_slot(ev.serving_bs)
                                                             : world.lfu_slot(ev.serving_bs);
            }
        }
        auto [final_victim, intervened] = safety_shield(world, ev, victim, shield);
        (void)intervened;
        CacheWorld::StepResult res = world.step(ev, final_victim, shield);

        ++stats.requests;
        if (res.hit) ++stats.hits;

        if (is_rl && learn) {
            if (decide) {
                if (pending) {
                    double* row = policy.q.data() + static_cast<std::size_t>(pend_state) * CacheWorld::kActions;
                    const double* next = policy.q.data() + static_cast<std::size_t>(state) * CacheWorld::kActions;
                    double next_best = std::max({next[0], next[1], next[2]});
                    row[pend_action] += cfg.alpha * (pend_reward + cfg.gamma * next_best - row[pend_action]);
                }
                pending = true;
                pend_state = state;
                pend_action = action;
                pend_reward = res.reward;
            } else if (pending) {
                pend_reward += res.reward;
            }
        }
    }
    if (is_rl && learn && pending) {
        double* row = policy.q.data() + static_cast<std::size_t>(pend_state) * CacheWorld::kActions;
        row[pend_action] += cfg.alpha * (pend_reward - row[pend_action]);
    }
    return stats;
}

}  // namespace

CachePolicy train_policy(const CacheConfig& cfg, CacheVariant variant, int episodes,
                         std::uint64_t seed) {
    if (episodes < 0) throw ConfigError("train_policy: episodes must be >= 0");
    CachePolicy policy;
    policy.variant = variant;
    policy.seed = seed;
    if (variant == CacheVariant::lru || variant == CacheVariant::lfu) return policy;

    policy.q.assign(static_cast<std::size_t>(CacheWorld::kStates) * CacheWorld::kActions, 0.0);

    CacheTopology topo = CacheTopology::make(cfg.n_dual);
    if (variant_uses_twin(variant)) {
        int history_steps = std::max(cfg.count_window * (cfg.twin_window + 4) * 4, 2000);
        auto history = simulate_request_stream(topo, cfg, Rng::mix(seed, Rng::hash_name("cache/history")),
                                               history_steps);
        policy.twin = train_demand_twin(history, cfg);
    }

    for (int e = 0; e < episodes; ++e) {
        std::vector<RequestEvent> events;
        if (variant_uses_twin(variant) && e % 2 == 1) {
            int history_steps = std::max(cfg.count_window * (cfg.twin_window + 4) * 2, 1000);
            auto history = simulate_request_stream(
                topo, cfg, Rng::mix(seed, Rng::hash_name("cache/history")), history_steps);
            events = twin_generate(*policy.twin, topo, cfg, history,
                                   cfg.episode_steps * topo.n_clients(), cfg.rare_rate,
                                   Rng::mix(seed, Rng::hash_name("cache/dnt-episode") + static_cast<std::uint64_t>(e)))
                         .events;
        } else {
            events = simulate_request_stream(
                topo, cfg, Rng::mix(seed, Rng::hash_name("cache/episode") + static_cast<std::uint64_t>(e)),
                cfg.episode_steps);
        }
        CacheWorld world(topo, cfg, policy.twin ? &*policy.twin : nullptr);
        SafetyShield shield{cfg.theta, cfg.rho, variant_uses_shield(variant), 0};
        Rng rng = Rng::substream(seed, "cache/learn", static_cast<std::uint64_t>(e));
        run_episode(world, events, policy, true, shield, cfg, rng);
    }
    return policy;
}

CachingReport evaluate_caching(const CachePolicy& policy, const CacheConfig& cfg,
                               const std::vector<RequestEvent>& events) {
    CacheTopology topo = CacheTopology::make(cfg.n_dual);
    CacheWorld world(topo, cfg, policy.twin ? &*policy.twin : nullptr);
    SafetyShield shield{cfg.theta, cfg.rho, variant_uses_shield(policy.variant), 0};
    Rng rng = Rng::substream(policy.seed, "cache/eval");
    CachePolicy mutable_policy = policy;  // run_episode takes a mutable policy; learning is off
    EpisodeStats stats = run_episode(world, events, mutable_policy, false, shield, cfg, rng);

    CachingReport rep;
    rep.variant = policy.variant;
    rep.hits = stats.hits;
    rep.requests = stats.requests;
    rep.hit_rate = stats.requests > 0 ? static_cast<double>(stats.hits) / static_cast<double>(stats.requests) : 0.0;
    rep.interventions = shield.intervention_count;
    double mean = 0;
    for (int b = 0; b < CacheTopology::kNumBs; ++b) {
        rep.bs_loads[static_cast<std::size_t>(b)] = static_cast<double>(world.total_served(b));
        mean += rep.bs_loads[static_cast<std::size_t>(b)];
    }
    mean /= CacheTopology::kNumBs;
    double var = 0;
    for (double l : rep.bs_loads) var += (l - mean) * (l - mean);
    var /= CacheTopology::kNumBs;
    rep.load_cv = mean > 0 ? std::sqrt(var) / mean : 0.0;
    return rep;
}

std::vector<CachingReport> run_cache_sim(const CacheConfig& cfg,
                                         const std::vector<CacheVariant>& variants) {
    CacheTopology topo = CacheTopology::make(cfg.n_dual);
    auto eval_stream = simulate_request_stream(
        topo, cfg, Rng::mix(cfg.seed, Rng::hash_name("cache/eval-stream")), cfg.eval_steps);

    std::vector<CachingReport> out;
    for (CacheVariant v : variants) {
        CachePolicy policy = train_policy(cfg, v, cfg.episodes, cfg.seed);
        out.push_back(evaluate_caching(policy, cfg, eval_stream));
    }
    return out;
}

}  // namespace dnt
