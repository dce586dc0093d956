#include "dnt/threat.hpp"

#include <algorithm>
#include <cmath>

#include "dnt/rng.hpp"

namespace dnt {

namespace {

// Fake client ids live far above any grid cell id.
constexpr int kFakeClientIdBase = 1'000'000;

long long median_sample_count(const std::vector<ClientUpdate>& updates) {
    std::vector<long long> counts;
    counts.reserve(updates.size());
    for (const ClientUpdate& u : updates)
        if (u.authentic) counts.push_back(u.sample_count);
    if (counts.empty()) return 0;
    std::sort(counts.begin(), counts.end());
    return counts[(counts.size() - 1) / 2];
}

}  // namespace

const char* AttackConfig::kind_name(Kind k) {
    switch (k) {
        case Kind::none: return "None";
        case Kind::mpaf: return "MPAF";
        case Kind::tpi: return "TPI";
    }
    throw DomainError("AttackConfig: unknown kind");
}

AttackConfig::Kind AttackConfig::kind_from_name(const std::string& name) {
    if (name == "None" || name == "none") return Kind::none;
    if (name == "MPAF" || name == "mpaf") return Kind::mpaf;
    if (name == "TPI" || name == "tpi") return Kind::tpi;
    throw ConfigError("unknown attack '" + name + "'");
}

const char* AttackEvalResult::phase_name(Phase p) {
    return p == Phase::vtwin ? "V-twin" : "H-twin";
}

std::vector<ClientUpdate> craft_mpaf(const ParameterVector& global, const AttackConfig& cfg,
                                     long long mimic_sample_count) {
    if (cfg.lambda <= 0) throw ConfigError("craft_mpaf: lambda must be positive");
    if (cfg.n_fake < 0) throw ConfigError("craft_mpaf: n_fake must be >= 0");
    if (cfg.n_fake == 0) return {};
    if (cfg.base_model.size() != global.size())
        throw DimensionError("craft_mpaf: base model dimension mismatch");

    ParameterVector fake(global.size());
    for (std::size_t d = 0; d < global.size(); ++d)
        fake[d] = global[d] + cfg.lambda * (cfg.base_model[d] - global[d]);

    std::vector<ClientUpdate> out;
    out.reserve(static_cast<std::size_t>(cfg.n_fake));
    for (int j = 0; j < cfg.n_fake; ++j) {
        ClientUpdate u;
        u.client_id = kFakeClientIdBase + j;
        u.params = fake;
        u.sample_count = mimic_sample_count;
        u.authentic = false;
        out.push_back(std::move(u));
    }
    return out;
}

std::vector<ClientUpdate> craft_tpi(const ParameterVector& attacker_init,
                                    const ParameterVector& global, const AttackConfig& cfg,
                                    const std::vector<double>& spread_estimate,
                                    long long mimic_sample_count) {
    if (cfg.lambda <= 0) throw ConfigError("craft_tpi: lambda must be positive");
    if (cfg.n_fake < 1) throw ConfigError("craft_tpi: n_fake must be >= 1");
    if (attacker_init.size() != global.size() || spread_estimate.size() != global.size())
        throw DimensionError("craft_tpi: dimension mismatch");

    ParameterVector direction(global.size());
    double dir_norm = 0;
    for (std::size_t d = 0; d < global.size(); ++d) {
        direction[d] = attacker_init[d] - global[d];
        dir_norm += direction[d] * direction[d];
    }
    if (dir_norm == 0) throw DomainError("craft_tpi: degenerate attack, attacker_init equals global");

    std::vector<ClientUpdate> out;
    out.reserve(static_cast<std::size_t>(cfg.n_fake));
    for (int j = 1; j <= cfg.n_fake; ++j) {
        double lambda_j =
            cfg.lambda * std::pow(static_cast<double>(j) / static_cast<double>(cfg.n_fake),
                                  cfg.stagger_gamma);
        ClientUpdate u;
        u.client_id = kFakeClientIdBase + j - 1;
        u.params.resize(global.size());
        for (std::size_t d = 0; d < global.size(); ++d) {
            double bound = cfg.clip_c * std::fabs(spread_estimate[d]);
            double push = std::clamp(lambda_j * direction[d], -bound, bound);
            u.params[d] = global[d] + push;
        }
        u.sample_count = mimic_sample_count;
        u.authentic = false;
        out.push_back(std::move(u));
    }
    return out;
}

void inject(std::vector<ClientUpdate>& round_updates, std::vector<ClientUpdate> attack_updates,
            std::uint64_t round_seed) {
    if (attack_updates.empty()) return;
    for (ClientUpdate& u : attack_updates) round_updates.push_back(std::move(u));
    Rng rng = Rng::substream(round_seed, "attack-shuffle");
    rng.shuffle(round_updates);
}

RoundInterceptor make_attack_interceptor(const AttackConfig& attack, std::uint64_t seed) {
    if (attack.kind == AttackConfig::Kind::none || attack.n_fake == 0) return {};
    AttackConfig cfg = attack;
    return [cfg, seed](const GlobalTwin& twin, long long round, std::vector<ClientUpdate>& updates) {
        long long mimic = median_sample_count(updates);
        std::vector<ClientUpdate> fakes;
        if (cfg.kind == AttackConfig::Kind::mpaf) {
            fakes = craft_mpaf(twin.params, cfg, mimic);
        } else {
            std::vector<double> spread(twin.params.size());
            for (std::size_t d = 0; d < twin.params.size(); ++d)
                spread[d] = std::fabs(cfg.attacker_init[d] - twin.params[d]);
            fakes = craft_tpi(cfg.attacker_init, twin.params, cfg, spread, mimic);
        }
        for (ClientUpdate& f : fakes) f.base_version = twin.version;
        inject(updates, std::move(fakes), Rng::mix(seed, static_cast<std::uint64_t>(round)));
    };
}

AttackConfig default_mpaf(int n_authentic, int dim, std::uint64_t seed) {
    AttackConfig cfg;
    cfg.kind = AttackConfig::Kind::mpaf;
    cfg.n_fake = std::max(1, static_cast<int>(std::llround(0.2 * n_authentic)));
    cfg.lambda = 10.0;
    Rng rng = Rng::substream(seed, "attack/mpaf-base");
    cfg.base_model.resize(static_cast<std::size_t>(dim));
    for (double& v : cfg.base_model) v = rng.normal(0.0, 0.05);
    return cfg;
}

AttackConfig default_tpi(int n_authentic, int dim, std::uint64_t seed) {
    AttackConfig cfg;
    cfg.kind = AttackConfig::Kind::tpi;
    cfg.n_fake = n_authentic + 1;  // low-cost fakes: a coordinated majority bloc
    cfg.lambda = 10.0;
    cfg.clip_c = 2.0;
    cfg.stagger_gamma = 1.5;
    Rng rng = Rng::substream(seed, "attack/tpi-init");
    cfg.attacker_init.resize(static_cast<std::size_t>(dim));
    for (double& v : cfg.attacker_init) v = rng.normal(0.0, 0.05);
    return cfg;
}

std::vector<AttackEvalResult> run_attack_eval(const AttackEvalPlan& plan,
                                              const std::vector<AggregationRule::Kind>& rules,
                                              const std::vector<AttackConfig::Kind>& attacks) {
    const FedScenario& sc = plan.scenario;
    int n_clients = static_cast<int>(sc.cells.size());

    auto rule_of = [&](AggregationRule::Kind k) {
        AggregationRule r;
        r.kind = k;
        r.tau = plan.tid_rule.tau;
        return r;
    };
    auto attack_of = [&](AttackConfig::Kind k) -> const AttackConfig* {
        switch (k) {
            case AttackConfig::Kind::none: return nullptr;
            case AttackConfig::Kind::mpaf: return &plan.mpaf;
            case AttackConfig::Kind::tpi: return &plan.tpi;
        }
        throw DomainError("run_attack_eval: unknown attack");
    };

    auto result_row = [&](AttackEvalResult::Phase phase, AggregationRule::Kind rule,
                          AttackConfig::Kind attack, const ParameterVector& params) {
        QualityReport q = evaluate_twin(params, sc, plan.fed);
        AttackEvalResult row;
        row.phase = phase;
        row.rule = rule;
        row.attack = attack;
        row.mae = q.mae;
        row.mse = q.mse;
        row.raw_mae = q.raw_mae;
        row.raw_mse = q.raw_mse;
        return row;
    };

    std::vector<AttackEvalResult> out;
    AsyncSchedule schedule = AsyncSchedule::make(
        n_clients, plan.htwin_batches * n_clients, n_clients, plan.seed);

    // V-twin phase: the attack is live while the twin is being constructed.
    for (AggregationRule::Kind rk : rules) {
        for (AttackConfig::Kind ak : attacks) {
            const AttackConfig* atk = attack_of(ak);
            RoundInterceptor hook =
                atk ? make_attack_interceptor(*atk, Rng::mix(plan.seed, Rng::hash_name("vtwin-attack")))
                    : RoundInterceptor{};
            GlobalTwin twin = run_vtwin(sc, plan.vtwin_rounds, rule_of(rk), plan.fed, 0, hook);
            out.push_back(result_row(AttackEvalResult::Phase::vtwin, rk, ak, twin.params));
        }
    }

    // H-twin phase: maintenance of the rule's clean V-twin under attack.
    for (AggregationRule::Kind rk : rules) {
        GlobalTwin clean = run_vtwin(sc, plan.vtwin_rounds, rule_of(rk), plan.fed, 0);
        for (AttackConfig::Kind ak : attacks) {
            const AttackConfig* atk = attack_of(ak);
            RoundInterceptor hook =
                atk ? make_attack_interceptor(*atk, Rng::mix(plan.seed, Rng::hash_name("htwin-attack")))
                    : RoundInterceptor{};
            TwinTimeline tl = run_htwin(clean, sc, schedule, rule_of(rk), plan.fed, hook);
            out.push_back(result_row(AttackEvalResult::Phase::htwin, rk, ak, tl.twin.params));
        }
    }
    return out;
}

}  // namespace dnt
