#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dnt/fedsync.hpp"

namespace dnt {

// Attacker-side parameters. Crafting functions may read only the current
// global model plus attacker-local state (base_model / attacker_init and
// estimates derived from them) — never authentic clients' data or updates.
struct AttackConfig {
    enum class Kind { none, mpaf, tpi };
    Kind kind = Kind::none;
    int n_fake = 0;
    double lambda = 10.0;
    double clip_c = 2.0;
    // Fakes share the attack direction but ramp in magnitude,
    // lambda_j = lambda * (j / n_fake)^stagger_gamma for the j-th fake.
    // An identical bloc is the gamma -> 0 limit.
    double stagger_gamma = 1.5;
    ParameterVector base_model;     // MPAF target model
    ParameterVector attacker_init;  // TPI initial model

    static const char* kind_name(Kind k);
    static Kind kind_from_name(const std::string& name);
};

// Fabricated updates pushing the global model toward the attacker's base
// model: params = global + lambda * (base_model - global).
std::vector<ClientUpdate> craft_mpaf(const ParameterVector& global, const AttackConfig& cfg,
                                     long long mimic_sample_count);

// Traffic poisoning injection: a directional push toward attacker_init,
// clipped per dimension to +-clip_c * spread_estimate. spread_estimate must be
// derived from attacker_init and global only.
std::vector<ClientUpdate> craft_tpi(const ParameterVector& attacker_init,
                                    const ParameterVector& global, const AttackConfig& cfg,
                                    const std::vector<double>& spread_estimate,
                                    long long mimic_sample_count);

// Concatenates and deterministically shuffles so the aggregator cannot rely
// on update ordering.
void inject(std::vector<ClientUpdate>& round_updates, std::vector<ClientUpdate> attack_updates,
            std::uint64_t round_seed);

// Interceptor wiring an attack into a fedsync run. Fakes mimic the median
// authentic sample count and claim the current version as their base.
RoundInterceptor make_attack_interceptor(const AttackConfig& attack, std::uint64_t seed);

struct AttackEvalResult {
    enum class Phase { vtwin, htwin };
    Phase phase;
    AggregationRule::Kind rule;
    AttackConfig::Kind attack;
    double mae = 0.0;  // capped at 100.0
    double mse = 0.0;  // capped at 100.0
    double raw_mae = 0.0;
    double raw_mse = 0.0;

    static const char* phase_name(Phase p);
};

struct AttackEvalPlan {
    FedScenario scenario;
    FedConfig fed;
    int vtwin_rounds = 25;
    int htwin_batches = 25;
    AggregationRule tid_rule{AggregationRule::Kind::tid, 3.0};
    AttackConfig mpaf;
    AttackConfig tpi;
    std::uint64_t seed = 1;
};

// Attacker presets used by the default experiment grid.
AttackConfig default_mpaf(int n_authentic, int dim, std::uint64_t seed);
AttackConfig default_tpi(int n_authentic, int dim, std::uint64_t seed);

// Runs the full (phase x rule x attack) grid: the attack is active during the
// named phase only; H-twin rows continue from that rule's clean V-twin.
// Reported errors are capped at 100.0; raw values are kept alongside.
std::vector<AttackEvalResult> run_attack_eval(const AttackEvalPlan& plan,
                                              const std::vector<AggregationRule::Kind>& rules,
                                              const std::vector<AttackConfig::Kind>& attacks);

}  // namespace dnt
