#pragma once

#include <map>
#include <string>
#include <vector>

#include "dnt/config.hpp"
#include "dnt/io.hpp"
#include "dnt/threat.hpp"

namespace dnt {

PhysicalNetwork build_network(const ExperimentConfig& cfg);

// Synthetic generation from the profile, or CSV ingestion when configured.
TrafficDataset acquire_dataset(const ExperimentConfig& cfg, const PhysicalNetwork& net);

FedConfig make_fed_config(const ExperimentConfig& cfg);

struct VtwinRun {
    ClusterAssignment clusters;
    std::map<int, NormStats> norm_stats;  // frozen from the training split
    std::vector<GlobalTwin> twins;        // one per cluster
    std::vector<std::vector<TimelinePoint>> timelines;
    std::vector<FedScenario> scenarios;
    QualityReport pooled_eval;  // all cells, held-out slice
};

// Full V-twin phase over every cluster. k_override = 1 realizes the
// no-clustering ablation.
VtwinRun run_vtwin_experiment(const ExperimentConfig& cfg, const PhysicalNetwork& net,
                              const TrafficDataset& dataset, int k_override = -1);

struct HtwinRun {
    ClusterAssignment final_clusters;
    std::vector<GlobalTwin> twins;
    std::vector<std::vector<TimelinePoint>> timelines;  // per cluster
    CostReport phase_cost;            // maintenance-phase ledger only
    CostReport centralized_baseline;  // raw re-upload + one central pass
    QualityReport pooled_eval;
};

// Asynchronous maintenance continuing from a V-twin run, re-clustering every
// recluster_period batches (cluster labels kept stable by member overlap).
HtwinRun run_htwin_experiment(const ExperimentConfig& cfg, const PhysicalNetwork& net,
                              const TrafficDataset& dataset, const VtwinRun& base);

// Builds the small-grid scenario and the attacker presets for the result grid.
AttackEvalPlan build_attack_plan(const ExperimentConfig& cfg);

std::vector<AttackEvalResult> run_attack_experiment(const ExperimentConfig& cfg);

std::vector<CachingReport> run_cache_experiment(const ExperimentConfig& cfg);

// Merges the CSV artifacts of a run directory into summary.txt/summary.json;
// emits a cost_reduction line when maintenance and centralized ledgers exist.
void write_report(const std::string& run_dir);

}  // namespace dnt
