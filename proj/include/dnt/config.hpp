#pragma once

#include <cstdint>
#include <string>

#include "dnt/caching.hpp"
#include "dnt/network.hpp"

namespace dnt {

// Whole-experiment configuration, one section per subsystem. Unknown keys are
// rejected at load time so typos cannot silently fall back to defaults.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    // [network]
    int grid_rows = 10;
    int grid_cols = 10;
    int horizon = 1000;
    std::string traffic_csv;  // when set, ingest instead of generating
    TrafficProfile profile;

    // [clustering]
    int k = 4;
    int recluster_period = 20;

    // [forecaster]
    int window = 12;
    double learning_rate = 0.05;
    int epochs = 5;

    // [fedsync]
    int vtwin_rounds = 30;
    int htwin_batches = 50;
    int htwin_batch_size = 1;
    std::string rule = "Mean";
    double tau = 3.0;
    double beta = 0.5;
    double root_frac = 0.05;
    int maint_window = 120;
    int eval_window = 120;
    double train_frac = 0.6;
    double maint_frac = 0.2;

    // [attack] — the attack-eval scenario runs on its own small grid
    int attack_grid_rows = 4;
    int attack_grid_cols = 5;
    int attack_vtwin_rounds = 25;
    int attack_htwin_batches = 25;
    int mpaf_n_fake = -1;  // -1: 20% of the authentic count
    int tpi_n_fake = -1;   // -1: authentic count + 1
    double lambda = 10.0;
    double clip_c = 2.0;
    double stagger_gamma = 1.5;

    // [caching]
    CacheConfig cache;
};

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace dnt
