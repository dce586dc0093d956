// dnt — digital network twin experiment runner.
//
// Subcommands: gen-data, cluster, vtwin, htwin, attack-eval, cache-sim, report.
// Every run is deterministic for a fixed config and seed; all randomness flows
// from the root seed through named sub-streams.

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dnt/experiment.hpp"

namespace fs = std::filesystem;
using namespace dnt;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = load_experiment_config(opts.config_path);
    if (opts.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opts.seed);
        cfg.cache.seed = cfg.seed;
    }
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    fs::create_directories(cfg.out_dir);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "root seed override");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

int cmd_gen_data(const ExperimentConfig& cfg) {
    PhysicalNetwork net = build_network(cfg);
    TrafficDataset ds = generate_synthetic_traffic(net, cfg.seed, cfg.horizon, cfg.profile);
    std::string path = (fs::path(cfg.out_dir) / "traffic.csv").string();
    write_traffic_csv(ds, path);
    std::cout << "wrote " << path << " (" << ds.cell_ids.size() * ds.timestamps.size() << " rows)\n";
    return 0;
}

int cmd_cluster(const ExperimentConfig& cfg) {
    PhysicalNetwork net = build_network(cfg);
    TrafficDataset ds = acquire_dataset(cfg, net);
    ClusterAssignment clusters = cluster_cells(net, ds, cfg.k, cfg.seed, cfg.recluster_period);
    std::string path = (fs::path(cfg.out_dir) / "clusters.csv").string();
    write_cluster_csv(path, clusters);
    std::cout << "wrote " << path << " (k=" << clusters.k << ")\n";
    return 0;
}

int cmd_vtwin(const ExperimentConfig& cfg, bool no_cluster) {
    Timer timer;
    PhysicalNetwork net = build_network(cfg);
    TrafficDataset ds = acquire_dataset(cfg, net);
    VtwinRun run = run_vtwin_experiment(cfg, net, ds, no_cluster ? 1 : -1);

    fs::path out(cfg.out_dir);
    write_cluster_csv((out / "clusters.csv").string(), run.clusters);
    write_norm_stats_csv((out / "norm_stats.csv").string(), run.norm_stats);
    std::vector<std::pair<std::string, CostReport>> costs;
    CostReport total;
    for (std::size_t c = 0; c < run.twins.size(); ++c) {
        write_checkpoint((out / ("vtwin_checkpoint_" + std::to_string(c) + ".bin")).string(),
                         run.twins[c].cluster_id, run.twins[c].version, run.twins[c].params);
        write_timeline_csv((out / ("vtwin_timeline_" + std::to_string(c) + ".csv")).string(),
                           run.timelines[c]);
        costs.emplace_back("vtwin_cluster_" + std::to_string(c), run.twins[c].cost());
        total += run.twins[c].cost();
    }
    costs.emplace_back("vtwin", total);
    write_cost_csv((out / "costs_vtwin.csv").string(), costs);

    std::cout << "vtwin: " << run.twins.size() << " cluster twin(s), pooled held-out MAE "
              << fmt_double(run.pooled_eval.mae) << " MSE " << fmt_double(run.pooled_eval.mse)
              << " (" << fmt_double(timer.seconds()) << " s)\n";
    return 0;
}

int cmd_htwin(const ExperimentConfig& cfg) {
    Timer timer;
    PhysicalNetwork net = build_network(cfg);
    TrafficDataset ds = acquire_dataset(cfg, net);

    fs::path out(cfg.out_dir);
    // Rebuild the V-twin state from the checkpoints of a prior vtwin run.
    VtwinRun base;
    base.clusters = read_cluster_csv((out / "clusters.csv").string());
    base.norm_stats = read_norm_stats_csv((out / "norm_stats.csv").string());
    auto groups = base.clusters.members();
    for (int c = 0; c < base.clusters.k; ++c) {
        Checkpoint cp = read_checkpoint((out / ("vtwin_checkpoint_" + std::to_string(c) + ".bin")).string());
        GlobalTwin twin;
        twin.cluster_id = cp.cluster_id;
        twin.version = cp.version;
        twin.params = cp.params;
        base.twins.push_back(std::move(twin));
        base.scenarios.push_back(make_scenario(ds, groups[static_cast<std::size_t>(c)],
                                               cfg.train_frac, cfg.maint_frac));
    }

    HtwinRun run = run_htwin_experiment(cfg, net, ds, base);
    std::vector<std::pair<std::string, CostReport>> costs;
    for (std::size_t c = 0; c < run.twins.size(); ++c) {
        write_checkpoint((out / ("htwin_checkpoint_" + std::to_string(c) + ".bin")).string(),
                         run.twins[c].cluster_id, run.twins[c].version, run.twins[c].params);
        write_timeline_csv((out / ("htwin_timeline_" + std::to_string(c) + ".csv")).string(),
                           run.timelines[c]);
    }
    costs.emplace_back("htwin", run.phase_cost);
    costs.emplace_back("centralized_baseline", run.centralized_baseline);
    write_cost_csv((out / "costs_htwin.csv").string(), costs);

    std::cout << "htwin: " << run.twins.size() << " cluster twin(s), pooled held-out MAE "
              << fmt_double(run.pooled_eval.mae) << ", phase cost "
              << fmt_double(run.phase_cost.total()) << " vs centralized "
              << fmt_double(run.centralized_baseline.total()) << " ("
              << fmt_double(timer.seconds()) << " s)\n";
    return 0;
}

int cmd_attack_eval(const ExperimentConfig& cfg) {
    Timer timer;
    auto rows = run_attack_experiment(cfg);
    fs::path out(cfg.out_dir);
    write_attack_results_csv((out / "attack_eval.csv").string(), rows);
    std::string table = format_attack_table(rows);
    std::ofstream tf(out / "attack_table.txt", std::ios::binary);
    tf << table;
    std::cout << table << "(" << fmt_double(timer.seconds()) << " s)\n";
    return 0;
}

int cmd_cache_sim(const ExperimentConfig& cfg) {
    Timer timer;
    auto reports = run_cache_experiment(cfg);
    fs::path out(cfg.out_dir);
    write_cache_reports_csv((out / "cache_report.csv").string(), reports);
    for (const auto& r : reports) {
        std::cout << variant_name(r.variant) << ": hit_rate " << fmt_double(r.hit_rate)
                  << ", interventions " << r.interventions << ", load_cv " << fmt_double(r.load_cv)
                  << "\n";
    }
    std::cout << "(" << fmt_double(timer.seconds()) << " s)\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    write_report(run_dir);
    std::cout << "wrote " << (fs::path(run_dir) / "summary.txt").string() << " and summary.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"digital network twin lifecycle simulator"};
    app.require_subcommand(1);

    CommonOpts gen_o, clu_o, vt_o, ht_o, at_o, ca_o;
    bool no_cluster = false;
    std::string report_dir;

    add_common(app.add_subcommand("gen-data", "generate a synthetic traffic CSV"), gen_o);
    add_common(app.add_subcommand("cluster", "cluster cells and write the assignment"), clu_o);
    auto* vt = app.add_subcommand("vtwin", "synchronous V-twin construction per cluster");
    add_common(vt, vt_o);
    vt->add_flag("--no-cluster", no_cluster, "skip clustering (single global twin)");
    add_common(app.add_subcommand("htwin", "asynchronous H-twin maintenance (needs vtwin outputs)"),
               ht_o);
    add_common(app.add_subcommand("attack-eval", "rules x attacks x phases result grid"), at_o);
    add_common(app.add_subcommand("cache-sim", "edge caching variants on a shared stream"), ca_o);
    auto* rp = app.add_subcommand("report", "merge run artifacts into a summary");
    rp->add_option("run_dir", report_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("gen-data")) return cmd_gen_data(resolve_config(gen_o));
        if (app.got_subcommand("cluster")) return cmd_cluster(resolve_config(clu_o));
        if (app.got_subcommand("vtwin")) return cmd_vtwin(resolve_config(vt_o), no_cluster);
        if (app.got_subcommand("htwin")) return cmd_htwin(resolve_config(ht_o));
        if (app.got_subcommand("attack-eval")) return cmd_attack_eval(resolve_config(at_o));
        if (app.got_subcommand("cache-sim")) return cmd_cache_sim(resolve_config(ca_o));
        if (app.got_subcommand("report")) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
