#include "dnt/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dnt/rng.hpp"

namespace fs = std::filesystem;

namespace dnt {

PhysicalNetwork build_network(const ExperimentConfig& cfg) {
    NetworkConfig nc;
    nc.rows = cfg.grid_rows;
    nc.cols = cfg.grid_cols;
    return build_physical_network(nc);
}

TrafficDataset acquire_dataset(const ExperimentConfig& cfg, const PhysicalNetwork& net) {
    if (!cfg.traffic_csv.empty()) return load_traffic_csv(cfg.traffic_csv);
    return generate_synthetic_traffic(net, cfg.seed, cfg.horizon, cfg.profile);
}

FedConfig make_fed_config(const ExperimentConfig& cfg) {
    FedConfig fed;
    fed.window = cfg.window;
    fed.learning_rate = cfg.learning_rate;
    fed.epochs = cfg.epochs;
    fed.beta = cfg.beta;
    fed.root_frac = cfg.root_frac;
    fed.maint_window = cfg.maint_window;
    fed.eval_window = cfg.eval_window;
    fed.seed = cfg.seed;
    return fed;
}

namespace {

QualityReport pooled_over_clusters(const std::vector<GlobalTwin>& twins,
                                   const std::vector<FedScenario>& scenarios,
                                   const FedConfig& fed) {
    std::vector<double> preds, truth;
    for (std::size_t c = 0; c < twins.size(); ++c) {
        collect_forecasts(twins[c].params, scenarios[c], fed, scenarios[c].maint_end,
                          scenarios[c].eval_end, preds, truth);
    }
    return quality_report(preds, truth);
}

FedScenario scenario_with_frozen_stats(const TrafficDataset& ds, const std::vector<int>& cells,
                                       const std::map<int, NormStats>& stats, int train_end,
                                       int maint_end, int eval_end) {
    FedScenario sc;
    sc.train_end = train_end;
    sc.maint_end = maint_end;
    sc.eval_end = eval_end;
    for (int cell : cells) {
        CellSeries cs;
        cs.cell_id = cell;
        cs.series = ds.values[ds.cell_index(cell)];
        cs.norm = stats.at(cell);
        sc.cells.push_back(std::move(cs));
    }
    return sc;
}

// Restrict the dataset to timestamps [0, t_end) for re-clustering on the
// data observed so far.
TrafficDataset dataset_prefix(const TrafficDataset& ds, int t_end) {
    TrafficDataset out;
    out.channel = ds.channel;
    out.cell_ids = ds.cell_ids;
    out.timestamps.assign(ds.timestamps.begin(), ds.timestamps.begin() + t_end);
    out.values.reserve(ds.values.size());
    for (const auto& row : ds.values)
        out.values.emplace_back(row.begin(), row.begin() + t_end);
    return out;
}

// Relabel `next` so each new cluster keeps the old label it overlaps most.
ClusterAssignment stabilize_labels(const ClusterAssignment& prev, ClusterAssignment next) {
    int k = next.k;
    std::vector<std::vector<long long>> overlap(static_cast<std::size_t>(k),
                                                std::vector<long long>(static_cast<std::size_t>(k), 0));
    for (const auto& [cell, nc] : next.assignment) {
        auto it = prev.assignment.find(cell);
        if (it != prev.assignment.end() && it->second < k)
            ++overlap[static_cast<std::size_t>(nc)][static_cast<std::size_t>(it->second)];
    }
    std::vector<int> relabel(static_cast<std::size_t>(k), -1);
    std::set<int> used;
    for (int step = 0; step < k; ++step) {
        long long best = -1;
        int bi = -1, bj = -1;
        for (int i = 0; i < k; ++i) {
            if (relabel[static_cast<std::size_t>(i)] >= 0) continue;
            for (int j = 0; j < k; ++j) {
                if (used.count(j)) continue;
                if (overlap[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > best) {
                    best = overlap[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    bi = i;
                    bj = j;
                }
            }
        }
        relabel[static_cast<std::size_t>(bi)] = bj;
        used.insert(bj);
    }
    ClusterAssignment out = next;
    for (auto& [cell, c] : out.assignment) c = relabel[static_cast<std::size_t>(c)];
    std::vector<std::array<double, 4>> cents(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        cents[static_cast<std::size_t>(relabel[static_cast<std::size_t>(i)])] = next.centroids[static_cast<std::size_t>(i)];
    out.centroids = std::move(cents);
    return out;
}

}  // namespace

VtwinRun run_vtwin_experiment(const ExperimentConfig& cfg, const PhysicalNetwork& net,
                              const TrafficDataset& dataset, int k_override) {
    int k = k_override > 0 ? k_override : cfg.k;
    VtwinRun run;
    run.clusters = cluster_cells(net, dataset_prefix(dataset, static_cast<int>(cfg.train_frac *
                                                                               static_cast<double>(dataset.timestamps.size()))),
                                 k, cfg.seed, cfg.recluster_period);

    FedConfig fed = make_fed_config(cfg);
    AggregationRule rule = AggregationRule::from_name(cfg.rule, cfg.tau);

    auto groups = run.clusters.members();
    for (int c = 0; c < k; ++c) {
        FedScenario sc = make_scenario(dataset, groups[static_cast<std::size_t>(c)], cfg.train_frac,
                                       cfg.maint_frac);
        for (const CellSeries& cs : sc.cells) run.norm_stats[cs.cell_id] = cs.norm;
        std::vector<TimelinePoint> timeline;
        GlobalTwin twin = run_vtwin(sc, cfg.vtwin_rounds, rule, fed, c, {}, &timeline);
        run.twins.push_back(std::move(twin));
        run.timelines.push_back(std::move(timeline));
        run.scenarios.push_back(std::move(sc));
    }
    run.pooled_eval = pooled_over_clusters(run.twins, run.scenarios, fed);
    return run;
}

HtwinRun run_htwin_experiment(const ExperimentConfig& cfg, const PhysicalNetwork& net,
                              const TrafficDataset& dataset, const VtwinRun& base) {
    FedConfig fed = make_fed_config(cfg);
    AggregationRule rule = AggregationRule::from_name(cfg.rule, cfg.tau);

    int horizon = static_cast<int>(dataset.timestamps.size());
    int train_end = base.scenarios.at(0).train_end;
    int maint_end = base.scenarios.at(0).maint_end;
    int total_batches = cfg.htwin_batches;
    if (total_batches < 1) throw ConfigError("htwin: htwin_batches must be >= 1");
    int maint_span = maint_end - train_end;

    HtwinRun run;
    run.twins = base.twins;
    for (GlobalTwin& t : run.twins) t.ledger.clear();  // maintenance-phase cost only
    run.timelines.assign(run.twins.size(), {});
    ClusterAssignment clusters = base.clusters;

    int period = cfg.recluster_period > 0 ? cfg.recluster_period : total_batches;
    int done = 0, segment = 0;
    while (done < total_batches) {
        int seg_batches = std::min(period, total_batches - done);
        int seg_lo = train_end + static_cast<int>(static_cast<long long>(done) * maint_span / total_batches);
        int seg_hi = train_end + static_cast<int>(static_cast<long long>(done + seg_batches) * maint_span /
                                                  total_batches);

        auto groups = clusters.members();
        for (int c = 0; c < clusters.k; ++c) {
            const auto& cells = groups[static_cast<std::size_t>(c)];
            if (cells.empty()) continue;
            FedScenario sc = scenario_with_frozen_stats(dataset, cells, base.norm_stats, seg_lo,
                                                        seg_hi, horizon);
            AsyncSchedule sched = AsyncSchedule::make(
                static_cast<int>(cells.size()), seg_batches * cfg.htwin_batch_size,
                cfg.htwin_batch_size,
                Rng::mix(cfg.seed, Rng::hash_name("htwin/segment") +
                                        static_cast<std::uint64_t>(segment) * 131 +
                                        static_cast<std::uint64_t>(c)));
            TwinTimeline tl = run_htwin(std::move(run.twins[static_cast<std::size_t>(c)]), sc, sched, rule, fed);
            run.twins[static_cast<std::size_t>(c)] = std::move(tl.twin);
            auto& dst = run.timelines[static_cast<std::size_t>(c)];
            dst.insert(dst.end(), tl.points.begin(), tl.points.end());
        }

        done += seg_batches;
        ++segment;
        if (done < total_batches && clusters.k > 1) {
            ClusterAssignment next =
                cluster_cells(net, dataset_prefix(dataset, seg_hi), clusters.k, cfg.seed,
                              cfg.recluster_period);
            clusters = stabilize_labels(clusters, next);
        }
    }
    run.final_clusters = clusters;

    for (const GlobalTwin& t : run.twins) run.phase_cost += t.cost();

    // Traditional one-shot remap: every raw record of the maintenance period
    // is uploaded and one central training pass covers the same data.
    std::vector<CostEvent> central;
    long long n_cells = static_cast<long long>(dataset.cell_ids.size());
    central.push_back(CostEvent{CostEvent::Kind::raw_upload, n_cells * maint_span, 0});
    long long central_windows = 0;
    for (long long i = 0; i < n_cells; ++i)
        central_windows += std::max(0, maint_span - cfg.window);
    central.push_back(CostEvent{CostEvent::Kind::compute, cfg.epochs, central_windows});
    run.centralized_baseline = cost_accounting(central);

    // Final pooled held-out evaluation with the original cluster scenarios.
    auto groups = clusters.members();
    std::vector<FedScenario> eval_scenarios;
    for (int c = 0; c < clusters.k; ++c) {
        eval_scenarios.push_back(scenario_with_frozen_stats(dataset, groups[static_cast<std::size_t>(c)],
                                                            base.norm_stats, train_end, maint_end,
                                                            horizon));
    }
    run.pooled_eval = pooled_over_clusters(run.twins, eval_scenarios, fed);
    return run;
}

AttackEvalPlan build_attack_plan(const ExperimentConfig& cfg) {
    ExperimentConfig small = cfg;
    small.grid_rows = cfg.attack_grid_rows;
    small.grid_cols = cfg.attack_grid_cols;

    PhysicalNetwork net = build_network(small);
    TrafficDataset ds = acquire_dataset(small, net);

    std::vector<int> all_cells;
    for (const auto& o : net.objects) all_cells.push_back(o.id);

    AttackEvalPlan plan;
    plan.scenario = make_scenario(ds, all_cells, cfg.train_frac, cfg.maint_frac);
    plan.fed = make_fed_config(cfg);
    plan.vtwin_rounds = cfg.attack_vtwin_rounds;
    plan.htwin_batches = cfg.attack_htwin_batches;
    plan.tid_rule = AggregationRule{AggregationRule::Kind::tid, cfg.tau};
    plan.seed = cfg.seed;

    int n_auth = static_cast<int>(all_cells.size());
    int dim = cfg.window + 1;
    plan.mpaf = default_mpaf(n_auth, dim, cfg.seed);
    plan.tpi = default_tpi(n_auth, dim, cfg.seed);
    if (cfg.mpaf_n_fake >= 0) plan.mpaf.n_fake = cfg.mpaf_n_fake;
    if (cfg.tpi_n_fake >= 0) plan.tpi.n_fake = cfg.tpi_n_fake;
    plan.mpaf.lambda = cfg.lambda;
    plan.tpi.lambda = cfg.lambda;
    plan.tpi.clip_c = cfg.clip_c;
    plan.tpi.stagger_gamma = cfg.stagger_gamma;
    return plan;
}

std::vector<AttackEvalResult> run_attack_experiment(const ExperimentConfig& cfg) {
    AttackEvalPlan plan = build_attack_plan(cfg);
    std::vector<AggregationRule::Kind> rules = {
        AggregationRule::Kind::mean, AggregationRule::Kind::median, AggregationRule::Kind::fltrust,
        AggregationRule::Kind::tid};
    std::vector<AttackConfig::Kind> attacks = {AttackConfig::Kind::none, AttackConfig::Kind::mpaf,
                                               AttackConfig::Kind::tpi};
    return run_attack_eval(plan, rules, attacks);
}

std::vector<CachingReport> run_cache_experiment(const ExperimentConfig& cfg) {
    CacheConfig cc = cfg.cache;
    cc.seed = cfg.seed;
    std::vector<CacheVariant> variants = {CacheVariant::lru,         CacheVariant::lfu,
                                          CacheVariant::rl,          CacheVariant::rl_dnt,
                                          CacheVariant::reliable_rl, CacheVariant::reliable_rl_dnt};
    return run_cache_sim(cc, variants);
}

void write_report(const std::string& run_dir) {
    fs::path dir(run_dir);
    if (!fs::is_directory(dir)) throw IoError("report: '" + run_dir + "' is not a directory");

    nlohmann::ordered_json summary;
    std::ostringstream text;
    bool found_any = false;

    auto costs_path_v = dir / "costs_vtwin.csv";
    auto costs_path_h = dir / "costs_htwin.csv";
    std::vector<std::pair<std::string, CostReport>> cost_rows;
    for (const auto& p : {costs_path_v, costs_path_h}) {
        if (!fs::exists(p)) continue;
        found_any = true;
        auto rows = read_cost_csv(p.string());
        cost_rows.insert(cost_rows.end(), rows.begin(), rows.end());
    }
    if (!cost_rows.empty()) {
        text << "== Cost ledgers ==\n";
        for (const auto& [phase, r] : cost_rows) {
            text << phase << ": comm=" << fmt_double(r.comm_units)
                 << " raw=" << fmt_double(r.raw_data_units)
                 << " compute=" << fmt_double(r.compute_units)
                 << " total=" << fmt_double(r.total()) << "\n";
            summary["costs"][phase] = {{"comm_units", r.comm_units},
                                       {"raw_data_units", r.raw_data_units},
                                       {"compute_units", r.compute_units},
                                       {"total", r.total()}};
        }
        const CostReport* cand = nullptr;
        const CostReport* base = nullptr;
        for (const auto& [phase, r] : cost_rows) {
            if (phase == "htwin") cand = &r;
            if (phase == "centralized_baseline") base = &r;
        }
        if (cand && base) {
            double red = cost_reduction(*cand, *base);
            text << "cost_reduction(htwin vs centralized_baseline) = " << fmt_double(red) << "%\n";
            summary["cost_reduction_percent"] = red;
        }
        text << "\n";
    }

    auto attack_path = dir / "attack_eval.csv";
    if (fs::exists(attack_path)) {
        found_any = true;
        auto rows = read_attack_results_csv(attack_path.string());
        text << "== Attack evaluation ==\n" << format_attack_table(rows) << "\n";
        for (const auto& r : rows) {
            AggregationRule rule;
            rule.kind = r.rule;
            summary["attack_eval"].push_back({{"phase", AttackEvalResult::phase_name(r.phase)},
                                              {"rule", rule.name()},
                                              {"attack", AttackConfig::kind_name(r.attack)},
                                              {"mae", r.mae},
                                              {"mse", r.mse}});
        }
    }

    auto cache_path = dir / "cache_report.csv";
    if (fs::exists(cache_path)) {
        found_any = true;
        auto rows = read_cache_reports_csv(cache_path.string());
        text << "== Edge caching ==\n";
        for (const auto& r : rows) {
            text << variant_name(r.variant) << ": hit_rate=" << fmt_double(r.hit_rate)
                 << " interventions=" << r.interventions << " load_cv=" << fmt_double(r.load_cv)
                 << "\n";
            summary["caching"].push_back({{"variant", variant_name(r.variant)},
                                          {"hit_rate", r.hit_rate},
                                          {"interventions", r.interventions},
                                          {"load_cv", r.load_cv}});
        }
        text << "\n";
    }

    std::vector<std::string> timeline_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.find("timeline") != std::string::npos && name.ends_with(".csv"))
            timeline_files.push_back(name);
    }
    std::sort(timeline_files.begin(), timeline_files.end());
    if (!timeline_files.empty()) {
        found_any = true;
        text << "== Timelines ==\n";
        for (const auto& name : timeline_files) {
            std::ifstream in(dir / name);
            std::string line, last;
            std::getline(in, line);  // header
            while (std::getline(in, line))
                if (!line.empty()) last = line;
            text << name << ": final " << last << "\n";
            summary["timelines"][name] = last;
        }
        text << "\n";
    }

    if (!found_any)
        throw IoError(
            "report: no artifacts found in '" + run_dir +
            "'; expected one of costs_vtwin.csv, costs_htwin.csv, attack_eval.csv, "
            "cache_report.csv or *timeline*.csv");

    std::ofstream txt(dir / "summary.txt", std::ios::binary);
    txt << text.str();
    std::ofstream js(dir / "summary.json", std::ios::binary);
    js << summary.dump(2) << "\n";
}

}  // namespace dnt
