#pragma once

#include <map>
#include <string>
#include <vector>

#include "dnt/caching.hpp"
#include "dnt/fedsync.hpp"
#include "dnt/threat.hpp"

namespace dnt {

// Shortest round-trip decimal representation; keeps emitted files
// deterministic and re-loadable bit-exactly.
std::string fmt_double(double v);

// Twin checkpoint: little-endian header (cluster_id i32, version i64, W i32)
// followed by the length-prefixed parameter vector (u64 count + f64 values).
void write_checkpoint(const std::string& path, int cluster_id, long long version,
                      const ParameterVector& params);

struct Checkpoint {
    int cluster_id = 0;
    long long version = 0;
    int window = 0;
    ParameterVector params;
};
Checkpoint read_checkpoint(const std::string& path);

void write_timeline_csv(const std::string& path, const std::vector<TimelinePoint>& points);

void write_cluster_csv(const std::string& path, const ClusterAssignment& clusters);
ClusterAssignment read_cluster_csv(const std::string& path);

void write_norm_stats_csv(const std::string& path, const std::map<int, NormStats>& stats);
std::map<int, NormStats> read_norm_stats_csv(const std::string& path);

void write_cost_csv(const std::string& path, const std::vector<std::pair<std::string, CostReport>>& rows);
std::vector<std::pair<std::string, CostReport>> read_cost_csv(const std::string& path);

void write_attack_results_csv(const std::string& path, const std::vector<AttackEvalResult>& rows);
std::vector<AttackEvalResult> read_attack_results_csv(const std::string& path);

// Aligned text table with one rule per block and V-twin / H-twin column
// groups, mirroring the benchmark layout.
std::string format_attack_table(const std::vector<AttackEvalResult>& rows);

void write_cache_reports_csv(const std::string& path, const std::vector<CachingReport>& reports);
std::vector<CachingReport> read_cache_reports_csv(const std::string& path);

}  // namespace dnt
