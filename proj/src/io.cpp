#include "dnt/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dnt {

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double_field(const std::string& s, const std::string& ctx) {
    double v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError(ctx + ": bad number '" + s + "'");
    return v;
}

long long parse_int_field(const std::string& s, const std::string& ctx) {
    long long v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError(ctx + ": bad integer '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> read_lines(const std::string& path, const std::string& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw SchemaError(path + ": expected header '" + expected_header + "'");
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_i32(std::ofstream& out, std::int32_t v) {
    unsigned char b[4];
    auto u = static_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw ParseError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::int32_t get_i32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ParseError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return static_cast<std::int32_t>(v);
}

}  // namespace

void write_checkpoint(const std::string& path, int cluster_id, long long version,
                      const ParameterVector& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    put_i32(out, cluster_id);
    put_u64(out, static_cast<std::uint64_t>(version));
    put_i32(out, static_cast<std::int32_t>(params.size()) - 1);
    put_u64(out, params.size());
    for (double v : params) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(out, bits);
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StateError("missing checkpoint '" + path + "'");
    Checkpoint cp;
    cp.cluster_id = get_i32(in);
    cp.version = static_cast<long long>(get_u64(in));
    cp.window = get_i32(in);
    std::uint64_t count = get_u64(in);
    cp.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t bits = get_u64(in);
        double v;
        std::memcpy(&v, &bits, 8);
        cp.params[i] = v;
    }
    if (cp.window != static_cast<int>(count) - 1)
        throw ParseError("checkpoint: header window disagrees with parameter count");
    return cp;
}

void write_timeline_csv(const std::string& path, const std::vector<TimelinePoint>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write timeline '" + path + "'");
    out << "version,mae,mse,nrmse,comm_cost,compute_cost\n";
    for (const TimelinePoint& p : points) {
        out << p.version << ',' << fmt_double(p.mae) << ',' << fmt_double(p.mse) << ','
            << fmt_double(p.nrmse) << ',' << fmt_double(p.comm_cost) << ','
            << fmt_double(p.compute_cost) << '\n';
    }
}

void write_cluster_csv(const std::string& path, const ClusterAssignment& clusters) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write clusters '" + path + "'");
    out << "cell_id,cluster\n";
    for (const auto& [cell, c] : clusters.assignment) out << cell << ',' << c << '\n';
}

ClusterAssignment read_cluster_csv(const std::string& path) {
    ClusterAssignment out;
    out.k = 0;
    for (const std::string& line : read_lines(path, "cell_id,cluster")) {
        auto f = split(line);
        if (f.size() != 2) throw ParseError(path + ": expected 2 fields");
        int cell = static_cast<int>(parse_int_field(f[0], path));
        int c = static_cast<int>(parse_int_field(f[1], path));
        out.assignment[cell] = c;
        out.k = std::max(out.k, c + 1);
    }
    return out;
}

void write_norm_stats_csv(const std::string& path, const std::map<int, NormStats>& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write norm stats '" + path + "'");
    out << "cell_id,lo,hi\n";
    for (const auto& [cell, ns] : stats)
        out << cell << ',' << fmt_double(ns.lo) << ',' << fmt_double(ns.hi) << '\n';
}

std::map<int, NormStats> read_norm_stats_csv(const std::string& path) {
    std::map<int, NormStats> out;
    for (const std::string& line : read_lines(path, "cell_id,lo,hi")) {
        auto f = split(line);
        if (f.size() != 3) throw ParseError(path + ": expected 3 fields");
        out[static_cast<int>(parse_int_field(f[0], path))] =
            NormStats{parse_double_field(f[1], path), parse_double_field(f[2], path)};
    }
    return out;
}

void write_cost_csv(const std::string& path,
                    const std::vector<std::pair<std::string, CostReport>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write costs '" + path + "'");
    out << "phase,comm_units,raw_data_units,compute_units\n";
    for (const auto& [phase, r] : rows) {
        out << phase << ',' << fmt_double(r.comm_units) << ',' << fmt_double(r.raw_data_units)
            << ',' << fmt_double(r.compute_units) << '\n';
    }
}

std::vector<std::pair<std::string, CostReport>> read_cost_csv(const std::string& path) {
    std::vector<std::pair<std::string, CostReport>> out;
    for (const std::string& line : read_lines(path, "phase,comm_units,raw_data_units,compute_units")) {
        auto f = split(line);
        if (f.size() != 4) throw ParseError(path + ": expected 4 fields");
        CostReport r;
        r.comm_units = parse_double_field(f[1], path);
        r.raw_data_units = parse_double_field(f[2], path);
        r.compute_units = parse_double_field(f[3], path);
        out.emplace_back(f[0], r);
    }
    return out;
}

void write_attack_results_csv(const std::string& path, const std::vector<AttackEvalResult>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write attack results '" + path + "'");
    out << "phase,rule,attack,mae,mse\n";
    for (const AttackEvalResult& r : rows) {
        AggregationRule rule;
        rule.kind = r.rule;
        out << AttackEvalResult::phase_name(r.phase) << ',' << rule.name() << ','
            << AttackConfig::kind_name(r.attack) << ',' << fmt_double(r.mae) << ','
            << fmt_double(r.mse) << '\n';
    }
}

std::vector<AttackEvalResult> read_attack_results_csv(const std::string& path) {
    std::vector<AttackEvalResult> out;
    for (const std::string& line : read_lines(path, "phase,rule,attack,mae,mse")) {
        auto f = split(line);
        if (f.size() != 5) throw ParseError(path + ": expected 5 fields");
        AttackEvalResult r;
        if (f[0] == "V-twin") r.phase = AttackEvalResult::Phase::vtwin;
        else if (f[0] == "H-twin") r.phase = AttackEvalResult::Phase::htwin;
        else throw ParseError(path + ": unknown phase '" + f[0] + "'");
        r.rule = AggregationRule::from_name(f[1]).kind;
        r.attack = AttackConfig::kind_from_name(f[2]);
        r.mae = parse_double_field(f[3], path);
        r.mse = parse_double_field(f[4], path);
        r.raw_mae = r.mae;
        r.raw_mse = r.mse;
        out.push_back(r);
    }
    return out;
}

std::string format_attack_table(const std::vector<AttackEvalResult>& rows) {
    auto find = [&](AttackEvalResult::Phase p, AggregationRule::Kind rk,
                    AttackConfig::Kind ak) -> const AttackEvalResult* {
        for (const auto& r : rows)
            if (r.phase == p && r.rule == rk && r.attack == ak) return &r;
        return nullptr;
    };
    auto cell = [&](AttackEvalResult::Phase p, AggregationRule::Kind rk, AttackConfig::Kind ak,
                    bool mse) {
        const AttackEvalResult* r = find(p, rk, ak);
        if (!r) return std::string("-");
        std::ostringstream os;
        os << std::fixed << std::setprecision(3) << (mse ? r->mse : r->mae);
        return os.str();
    };

    const AttackConfig::Kind attacks[] = {AttackConfig::Kind::none, AttackConfig::Kind::mpaf,
                                          AttackConfig::Kind::tpi};
    std::ostringstream os;
    os << "Defense   Metric |   V-twin: NO     MPAF      TPI |   H-twin: NO     MPAF      TPI\n";
    os << "-----------------+--------------------------------+-------------------------------\n";
    for (AggregationRule::Kind rk :
         {AggregationRule::Kind::mean, AggregationRule::Kind::median,
          AggregationRule::Kind::fltrust, AggregationRule::Kind::tid}) {
        AggregationRule rule;
        rule.kind = rk;
        for (bool mse : {false, true}) {
            os << std::left << std::setw(10) << (mse ? "" : rule.name()) << std::setw(7)
               << (mse ? "MSE" : "MAE") << '|';
            for (auto phase : {AttackEvalResult::Phase::vtwin, AttackEvalResult::Phase::htwin}) {
                for (AttackConfig::Kind ak : attacks)
                    os << std::right << std::setw(10) << cell(phase, rk, ak, mse);
                os << (phase == AttackEvalResult::Phase::vtwin ? "  |" : "");
            }
            os << '\n';
        }
    }
    return os.str();
}

void write_cache_reports_csv(const std::string& path, const std::vector<CachingReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write cache report '" + path + "'");
    out << "variant,hit_rate,interventions,bs0_load,bs1_load,bs2_load,bs3_load,bs4_load,load_cv\n";
    for (const CachingReport& r : reports) {
        out << variant_name(r.variant) << ',' << fmt_double(r.hit_rate) << ',' << r.interventions;
        for (double l : r.bs_loads) out << ',' << fmt_double(l);
        out << ',' << fmt_double(r.load_cv) << '\n';
    }
}

std::vector<CachingReport> read_cache_reports_csv(const std::string& path) {
    std::vector<CachingReport> out;
    for (const std::string& line : read_lines(
             path, "variant,hit_rate,interventions,bs0_load,bs1_load,bs2_load,bs3_load,bs4_load,load_cv")) {
        auto f = split(line);
        if (f.size() != 9) throw ParseError(path + ": expected 9 fields");
        CachingReport r;
        r.variant = variant_from_name(f[0]);
        r.hit_rate = parse_double_field(f[1], path);
        r.interventions = parse_int_field(f[2], path);
        for (int b = 0; b < CacheTopology::kNumBs; ++b)
            r.bs_loads[static_cast<std::size_t>(b)] = parse_double_field(f[static_cast<std::size_t>(3 + b)], path);
        r.load_cv = parse_double_field(f[8], path);
        out.push_back(r);
    }
    return out;
}

}  // namespace dnt
