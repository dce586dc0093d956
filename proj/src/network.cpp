#include "dnt/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "dnt/rng.hpp"

namespace dnt {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::sms: return "sms";
        case Channel::call: return "call";
        case Channel::internet: return "internet";
    }
    throw DomainError("channel_name: unknown channel");
}

Channel channel_from_name(const std::string& name) {
    if (name == "sms") return Channel::sms;
    if (name == "call") return Channel::call;
    if (name == "internet") return Channel::internet;
    throw ParseError("unknown channel '" + name + "'");
}

std::size_t TrafficDataset::cell_index(int cell_id) const {
    auto it = std::find(cell_ids.begin(), cell_ids.end(), cell_id);
    if (it == cell_ids.end()) throw DomainError("cell id " + std::to_string(cell_id) + " not in dataset");
    return static_cast<std::size_t>(it - cell_ids.begin());
}

std::vector<std::vector<int>> ClusterAssignment::members() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (const auto& [cell, cluster] : assignment) out[static_cast<std::size_t>(cluster)].push_back(cell);
    return out;
}

PhysicalNetwork build_physical_network(const NetworkConfig& config) {
    if (config.rows < 1 || config.cols < 1)
        throw ConfigError("build_physical_network: grid dims must be >= (1,1)");
    PhysicalNetwork net;
    net.rows = config.rows;
    net.cols = config.cols;
    net.objects.reserve(static_cast<std::size_t>(config.rows) * static_cast<std::size_t>(config.cols));
    for (int r = 0; r < config.rows; ++r) {
        for (int c = 0; c < config.cols; ++c) {
            PhysicalNetworkObject bs;
            bs.id = r * config.cols + c;
            bs.x = static_cast<double>(c);
            bs.y = static_cast<double>(r);
            bs.internal_props = config.cell_defaults;
            net.objects.push_back(std::move(bs));
        }
    }
    net.epoch = 0;
    validate(net);
    return net;
}

void validate(const PhysicalNetwork& network) {
    if (static_cast<std::size_t>(network.cell_count()) != network.objects.size())
        throw ConfigError("network: rows*cols does not match object count");
    std::set<int> ids;
    for (const auto& o : network.objects) {
        if (!ids.insert(o.id).second) throw ConfigError("network: duplicate PNO id " + std::to_string(o.id));
        if (o.x < 0 || o.x >= network.cols || o.y < 0 || o.y >= network.rows)
            throw ConfigError("network: PNO " + std::to_string(o.id) + " outside grid bounds");
    }
    for (const auto& o : network.objects) {
        for (const auto& [name, ref] : o.external_props) {
            if (!ids.count(ref))
                throw ConfigError("network: PNO " + std::to_string(o.id) + " external property '" + name +
                                  "' references missing id " + std::to_string(ref));
        }
    }
    if (network.epoch < 0) throw ConfigError("network: epoch must be non-negative");
}

TrafficDataset generate_synthetic_traffic(const PhysicalNetwork& network, std::uint64_t seed,
                                          int horizon, const TrafficProfile& profile) {
    if (horizon < 1) throw ConfigError("generate_synthetic_traffic: horizon must be >= 1");
    if (profile.amplitude < 0) throw ConfigError("generate_synthetic_traffic: amplitude must be >= 0");
    if (profile.noise_scale < 0) throw ConfigError("generate_synthetic_traffic: noise scale must be >= 0");
    if (profile.base_jitter < 0) throw ConfigError("generate_synthetic_traffic: base jitter must be >= 0");
    if (profile.period_steps < 1) throw ConfigError("generate_synthetic_traffic: period must be >= 1");

    TrafficDataset ds;
    ds.channel = Channel::internet;
    ds.timestamps.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) ds.timestamps.push_back(static_cast<long long>(t) * profile.step_minutes);

    const double two_pi = 6.283185307179586476925286766559;
    Rng cell_rng = Rng::substream(seed, "traffic/cells");
    for (const auto& obj : network.objects) {
        ds.cell_ids.push_back(obj.id);
        double base = profile.base_load * (1.0 + profile.base_jitter * cell_rng.uniform(-1.0, 1.0));
        double phase = profile.phase_jitter * cell_rng.uniform(-1.0, 1.0);
        Rng noise = Rng::substream(seed, "traffic/noise", static_cast<std::uint64_t>(obj.id));
        std::vector<double> series(static_cast<std::size_t>(horizon));
        for (int t = 0; t < horizon; ++t) {
            double diurnal = base * (1.0 + profile.amplitude *
                                               std::sin(two_pi * t / profile.period_steps + phase));
            double v = diurnal + profile.noise_scale * noise.normal();
            series[static_cast<std::size_t>(t)] = std::max(0.0, v);
        }
        ds.values.push_back(std::move(series));
    }
    return ds;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, std::size_t line_no, const char* what) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

TrafficDataset load_traffic_csv(const std::string& path, LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open traffic csv '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "cell_id,timestamp,channel,value")
        throw SchemaError(path + ": expected header 'cell_id,timestamp,channel,value', got '" + line + "'");

    struct Row {
        int cell;
        long long ts;
        double value;
    };
    std::vector<Row> rows;
    std::set<std::pair<int, long long>> seen;
    std::map<int, long long> last_ts_for_cell;
    Channel channel = Channel::internet;
    bool channel_set = false;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        Row row;
        row.cell = static_cast<int>(parse_int(fields[0], line_no, "cell_id"));
        row.ts = parse_int(fields[1], line_no, "timestamp");
        Channel ch = channel_from_name(fields[2]);
        if (!channel_set) {
            channel = ch;
            channel_set = true;
        } else if (ch != channel) {
            throw SchemaError("line " + std::to_string(line_no) + ": mixed channels in one file");
        }
        row.value = parse_double(fields[3], line_no, "value");
        if (!std::isfinite(row.value) || row.value < 0)
            throw SchemaError("line " + std::to_string(line_no) + ": value must be finite and >= 0");
        if (!seen.insert({row.cell, row.ts}).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate entry for cell " +
                             std::to_string(row.cell) + " at t=" + std::to_string(row.ts));
        auto it = last_ts_for_cell.find(row.cell);
        if (it != last_ts_for_cell.end() && row.ts <= it->second)
            throw SchemaError("line " + std::to_string(line_no) + ": non-monotonic timestamp for cell " +
                              std::to_string(row.cell));
        last_ts_for_cell[row.cell] = row.ts;
        rows.push_back(row);
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");

    std::set<int> cell_set;
    std::set<long long> ts_set;
    for (const Row& r : rows) {
        cell_set.insert(r.cell);
        ts_set.insert(r.ts);
    }

    TrafficDataset ds;
    ds.channel = channel;
    ds.cell_ids.assign(cell_set.begin(), cell_set.end());
    ds.timestamps.assign(ts_set.begin(), ts_set.end());

    if (ds.timestamps.size() > 2) {
        long long step = ds.timestamps[1] - ds.timestamps[0];
        for (std::size_t i = 2; i < ds.timestamps.size(); ++i) {
            if (ds.timestamps[i] - ds.timestamps[i - 1] != step)
                throw SchemaError(path + ": timestamps are not uniformly spaced");
        }
    }

    std::map<int, std::size_t> cell_pos;
    for (std::size_t i = 0; i < ds.cell_ids.size(); ++i) cell_pos[ds.cell_ids[i]] = i;
    std::map<long long, std::size_t> ts_pos;
    for (std::size_t i = 0; i < ds.timestamps.size(); ++i) ts_pos[ds.timestamps[i]] = i;

    ds.values.assign(ds.cell_ids.size(), std::vector<double>(ds.timestamps.size(), 0.0));
    for (const Row& r : rows) ds.values[cell_pos[r.cell]][ts_pos[r.ts]] = r.value;

    if (report) {
        report->rows_parsed = rows.size();
        report->missing_filled = ds.cell_ids.size() * ds.timestamps.size() - rows.size();
    }
    return ds;
}

void write_traffic_csv(const TrafficDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write traffic csv '" + path + "'");
    out << "cell_id,timestamp,channel,value\n";
    const char* ch = channel_name(dataset.channel);
    for (std::size_t c = 0; c < dataset.cell_ids.size(); ++c) {
        for (std::size_t t = 0; t < dataset.timestamps.size(); ++t) {
            out << dataset.cell_ids[c] << ',' << dataset.timestamps[t] << ',' << ch << ','
                << format_double(dataset.values[c][t]) << '\n';
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

// Standardized (x, y, mean, std) feature rows, one per network cell.
std::vector<std::array<double, 4>> cell_features(const PhysicalNetwork& network,
                                                 const TrafficDataset& dataset) {
    std::vector<std::array<double, 4>> feats;
    feats.reserve(network.objects.size());
    for (const auto& obj : network.objects) {
        std::size_t idx = dataset.cell_index(obj.id);
        const auto& series = dataset.values[idx];
        double mean = 0;
        for (double v : series) mean += v;
        mean /= static_cast<double>(series.size());
        double var = 0;
        for (double v : series) var += (v - mean) * (v - mean);
        var /= static_cast<double>(series.size());
        feats.push_back({obj.x, obj.y, mean, std::sqrt(var)});
    }
    for (int f = 0; f < 4; ++f) {
        double mean = 0;
        for (const auto& row : feats) mean += row[static_cast<std::size_t>(f)];
        mean /= static_cast<double>(feats.size());
        double var = 0;
        for (const auto& row : feats) {
            double d = row[static_cast<std::size_t>(f)] - mean;
            var += d * d;
        }
        double sd = std::sqrt(var / static_cast<double>(feats.size()));
        for (auto& row : feats) {
            double& v = row[static_cast<std::size_t>(f)];
            v = sd > 0 ? (v - mean) / sd : 0.0;
        }
    }
    return feats;
}

double sq_dist(const std::array<double, 4>& a, const std::array<double, 4>& b) {
    double acc = 0;
    for (int i = 0; i < 4; ++i) {
        double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return acc;
}

}  // namespace

ClusterAssignment cluster_cells(const PhysicalNetwork& network, const TrafficDataset& dataset,
                                int k, std::uint64_t seed, int recluster_period) {
    int n = network.cell_count();
    if (k < 1) throw ConfigError("cluster_cells: k must be >= 1");
    if (k > n) throw ConfigError("cluster_cells: k exceeds cell count");

    auto feats = cell_features(network, dataset);

    // k-means++ seeding.
    Rng rng = Rng::substream(seed, "clustering");
    std::vector<std::array<double, 4>> centroids;
    centroids.push_back(feats[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
    std::vector<double> d2(static_cast<std::size_t>(n));
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centroids) best = std::min(best, sq_dist(feats[static_cast<std::size_t>(i)], c));
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0) {
            double r = rng.uniform() * total;
            double acc = 0;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc >= r) {
                    pick = static_cast<std::size_t>(i);
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        }
        centroids.push_back(feats[pick]);
    }

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    constexpr int kMaxIter = 100;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double d = sq_dist(feats[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        // Repair empty clusters with the point farthest from its centroid.
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int a : assign) ++counts[static_cast<std::size_t>(a)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int farthest = -1;
            double far_d = -1;
            for (int i = 0; i < n; ++i) {
                int a = assign[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(a)] <= 1) continue;
                double d = sq_dist(feats[static_cast<std::size_t>(i)], centroids[static_cast<std::size_t>(a)]);
                if (d > far_d) {
                    far_d = d;
                    farthest = i;
                }
            }
            if (farthest < 0) throw DomainError("cluster_cells: cannot repair empty cluster");
            --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(farthest)])];
            assign[static_cast<std::size_t>(farthest)] = c;
            ++counts[static_cast<std::size_t>(c)];
            changed = true;
        }

        for (int c = 0; c < k; ++c) {
            std::array<double, 4> acc{0, 0, 0, 0};
            int cnt = 0;
            for (int i = 0; i < n; ++i) {
                if (assign[static_cast<std::size_t>(i)] != c) continue;
                for (int f = 0; f < 4; ++f) acc[static_cast<std::size_t>(f)] += feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
                ++cnt;
            }
            for (int f = 0; f < 4; ++f) centroids[static_cast<std::size_t>(c)][static_cast<std::size_t>(f)] = acc[static_cast<std::size_t>(f)] / cnt;
        }
        if (!changed) break;
    }

    ClusterAssignment out;
    out.k = k;
    out.centroids = centroids;
    out.recluster_period = recluster_period;
    for (int i = 0; i < n; ++i) out.assignment[network.objects[static_cast<std::size_t>(i)].id] = assign[static_cast<std::size_t>(i)];
    return out;
}

void link_cluster_heads(PhysicalNetwork& network, const ClusterAssignment& clusters,
                        const TrafficDataset& dataset) {
    (void)dataset;
    auto groups = clusters.members();
    std::map<int, int> head_for_cluster;
    for (int c = 0; c < clusters.k; ++c) {
        const auto& m = groups[static_cast<std::size_t>(c)];
        if (m.empty()) throw DomainError("link_cluster_heads: empty cluster " + std::to_string(c));
        head_for_cluster[c] = *std::min_element(m.begin(), m.end());
    }
    for (auto& obj : network.objects) {
        auto it = clusters.assignment.find(obj.id);
        if (it == clusters.assignment.end())
            throw DomainError("link_cluster_heads: cell " + std::to_string(obj.id) + " unassigned");
        obj.external_props["cluster_head"] = head_for_cluster[it->second];
    }
    validate(network);
}

}  // namespace dnt
