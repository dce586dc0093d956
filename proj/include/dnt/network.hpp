#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dnt/errors.hpp"

namespace dnt {

// A base station (or other network entity) with internal properties and
// external references to other objects in the same network.
struct PhysicalNetworkObject {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    std::map<std::string, double> internal_props;
    std::map<std::string, int> external_props;  // name -> referenced PNO id
};

struct PhysicalNetwork {
    int rows = 0;
    int cols = 0;
    std::vector<PhysicalNetworkObject> objects;
    long long epoch = 0;

    int cell_count() const { return rows * cols; }
    void advance_epoch() { ++epoch; }
};

struct NetworkConfig {
    int rows = 10;
    int cols = 10;
    std::map<std::string, double> cell_defaults = {{"capacity", 100.0}};
};

enum class Channel { sms, call, internet };

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

// Dense [cell x time] traffic matrix with a shared, uniformly spaced time axis.
struct TrafficDataset {
    std::vector<int> cell_ids;
    std::vector<long long> timestamps;  // minutes since origin
    std::vector<std::vector<double>> values;
    Channel channel = Channel::internet;

    std::size_t cell_index(int cell_id) const;
};

struct TrafficProfile {
    double base_load = 10.0;
    double base_jitter = 0.4;   // per-cell relative spread of the base load
    double amplitude = 0.35;    // diurnal amplitude
    double phase_jitter = 0.0;  // per-cell diurnal phase spread (radians); 0 keeps cells in phase
    double noise_scale = 0.5;   // additive gaussian noise, traffic units
    int period_steps = 144;     // diurnal period in steps
    int step_minutes = 10;
};

struct LoadReport {
    std::size_t rows_parsed = 0;
    std::size_t missing_filled = 0;
};

// k-means over standardized (x, y, mean traffic, traffic std) features.
struct ClusterAssignment {
    int k = 1;
    std::map<int, int> assignment;  // cell_id -> cluster index
    std::vector<std::array<double, 4>> centroids;
    int recluster_period = 20;

    std::vector<std::vector<int>> members() const;
};

PhysicalNetwork build_physical_network(const NetworkConfig& config);

// Checks the structural invariants (unique ids, grid bounds, resolvable
// external references, cell count).
void validate(const PhysicalNetwork& network);

// base*(1 + amplitude*sin(2*pi*t/period + phase)) + noise, clipped at 0.
// Deterministic for a fixed (seed, profile).
TrafficDataset generate_synthetic_traffic(const PhysicalNetwork& network, std::uint64_t seed,
                                          int horizon, const TrafficProfile& profile);

TrafficDataset load_traffic_csv(const std::string& path, LoadReport* report = nullptr);
void write_traffic_csv(const TrafficDataset& dataset, const std::string& path);

ClusterAssignment cluster_cells(const PhysicalNetwork& network, const TrafficDataset& dataset,
                                int k, std::uint64_t seed, int recluster_period = 20);

// Records each cell's serving-cluster link as an external property pointing
// at the cluster head (the member cell nearest its centroid).
void link_cluster_heads(PhysicalNetwork& network, const ClusterAssignment& clusters,
                        const TrafficDataset& dataset);

}  // namespace dnt
