#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace atsc {

enum class NodeKind { SourceSink, Unsignalized, Signalized };

struct RoadNode {
    int id = 0;
    NodeKind kind = NodeKind::Unsignalized;
    std::vector<int> neighbors;
};

/// Arterial cross layout: four source/sink arms meeting at one signalized
/// node, every edge edge_length_m long.
struct Network {
    std::map<int, RoadNode> nodes;
    double edge_length_m = 500.0;

    int signalized_node() const;
    std::vector<int> source_nodes() const;
    bool adjacent(int a, int b) const;
};

struct Route {
    int vehicle_id = 0;
    std::vector<int> node_sequence;
    double depart_time_s = 0.0;
};

struct DemandSpec {
    int flow_mult_min = 3;       // sampled multiplier k, total flow = k * unit_flow
    int flow_mult_max = 6;
    double unit_flow_veh_h = 400.0;
    double jitter_lo = 0.8;      // per-source uniform jitter around total/4
    double jitter_hi = 1.2;
    double horizon_s = 3600.0;

    /// Demand pinned to an exact total flow: no multiplier sampling, no jitter.
    static DemandSpec fixed(double flow_veh_h, double horizon_s);
};

/// The default testbed network: sources 1-4, two unsignalized nodes per arm,
/// signalized node 9, 500 m edges.
std::string default_network_document();

Network parse_network(const std::string &document);
Network load_network_file(const std::string &path);

/// Per-source vehicle counts for the spec's horizon. Keys are source node ids.
std::map<int, int> generate_demand(std::mt19937_64 &rng, const DemandSpec &spec);

/// Random walk from origin, excluding the immediately preceding node at each
/// step, until a source/sink node is reached with length >= 2. Incomplete
/// walks are discarded and resampled up to a retry cap.
Route generate_trajectory(std::mt19937_64 &rng, const Network &net, int origin);

std::vector<Route> generate_trajectories(std::mt19937_64 &rng, const Network &net,
                                         const std::map<int, int> &counts, double horizon_s);

std::string routes_to_text(const std::vector<Route> &routes);
std::vector<Route> parse_routes(const std::string &text);

} // namespace atsc
