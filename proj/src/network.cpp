#include "atsc/network.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace atsc {

int Network::signalized_node() const {
    for (const auto &[id, node] : nodes)
        if (node.kind == NodeKind::Signalized) return id;
    throw TopologyError("no signalized node");
}

std::vector<int> Network::source_nodes() const {
    std::vector<int> out;
    for (const auto &[id, node] : nodes)
        if (node.kind == NodeKind::SourceSink) out.push_back(id);
    return out;
}

bool Network::adjacent(int a, int b) const {
    const auto it = nodes.find(a);
    if (it == nodes.end()) return false;
    const auto &nb = it->second.neighbors;
    return std::find(nb.begin(), nb.end(), b) != nb.end();
}

DemandSpec DemandSpec::fixed(double flow_veh_h, double horizon_s) {
    DemandSpec spec;
    spec.flow_mult_min = 1;
    spec.flow_mult_max = 1;
    spec.unit_flow_veh_h = flow_veh_h;
    spec.jitter_lo = 1.0;
    spec.jitter_hi = 1.0;
    spec.horizon_s = horizon_s;
    return spec;
}

std::string default_network_document() {
    return "# four-arm arterial cross, 500 m edges\n"
           "edge_length_m = 500\n"
           "node 1 source_sink : 5\n"
           "node 2 source_sink : 7\n"
           "node 3 source_sink : 11\n"
           "node 4 source_sink : 13\n"
           "node 5 unsignalized : 1 6\n"
           "node 6 unsignalized : 5 9\n"
           "node 7 unsignalized : 2 8\n"
           "node 8 unsignalized : 7 9\n"
           "node 9 signalized : 6 8 10 12\n"
           "node 10 unsignalized : 9 11\n"
           "node 11 unsignalized : 10 3\n"
           "node 12 unsignalized : 9 13\n"
           "node 13 unsignalized : 12 4\n";
}

namespace {

NodeKind parse_kind(const std::string &token) {
    if (token == "source_sink") return NodeKind::SourceSink;
    if (token == "unsignalized") return NodeKind::Unsignalized;
    if (token == "signalized") return NodeKind::Signalized;
    throw ParseError("unknown node kind '" + token + "'");
}

void check_topology(const Network &net) {
    if (net.nodes.empty()) throw TopologyError("empty network");
    if (!(net.edge_length_m > 0.0)) throw TopologyError("edge length must be positive");

    int signalized = 0;
    for (const auto &[id, node] : net.nodes) {
        for (int nb : node.neighbors) {
            if (net.nodes.find(nb) == net.nodes.end())
                throw TopologyError("node " + std::to_string(id) + " references unknown neighbor " +
                                    std::to_string(nb));
            if (!net.adjacent(nb, id))
                throw TopologyError("adjacency not symmetric between " + std::to_string(id) +
                                    " and " + std::to_string(nb));
        }
        if (node.kind == NodeKind::SourceSink && node.neighbors.size() != 1)
            throw TopologyError("source/sink node " + std::to_string(id) +
                                " must have exactly one neighbor");
        if (node.kind == NodeKind::Signalized) {
            ++signalized;
            if (node.neighbors.size() != 4)
                throw TopologyError("signalized node must have four neighbors");
        }
    }
    if (signalized != 1)
        throw TopologyError("network must contain exactly one signalized node, found " +
                            std::to_string(signalized));

    // connectivity
    std::set<int> seen;
    std::queue<int> frontier;
    frontier.push(net.nodes.begin()->first);
    seen.insert(net.nodes.begin()->first);
    while (!frontier.empty()) {
        const int id = frontier.front();
        frontier.pop();
        for (int nb : net.nodes.at(id).neighbors)
            if (seen.insert(nb).second) frontier.push(nb);
    }
    if (seen.size() != net.nodes.size()) throw TopologyError("network is not connected");
}

} // namespace

Network parse_network(const std::string &document) {
    Network net;
    std::istringstream in(document);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        if (head == "edge_length_m") {
            std::string eq;
            if (!(ls >> eq >> net.edge_length_m) || eq != "=")
                throw ParseError("line " + std::to_string(lineno) + ": expected edge_length_m = <m>");
        } else if (head == "node") {
            RoadNode node;
            std::string kind, colon;
            if (!(ls >> node.id >> kind >> colon) || colon != ":")
                throw ParseError("line " + std::to_string(lineno) +
                                 ": expected node <id> <kind> : <neighbors>");
            node.kind = parse_kind(kind);
            int nb;
            while (ls >> nb) node.neighbors.push_back(nb);
            if (node.neighbors.empty())
                throw ParseError("line " + std::to_string(lineno) + ": node without neighbors");
            if (!net.nodes.emplace(node.id, node).second)
                throw ParseError("duplicate node id " + std::to_string(node.id));
        } else {
            throw ParseError("line " + std::to_string(lineno) + ": unknown directive '" + head + "'");
        }
    }
    check_topology(net);
    return net;
}

Network load_network_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network document '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

std::map<int, int> generate_demand(std::mt19937_64 &rng, const DemandSpec &spec) {
    if (spec.flow_mult_min < 1 || spec.flow_mult_max < spec.flow_mult_min)
        throw InvalidSpecError("flow multiplier interval must be positive and ordered");
    if (spec.jitter_lo > 1.0 || spec.jitter_hi < 1.0)
        throw InvalidSpecError("jitter bounds must bracket 1.0");

    std::uniform_int_distribution<int> mult(spec.flow_mult_min, spec.flow_mult_max);
    const double total_veh_h = mult(rng) * spec.unit_flow_veh_h;
    const double per_source_h = total_veh_h / 4.0;
    const double scale = spec.horizon_s / 3600.0;

    std::uniform_real_distribution<double> jitter(spec.jitter_lo, spec.jitter_hi);
    std::map<int, int> counts;
    for (int source : {1, 2, 3, 4})
        counts[source] =
            static_cast<int>(std::floor(jitter(rng) * per_source_h * scale + 0.5));
    return counts;
}

Route generate_trajectory(std::mt19937_64 &rng, const Network &net, int origin) {
    const auto it = net.nodes.find(origin);
    if (it == net.nodes.end() || it->second.kind != NodeKind::SourceSink)
        throw InvalidSpecError("trajectory origin must be a source/sink node");

    constexpr int kRetryCap = 100;
    for (int attempt = 0; attempt < kRetryCap; ++attempt) {
        Route route;
        route.node_sequence.push_back(origin);
        int previous = -1;
        bool dead_end = false;
        while (true) {
            const int last = route.node_sequence.back();
            if (route.node_sequence.size() >= 2 &&
                net.nodes.at(last).kind == NodeKind::SourceSink)
                break;
            std::vector<int> candidates;
            for (int nb : net.nodes.at(last).neighbors)
                if (nb != previous) candidates.push_back(nb);
            if (candidates.empty()) {
                dead_end = true;
                break;
            }
            std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
            const int next = candidates[pick(rng)];
            route.node_sequence.push_back(next);
            previous = last;
        }
        if (!dead_end) return route;
    }
    throw DeadEndError("walk from node " + std::to_string(origin) +
                       " repeatedly reached a dead end");
}

std::vector<Route> generate_trajectories(std::mt19937_64 &rng, const Network &net,
                                         const std::map<int, int> &counts, double horizon_s) {
    std::vector<Route> routes;
    int id = 0;
    std::uniform_real_distribution<double> depart(0.0, horizon_s);
    for (const auto &[source, count] : counts) {
        for (int k = 0; k < count; ++k) {
            Route r = generate_trajectory(rng, net, source);
            r.vehicle_id = id++;
            r.depart_time_s = depart(rng);
            routes.push_back(std::move(r));
        }
    }
    return routes;
}

std::string routes_to_text(const std::vector<Route> &routes) {
    std::ostringstream os;
    os << "# id depart_time_s node_sequence\n";
    for (const auto &r : routes) {
        os << r.vehicle_id << ' ' << r.depart_time_s << ' ';
        for (size_t i = 0; i < r.node_sequence.size(); ++i) {
            if (i) os << ',';
            os << r.node_sequence[i];
        }
        os << '\n';
    }
    return os.str();
}

std::vector<Route> parse_routes(const std::string &text) {
    std::vector<Route> routes;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Route r;
        std::string nodes;
        if (!(ls >> r.vehicle_id >> r.depart_time_s >> nodes))
            throw ParseError("route line " + std::to_string(lineno) + " malformed");
        std::istringstream ns(nodes);
        std::string tok;
        while (std::getline(ns, tok, ','))
            r.node_sequence.push_back(std::stoi(tok));
        if (r.node_sequence.size() < 2)
            throw ParseError("route line " + std::to_string(lineno) + " has fewer than two nodes");
        routes.push_back(std::move(r));
    }
    return routes;
}

} // namespace atsc
