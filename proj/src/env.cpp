#include "atsc/env.hpp"

#include "atsc/errors.hpp"

#include <cmath>

namespace atsc {

const char *encoder_name(EncoderKind kind) {
    switch (kind) {
    case EncoderKind::Vcl: return "vcl";
    case EncoderKind::Fcl: return "fcl";
    case EncoderKind::Agg: return "agg";
    }
    return "?";
}

EncoderKind parse_encoder(const std::string &name) {
    if (name == "vcl") return EncoderKind::Vcl;
    if (name == "fcl") return EncoderKind::Fcl;
    if (name == "agg") return EncoderKind::Agg;
    throw InvalidSpecError("unknown state encoder '" + name + "' (use vcl, fcl or agg)");
}

TrafficEnv::TrafficEnv(EnvConfig config)
    : config_(config), net_(parse_network(default_network_document())) {
    if (!(config_.horizon_s > 0.0) || !(config_.green_s > 0.0) ||
        config_.demand_refresh_episodes <= 0)
        throw InvalidSpecError("environment horizon, green and refresh must be positive");
    validate_spec(config_.partition);
    config_.sim.detection_range_m = config_.partition.detection_range_m;
    if (config_.encoder == EncoderKind::Vcl)
        rounded_layout(config_.partition); // fail fast on infeasible partitions
}

StateTensor TrafficEnv::encode(const SimWorld &world, EncoderKind encoder,
                               const PartitionSpec &partition, NormState &norm) {
    switch (encoder) {
    case EncoderKind::Vcl:
        return normalize(encode_raw(world, rounded_layout(partition)), norm);
    case EncoderKind::Fcl:
        return normalize(
            encode_fcl(world, partition.detection_range_m, partition.num_cells), norm);
    case EncoderKind::Agg:
        return normalize(encode_aggregate(world, partition.detection_range_m), norm);
    }
    throw InvalidSpecError("unknown encoder");
}

StateTensor TrafficEnv::observe() {
    if (!world_) throw InvalidSpecError("environment used before reset");
    return encode(*world_, config_.encoder, config_.partition, norm_);
}

std::vector<int> TrafficEnv::state_shape() const {
    const int cells = config_.encoder == EncoderKind::Agg ? 1 : config_.partition.num_cells;
    return {kStateLanes, cells, kStateChannels};
}

const SimWorld &TrafficEnv::world() const {
    if (!world_) throw InvalidSpecError("environment used before reset");
    return *world_;
}

StateTensor TrafficEnv::reset(int episode, std::mt19937_64 &rng) {
    if (routes_episode_ < 0 || episode / config_.demand_refresh_episodes !=
                                   routes_episode_ / config_.demand_refresh_episodes) {
        DemandSpec demand = config_.demand;
        demand.horizon_s = config_.horizon_s;
        const std::map<int, int> counts = generate_demand(rng, demand);
        routes_ = generate_trajectories(rng, net_, counts, demand.horizon_s);
    }
    routes_episode_ = episode;
    world_.emplace(net_, routes_, config_.sim);
    world_->window_metrics(); // drop anything accumulated during construction
    decisions_ = 0;
    done_ = false;
    return observe();
}

StepResult TrafficEnv::step(int action) {
    if (!world_ || done_) throw InvalidSpecError("step called on a finished episode");
    if (action < 1 || action > kNumPhases)
        throw InvalidSpecError("phase action must lie in 1..8");
    world_->set_phase(action, config_.green_s);
    do {
        world_->step();
    } while (!world_->decision_due() && world_->clock_s() < config_.horizon_s - 1e-9);

    StepResult result;
    result.window = world_->window_metrics();
    result.reward = reward(result.window);
    result.done = world_->clock_s() >= config_.horizon_s - 1e-9;
    done_ = result.done;
    ++decisions_;
    result.state = observe();
    return result;
}

} // namespace atsc
