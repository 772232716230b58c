#pragma once

#include "atsc/network.hpp"
#include "atsc/partition.hpp"
#include "atsc/rl.hpp"
#include "atsc/sim.hpp"
#include "atsc/state.hpp"

#include <optional>
#include <random>
#include <vector>

namespace atsc {

enum class EncoderKind { Vcl, Fcl, Agg };

const char *encoder_name(EncoderKind kind);
EncoderKind parse_encoder(const std::string &name); // throws InvalidSpecError

struct EnvConfig {
    EncoderKind encoder = EncoderKind::Vcl;
    PartitionSpec partition{500.0, 7.0, 10}; // detection range shared by all encoders
    DemandSpec demand = DemandSpec::fixed(1600.0, 3600.0);
    double horizon_s = 3600.0;   // episode length
    double green_s = 15.0;       // green granted per decision
    int demand_refresh_episodes = 25; // regenerate routes every this many episodes
    SimParams sim;
};

struct StepResult {
    StateTensor state; // normalized observation at the next decision point
    double reward = 0.0;
    bool done = false;
    MetricsWindow window; // raw metrics behind the reward
};

/// Binds the simulator to the agents: an episode is one simulated horizon,
/// actions are phase picks at green expiries, rewards come from the metrics
/// accumulated over each action's green (+ preceding yellow) interval. The
/// normalization maxima persist across episodes.
class TrafficEnv {
  public:
    explicit TrafficEnv(EnvConfig config);

    /// Starts episode number `episode`, regenerating demand on refresh
    /// boundaries, and returns the initial observation.
    StateTensor reset(int episode, std::mt19937_64 &rng);

    /// Applies a phase choice (1..8) and advances to the next decision point
    /// or the horizon.
    StepResult step(int action);

    StateTensor observe();
    bool done() const { return done_; }
    int decisions() const { return decisions_; }
    std::vector<int> state_shape() const;
    const EnvConfig &config() const { return config_; }
    const SimWorld &world() const;
    NormState &norm() { return norm_; }

    /// Encodes the current state of an arbitrary world with this env's
    /// encoder settings (used to drive trained policies during evaluation).
    static StateTensor encode(const SimWorld &world, EncoderKind encoder,
                              const PartitionSpec &partition, NormState &norm);

  private:
    EnvConfig config_;
    Network net_;
    NormState norm_;
    std::optional<SimWorld> world_;
    std::vector<Route> routes_;
    int routes_episode_ = -1;
    int decisions_ = 0;
    bool done_ = true;
};

} // namespace atsc
