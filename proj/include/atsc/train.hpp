#pragma once

#include "atsc/env.hpp"
#include "atsc/rl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace atsc {

struct DqnTrainResult {
    std::vector<TrainLogRow> log;
    DqnAgent agent;
};

struct PpoTrainResult {
    std::vector<TrainLogRow> log;
    PpoAgent agent;
};

/// Replay-based training: epsilon-greedy rollouts, one batch update per
/// decision once the buffer holds a batch. One log row per episode.
DqnTrainResult train_dqn(TrafficEnv &env, const DqnConfig &config, std::uint64_t seed);

/// On-policy training: sampled actions with stored log-probs and values, a
/// clipped-surrogate update whenever the rollout reaches its horizon (plus a
/// final flush). One log row per episode.
PpoTrainResult train_ppo(TrafficEnv &env, const PpoConfig &config, std::uint64_t seed);

void write_train_log(const std::string &path, const std::vector<TrainLogRow> &rows, bool ppo);

} // namespace atsc
