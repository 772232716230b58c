#pragma once

#include "atsc/nn.hpp"
#include "atsc/state.hpp"

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace atsc {

/// Linear exploration schedule: 1 at the first episode, 0 at the last.
double epsilon(int episode, int total_episodes);

/// Epsilon-greedy over q-values. Returns a 1-based action id; greedy ties
/// break toward the lowest index.
int select_action_dqn(const std::vector<double> &q_values, double eps, std::mt19937_64 &rng);

/// One-step bootstrapped target: r + gamma * max(q_next), or r on terminal.
double bellman_target(double reward, double gamma, const std::vector<double> &q_next,
                      bool terminal);

/// Policy probability ratio exp(logp_new - logp_old).
double ratio(double logp_new, double logp_old);

/// Clipped surrogate: min(ratio * A, clamp(ratio, 1-clip, 1+clip) * A).
double clipped_objective(double ratio_value, double advantage, double clip);

/// Generalized advantage estimates over one uninterrupted segment:
/// A_t = sum_k (gamma*lambda)^k * delta_{t+k}, by backward recursion.
std::vector<double> gae(const std::vector<double> &deltas, double gamma, double lambda);

struct Transition {
    StateTensor state;
    int action = 1; // 1-based phase id
    double reward = 0.0;
    StateTensor next_state;
    bool terminal = false;
};

/// FIFO ring of transitions with uniform without-replacement batch sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(size_t capacity = 10000);

    void push(Transition t);
    size_t size() const { return ring_.size(); }
    size_t capacity() const { return capacity_; }
    const Transition &at(size_t i) const { return ring_[i]; }

    std::vector<const Transition *> sample(size_t batch, std::mt19937_64 &rng) const;

  private:
    size_t capacity_;
    std::deque<Transition> ring_;
};

/// One decision recorded for the on-policy update, with the log-probability
/// and value estimates of the exact policy that acted.
struct RolloutEntry {
    StateTensor state;
    int action = 1;
    double reward = 0.0;
    bool terminal = false;
    double logp_old = 0.0;
    double value_old = 0.0;
    double next_value = 0.0; // V(s') under the collecting critic; 0 on terminal
};

class RolloutBuffer {
  public:
    void push(RolloutEntry e) { entries_.push_back(std::move(e)); }
    void clear() { entries_.clear(); }
    size_t size() const { return entries_.size(); }
    const std::vector<RolloutEntry> &entries() const { return entries_; }

  private:
    std::vector<RolloutEntry> entries_;
};

struct DqnConfig {
    double lr = 0.002;
    double gamma = 0.99;
    int batch = 64;
    int target_sync_interval = 200; // optimizer updates between hard syncs
    int total_episodes = 500;       // E in the exploration schedule
    int epochs = 1;                 // outer passes over the episode loop
    size_t replay_capacity = 10000;
    OptimizerConfig::Mode opt_mode = OptimizerConfig::Mode::Adaptive;
};

struct PpoConfig {
    double lr = 0.0003;
    double gamma = 0.99;
    double clip = 0.2;
    double gae_lambda = 0.95;
    int batch = 64;
    int epochs_per_update = 4;
    int total_episodes = 500;
    int rollout_horizon = 256; // decisions collected before an update
    bool normalize_advantages = true;
    OptimizerConfig::Mode opt_mode = OptimizerConfig::Mode::Adaptive;
};

/// Networks sized for an encoder's state shape: the 10-cell grid uses the
/// convolutional stacks, the aggregate (cells == 1) encoding a dense stack.
Net build_q_net_for(const std::vector<int> &state_shape, std::uint64_t seed);
std::pair<Net, Net> build_actor_critic_for(const std::vector<int> &state_shape,
                                           std::uint64_t seed);

/// Reshapes a state tensor into the network's expected input layout; element
/// counts must match.
Tensor state_to_input(const StateTensor &state, const std::vector<int> &input_shape);

class DqnAgent {
  public:
    DqnAgent(const std::vector<int> &state_shape, DqnConfig config, std::uint64_t seed);
    /// Wraps an externally built network (small oracle problems in tests).
    DqnAgent(Net online, DqnConfig config);

    std::vector<double> q_values(const StateTensor &state);
    int act(const StateTensor &state, double eps, std::mt19937_64 &rng);
    int act_greedy(const StateTensor &state);
    void remember(Transition t) { buffer_.push(std::move(t)); }

    /// Samples one batch and applies one optimizer update; returns the mean
    /// squared TD error. Requires buffer size >= batch.
    double train_step(std::mt19937_64 &rng);

    Net &online() { return online_; }
    const Net &target() const { return target_; }
    ReplayBuffer &buffer() { return buffer_; }
    int updates() const { return updates_; }
    int num_actions() const { return num_actions_; }
    const DqnConfig &config() const { return config_; }

  private:
    DqnConfig config_;
    Net online_;
    Net target_;
    Optimizer opt_;
    ReplayBuffer buffer_;
    int num_actions_ = 0;
    int updates_ = 0;
};

/// Per-sample clipped-surrogate loss -min(ratio*A, clamp(ratio)*A); when
/// accumulate_grads is set, adds grad_scale * dloss/dparams into the actor's
/// gradient buffers. ratio_out, if given, receives the probability ratio.
double actor_sample_loss(Net &actor, const Tensor &input, int action, double logp_old,
                         double advantage, double clip, bool accumulate_grads,
                         double grad_scale, double *ratio_out = nullptr);

class PpoAgent {
  public:
    struct ActResult {
        int action = 1;
        double logp = 0.0;
        double value = 0.0;
    };
    struct UpdateStats {
        double actor_loss = 0.0;
        double critic_loss = 0.0;
        double clip_fraction = 0.0;
        int samples = 0;
    };

    PpoAgent(const std::vector<int> &state_shape, PpoConfig config, std::uint64_t seed);
    PpoAgent(Net actor, Net critic, PpoConfig config);

    std::vector<double> action_probs(const StateTensor &state);
    double value(const StateTensor &state);
    ActResult act(const StateTensor &state, std::mt19937_64 &rng);
    int act_greedy(const StateTensor &state);

    void store(RolloutEntry e) { rollout_.push(std::move(e)); }
    RolloutBuffer &rollout() { return rollout_; }

    /// Runs epochs_per_update shuffled minibatch passes over the rollout and
    /// clears it. Returns mean losses over all minibatches.
    UpdateStats update(std::mt19937_64 &rng);

    Net &actor() { return actor_; }
    Net &critic() { return critic_; }
    const PpoConfig &config() const { return config_; }

  private:
    PpoAgent(std::pair<Net, Net> nets, PpoConfig config);

    PpoConfig config_;
    Net actor_;
    Net critic_;
    Optimizer opt_actor_;
    Optimizer opt_critic_;
    RolloutBuffer rollout_;
    int num_actions_ = 0;
};

/// One training-log line; unused loss fields stay zero for the other agent.
struct TrainLogRow {
    int episode = 0;
    int steps = 0;
    double mean_reward = 0.0;
    double loss = 0.0;         // DQN TD loss / PPO actor loss
    double aux_loss = 0.0;     // PPO critic loss
    double schedule = 0.0;     // DQN epsilon / PPO clip fraction
};

std::string train_log_csv_header(bool ppo);
std::string train_log_row_csv(const TrainLogRow &row, bool ppo);

/// Mann-Kendall trend statistic S = sum_{i<j} sign(x_j - x_i); positive
/// values indicate an upward trend.
long long mann_kendall_s(const std::vector<double> &series);

} // namespace atsc
