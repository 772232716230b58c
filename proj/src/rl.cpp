#include "atsc/rl.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace atsc {

double epsilon(int episode, int total_episodes) {
    if (total_episodes <= 0 || episode < 0 || episode > total_episodes)
        throw InvalidSpecError("episode index must lie in [0, total_episodes]");
    return 1.0 - static_cast<double>(episode) / total_episodes;
}

int select_action_dqn(const std::vector<double> &q_values, double eps, std::mt19937_64 &rng) {
    if (q_values.empty()) throw InvalidSpecError("empty action-value vector");
    if (!(eps >= 0.0 && eps <= 1.0))
        throw InvalidSpecError("exploration rate must lie in [0, 1]");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < eps) {
        std::uniform_int_distribution<int> pick(1, static_cast<int>(q_values.size()));
        return pick(rng);
    }
    size_t best = 0;
    for (size_t i = 1; i < q_values.size(); ++i)
        if (q_values[i] > q_values[best]) best = i; // strict: ties keep the lowest index
    return static_cast<int>(best) + 1;
}

double bellman_target(double reward, double gamma, const std::vector<double> &q_next,
                      bool terminal) {
    if (terminal) return reward;
    if (q_next.empty()) throw InvalidSpecError("empty successor action-value vector");
    return reward + gamma * *std::max_element(q_next.begin(), q_next.end());
}

double ratio(double logp_new, double logp_old) {
    if (!std::isfinite(logp_new) || !std::isfinite(logp_old))
        throw InvalidSpecError("log-probabilities must be finite");
    return std::exp(logp_new - logp_old);
}

double clipped_objective(double ratio_value, double advantage, double clip) {
    if (!(clip > 0.0 && clip < 1.0)) throw InvalidSpecError("clip must lie in (0, 1)");
    const double clamped = std::clamp(ratio_value, 1.0 - clip, 1.0 + clip);
    return std::min(ratio_value * advantage, clamped * advantage);
}

std::vector<double> gae(const std::vector<double> &deltas, double gamma, double lambda) {
    std::vector<double> advantages(deltas.size(), 0.0);
    double acc = 0.0;
    for (size_t i = deltas.size(); i-- > 0;) {
        acc = deltas[i] + gamma * lambda * acc;
        advantages[i] = acc;
    }
    return advantages;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidSpecError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    ring_.push_back(std::move(t));
    if (ring_.size() > capacity_) ring_.pop_front();
}

std::vector<const Transition *> ReplayBuffer::sample(size_t batch, std::mt19937_64 &rng) const {
    if (batch > ring_.size())
        throw InvalidSpecError("batch larger than the replay buffer's contents");
    // partial Fisher-Yates over indices: uniform without replacement
    std::vector<size_t> idx(ring_.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::vector<const Transition *> out;
    out.reserve(batch);
    for (size_t i = 0; i < batch; ++i) {
        std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(&ring_[idx[i]]);
    }
    return out;
}

namespace {

size_t shape_product(const std::vector<int> &shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

bool is_grid_shape(const std::vector<int> &shape) {
    return shape == std::vector<int>{kStateLanes, kStateCells, kStateChannels};
}

OptimizerConfig opt_config(OptimizerConfig::Mode mode, double lr) {
    OptimizerConfig cfg;
    cfg.mode = mode;
    cfg.lr = lr;
    return cfg;
}

} // namespace

Net build_q_net_for(const std::vector<int> &state_shape, std::uint64_t seed) {
    if (is_grid_shape(state_shape)) return build_dqn_net(seed);
    const int width = static_cast<int>(shape_product(state_shape));
    return Net(state_shape,
               {flatten(), dense(width, 128), relu(), dense(128, 128), relu(), dense(128, 8)},
               seed);
}

std::pair<Net, Net> build_actor_critic_for(const std::vector<int> &state_shape,
                                           std::uint64_t seed) {
    if (is_grid_shape(state_shape)) return build_actor_critic(seed);
    const int width = static_cast<int>(shape_product(state_shape));
    Net actor(state_shape,
              {flatten(), dense(width, 128), relu(), dense(128, 256), relu(), dense(256, 8),
               softmax()},
              seed);
    Net critic(state_shape,
               {flatten(), dense(width, 128), relu(), dense(128, 256), relu(), dense(256, 1)},
               seed + 1);
    return {std::move(actor), std::move(critic)};
}

Tensor state_to_input(const StateTensor &state, const std::vector<int> &input_shape) {
    if (state.values.size() != shape_product(input_shape))
        throw ShapeMismatchError("state tensor does not fit the network input");
    Tensor t(input_shape);
    t.data = state.values;
    return t;
}

namespace {

void validate_dqn_config(const DqnConfig &c) {
    if (!(c.lr > 0.0) || !(c.gamma > 0.0) || c.batch <= 0 || c.target_sync_interval <= 0 ||
        c.total_episodes <= 0 || c.epochs <= 0 || c.replay_capacity == 0)
        throw InvalidSpecError("DQN config fields must be positive");
}

void validate_ppo_config(const PpoConfig &c) {
    if (!(c.clip > 0.0 && c.clip < 1.0)) throw InvalidSpecError("clip must lie in (0, 1)");
    if (!(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0))
        throw InvalidSpecError("gae lambda must lie in [0, 1]");
    if (!(c.lr >= 0.0) || !(c.gamma > 0.0) || c.batch <= 0 || c.epochs_per_update <= 0 ||
        c.total_episodes <= 0 || c.rollout_horizon <= 0)
        throw InvalidSpecError("PPO config fields out of range");
}

} // namespace

DqnAgent::DqnAgent(const std::vector<int> &state_shape, DqnConfig config, std::uint64_t seed)
    : DqnAgent(build_q_net_for(state_shape, seed), config) {}

DqnAgent::DqnAgent(Net online, DqnConfig config)
    : config_(config), online_(std::move(online)), target_(online_),
      opt_(online_, opt_config(config.opt_mode, config.lr)), buffer_(config.replay_capacity) {
    validate_dqn_config(config_);
    if (online_.output_shape().size() != 1)
        throw ShapeMismatchError("action-value network must end in a vector");
    num_actions_ = online_.output_shape()[0];
}

std::vector<double> DqnAgent::q_values(const StateTensor &state) {
    return online_.forward(state_to_input(state, online_.input_shape())).data;
}

int DqnAgent::act(const StateTensor &state, double eps, std::mt19937_64 &rng) {
    return select_action_dqn(q_values(state), eps, rng);
}

int DqnAgent::act_greedy(const StateTensor &state) {
    const std::vector<double> q = q_values(state);
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin()) + 1;
}

double DqnAgent::train_step(std::mt19937_64 &rng) {
    const size_t batch = static_cast<size_t>(config_.batch);
    const auto samples = buffer_.sample(batch, rng);
    online_.zero_grads();
    double loss = 0.0;
    for (const Transition *t : samples) {
        if (t->action < 1 || t->action > num_actions_)
            throw InvalidSpecError("transition action out of range");
        const std::vector<double> q_next =
            target_.forward(state_to_input(t->next_state, target_.input_shape())).data;
        const double y = bellman_target(t->reward, config_.gamma, q_next, t->terminal);
        const Tensor out = online_.forward(state_to_input(t->state, online_.input_shape()));
        const double diff = out.data[t->action - 1] - y;
        loss += diff * diff / static_cast<double>(batch);
        Tensor upstream(online_.output_shape());
        upstream.data[t->action - 1] = 2.0 * diff / static_cast<double>(batch);
        online_.backward(upstream);
    }
    opt_.step(online_);
    ++updates_;
    if (updates_ % config_.target_sync_interval == 0) target_ = online_;
    return loss;
}

double actor_sample_loss(Net &actor, const Tensor &input, int action, double logp_old,
                         double advantage, double clip, bool accumulate_grads,
                         double grad_scale, double *ratio_out) {
    const Tensor probs = actor.forward(input);
    if (action < 1 || action > static_cast<int>(probs.data.size()))
        throw InvalidSpecError("action out of range for the policy head");
    const double p = probs.data[action - 1];
    const double r = std::exp(std::log(p) - logp_old);
    if (ratio_out) *ratio_out = r;
    const double unclipped = r * advantage;
    const double clamped = std::clamp(r, 1.0 - clip, 1.0 + clip) * advantage;
    if (accumulate_grads) {
        // when the clipped branch is strictly smaller the clamp has saturated
        // and no gradient flows through the ratio
        const double dobj_dr = unclipped <= clamped ? advantage : 0.0;
        Tensor upstream(actor.output_shape());
        upstream.data[action - 1] = -grad_scale * dobj_dr * r / p;
        actor.backward(upstream);
    }
    return -std::min(unclipped, clamped);
}

PpoAgent::PpoAgent(const std::vector<int> &state_shape, PpoConfig config, std::uint64_t seed)
    : PpoAgent(build_actor_critic_for(state_shape, seed), config) {}

PpoAgent::PpoAgent(std::pair<Net, Net> nets, PpoConfig config)
    : PpoAgent(std::move(nets.first), std::move(nets.second), config) {}

PpoAgent::PpoAgent(Net actor, Net critic, PpoConfig config)
    : config_(config), actor_(std::move(actor)), critic_(std::move(critic)),
      opt_actor_(actor_, opt_config(config.opt_mode, config.lr)),
      opt_critic_(critic_, opt_config(config.opt_mode, config.lr)) {
    validate_ppo_config(config_);
    if (actor_.output_shape().size() != 1 || critic_.output_shape() != std::vector<int>{1})
        throw ShapeMismatchError("actor must end in a vector and critic in a scalar");
    num_actions_ = actor_.output_shape()[0];
}

std::vector<double> PpoAgent::action_probs(const StateTensor &state) {
    return actor_.forward(state_to_input(state, actor_.input_shape())).data;
}

double PpoAgent::value(const StateTensor &state) {
    return critic_.forward(state_to_input(state, critic_.input_shape())).data[0];
}

PpoAgent::ActResult PpoAgent::act(const StateTensor &state, std::mt19937_64 &rng) {
    const std::vector<double> probs = action_probs(state);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double u = coin(rng);
    double cum = 0.0;
    int action = num_actions_;
    for (int i = 0; i < num_actions_; ++i) {
        cum += probs[i];
        if (u < cum) {
            action = i + 1;
            break;
        }
    }
    ActResult result;
    result.action = action;
    result.logp = std::log(probs[action - 1]);
    result.value = value(state);
    return result;
}

int PpoAgent::act_greedy(const StateTensor &state) {
    const std::vector<double> probs = action_probs(state);
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()) + 1;
}

PpoAgent::UpdateStats PpoAgent::update(std::mt19937_64 &rng) {
    const auto &entries = rollout_.entries();
    if (entries.empty()) throw InvalidSpecError("PPO update requires a non-empty rollout");
    const size_t n = entries.size();

    // advantages by backward recursion, restarted at each terminal boundary
    std::vector<double> advantages(n, 0.0);
    std::vector<double> returns(n, 0.0);
    size_t seg_start = 0;
    for (size_t t = 0; t < n; ++t) {
        if (!entries[t].terminal && t + 1 < n) continue;
        std::vector<double> deltas;
        deltas.reserve(t - seg_start + 1);
        for (size_t i = seg_start; i <= t; ++i) {
            const RolloutEntry &e = entries[i];
            const double boot = e.terminal ? 0.0 : e.next_value;
            deltas.push_back(e.reward + config_.gamma * boot - e.value_old);
        }
        const std::vector<double> seg_adv = gae(deltas, config_.gamma, config_.gae_lambda);
        for (size_t i = seg_start; i <= t; ++i) {
            advantages[i] = seg_adv[i - seg_start];
            returns[i] = advantages[i] + entries[i].value_old;
        }
        seg_start = t + 1;
    }

    if (config_.normalize_advantages && n > 1) {
        double mean = 0.0;
        for (double a : advantages) mean += a;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double a : advantages) var += (a - mean) * (a - mean);
        var /= static_cast<double>(n);
        const double scale = 1.0 / std::sqrt(var + 1e-8);
        for (double &a : advantages) a = (a - mean) * scale;
    }

    UpdateStats stats;
    double actor_sum = 0.0;
    double critic_sum = 0.0;
    size_t clip_hits = 0;
    size_t samples = 0;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    const size_t batch = static_cast<size_t>(config_.batch);
    for (int epoch = 0; epoch < config_.epochs_per_update; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < n; start += batch) {
            const size_t end = std::min(start + batch, n);
            const double inv = 1.0 / static_cast<double>(end - start);
            actor_.zero_grads();
            critic_.zero_grads();
            for (size_t k = start; k < end; ++k) {
                const RolloutEntry &e = entries[order[k]];
                const Tensor input = state_to_input(e.state, actor_.input_shape());
                double r = 0.0;
                actor_sum += actor_sample_loss(actor_, input, e.action, e.logp_old,
                                               advantages[order[k]], config_.clip, true, inv,
                                               &r);
                if (std::abs(r - 1.0) > config_.clip) ++clip_hits;

                const Tensor v = critic_.forward(input);
                const double diff = v.data[0] - returns[order[k]];
                critic_sum += diff * diff;
                Tensor upstream(critic_.output_shape());
                upstream.data[0] = 2.0 * diff * inv;
                critic_.backward(upstream);
                ++samples;
            }
            opt_actor_.step(actor_);
            opt_critic_.step(critic_);
        }
    }

    rollout_.clear();
    stats.actor_loss = actor_sum / static_cast<double>(samples);
    stats.critic_loss = critic_sum / static_cast<double>(samples);
    stats.clip_fraction = static_cast<double>(clip_hits) / static_cast<double>(samples);
    stats.samples = static_cast<int>(samples);
    return stats;
}

std::string train_log_csv_header(bool ppo) {
    return ppo ? "episode,steps,mean_reward,actor_loss,critic_loss,clip_fraction"
               : "episode,steps,mean_reward,loss,epsilon";
}

std::string train_log_row_csv(const TrainLogRow &row, bool ppo) {
    std::ostringstream os;
    os << row.episode << ',' << row.steps << ',' << row.mean_reward << ',' << row.loss << ',';
    if (ppo)
        os << row.aux_loss << ',' << row.schedule;
    else
        os << row.schedule;
    return os.str();
}

long long mann_kendall_s(const std::vector<double> &series) {
    long long s = 0;
    for (size_t i = 0; i < series.size(); ++i)
        for (size_t j = i + 1; j < series.size(); ++j) {
            if (series[j] > series[i]) ++s;
            else if (series[j] < series[i]) --s;
        }
    return s;
}

} // namespace atsc
