#include "atsc/train.hpp"

#include "atsc/errors.hpp"

#include <fstream>

namespace atsc {

DqnTrainResult train_dqn(TrafficEnv &env, const DqnConfig &config, std::uint64_t seed) {
    DqnAgent agent(env.state_shape(), config, seed);
    std::mt19937_64 rng(seed);
    const int total = config.epochs * config.total_episodes;

    std::vector<TrainLogRow> log;
    log.reserve(static_cast<size_t>(total));
    for (int episode = 0; episode < total; ++episode) {
        const double eps = epsilon(episode, total);
        StateTensor state = env.reset(episode, rng);
        double reward_sum = 0.0;
        double loss_sum = 0.0;
        int steps = 0;
        int updates = 0;
        while (!env.done()) {
            const int action = agent.act(state, eps, rng);
            StepResult res = env.step(action);
            agent.remember({state, action, res.reward, res.state, res.done});
            state = std::move(res.state);
            reward_sum += res.reward;
            ++steps;
            if (agent.buffer().size() >= static_cast<size_t>(config.batch)) {
                loss_sum += agent.train_step(rng);
                ++updates;
            }
        }
        TrainLogRow row;
        row.episode = episode;
        row.steps = steps;
        row.mean_reward = steps > 0 ? reward_sum / steps : 0.0;
        row.loss = updates > 0 ? loss_sum / updates : 0.0;
        row.schedule = eps;
        log.push_back(row);
    }
    return {std::move(log), std::move(agent)};
}

PpoTrainResult train_ppo(TrafficEnv &env, const PpoConfig &config, std::uint64_t seed) {
    PpoAgent agent(env.state_shape(), config, seed);
    std::mt19937_64 rng(seed);

    std::vector<TrainLogRow> log;
    log.reserve(static_cast<size_t>(config.total_episodes));
    PpoAgent::UpdateStats last{};
    for (int episode = 0; episode < config.total_episodes; ++episode) {
        StateTensor state = env.reset(episode, rng);
        double reward_sum = 0.0;
        int steps = 0;
        double actor_sum = 0.0;
        double critic_sum = 0.0;
        double clip_sum = 0.0;
        int updates = 0;
        while (!env.done()) {
            const PpoAgent::ActResult choice = agent.act(state, rng);
            StepResult res = env.step(choice.action);
            RolloutEntry entry;
            entry.state = std::move(state);
            entry.action = choice.action;
            entry.reward = res.reward;
            entry.terminal = res.done;
            entry.logp_old = choice.logp;
            entry.value_old = choice.value;
            entry.next_value = res.done ? 0.0 : agent.value(res.state);
            agent.store(std::move(entry));
            state = std::move(res.state);
            reward_sum += res.reward;
            ++steps;
            const bool final_flush = episode + 1 == config.total_episodes && env.done();
            if (agent.rollout().size() >= static_cast<size_t>(config.rollout_horizon) ||
                (final_flush && agent.rollout().size() > 0)) {
                last = agent.update(rng);
                actor_sum += last.actor_loss;
                critic_sum += last.critic_loss;
                clip_sum += last.clip_fraction;
                ++updates;
            }
        }
        TrainLogRow row;
        row.episode = episode;
        row.steps = steps;
        row.mean_reward = steps > 0 ? reward_sum / steps : 0.0;
        // between updates, carry the most recent losses so every row is filled
        row.loss = updates > 0 ? actor_sum / updates : last.actor_loss;
        row.aux_loss = updates > 0 ? critic_sum / updates : last.critic_loss;
        row.schedule = updates > 0 ? clip_sum / updates : last.clip_fraction;
        log.push_back(row);
    }
    return {std::move(log), std::move(agent)};
}

void write_train_log(const std::string &path, const std::vector<TrainLogRow> &rows, bool ppo) {
    std::ofstream out(path);
    if (!out) throw MissingInputError("cannot open training log for writing: " + path);
    out << train_log_csv_header(ppo) << '\n';
    for (const TrainLogRow &row : rows) out << train_log_row_csv(row, ppo) << '\n';
}

} // namespace atsc
