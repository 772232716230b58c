#include "atsc/errors.hpp"
#include "atsc/harness.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace atsc {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path);
    out << content;
}

void print_rows(const std::vector<ResultRow> &rows, bool means_only) {
    std::cout << result_csv_header() << '\n';
    for (const ResultRow &row : rows)
        if (!means_only || row.replicate == kMeanReplicate)
            std::cout << result_row_csv(row) << '\n';
}

} // namespace

int run_cli(const std::vector<std::string> &args) {
    CLI::App app{"traffic-signal control workbench"};
    app.fallthrough(); // global flags may follow the subcommand
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file");

    std::uint64_t seed = 1;
    std::string out_dir = "out";
    app.add_option("--seed", seed, "base RNG seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    // ---- partition: print a cell layout table ------------------------------
    auto *cmd_partition = app.add_subcommand("partition", "print a cell layout");
    double part_range = 500.0, part_first = 7.0;
    int part_cells = 10;
    bool part_uniform = false;
    cmd_partition->add_option("--range", part_range, "detection range, m")->capture_default_str();
    cmd_partition->add_option("--first-cell", part_first, "first cell length, m")
        ->capture_default_str();
    cmd_partition->add_option("--cells", part_cells, "number of cells")->capture_default_str();
    cmd_partition->add_flag("--uniform", part_uniform, "equal-length cells instead of log-linear");

    // ---- gen-routes: demand + random-walk trajectories ---------------------
    auto *cmd_routes = app.add_subcommand("gen-routes", "generate seeded vehicle routes");
    double routes_flow = 1600.0, routes_horizon = 3600.0;
    int routes_mult_min = 0, routes_mult_max = 0;
    std::string routes_name = "routes.txt";
    cmd_routes->add_option("--flow", routes_flow, "total flow, veh/h")->capture_default_str();
    auto *routes_mult_min_opt = cmd_routes->add_option(
        "--flow-mult-min", routes_mult_min, "min demand multiplier (x400 veh/h, jittered)");
    cmd_routes->add_option("--flow-mult-max", routes_mult_max, "max demand multiplier")
        ->needs(routes_mult_min_opt);
    cmd_routes->add_option("--horizon", routes_horizon, "departure horizon, s")
        ->capture_default_str();
    cmd_routes->add_option("--name", routes_name, "output file name")->capture_default_str();

    // ---- train: fit an agent and write checkpoint + curve ------------------
    auto *cmd_train = app.add_subcommand("train", "train an agent");
    std::string train_agent, train_state = "vcl", train_name;
    cmd_train->add_option("--agent", train_agent, "agent kind")
        ->required()
        ->check(CLI::IsMember({"ppo", "dqn"}));
    cmd_train->add_option("--state", train_state, "state encoder")
        ->check(CLI::IsMember({"vcl", "fcl", "agg"}))
        ->capture_default_str();
    double train_range = 500.0, train_first = 7.0;
    int train_cells = 10;
    cmd_train->add_option("--range", train_range, "detection range, m")->capture_default_str();
    cmd_train->add_option("--first-cell", train_first, "first cell length, m")
        ->capture_default_str();
    auto *train_cells_opt =
        cmd_train->add_option("--cells", train_cells, "number of cells")->capture_default_str();
    double train_flow = 1600.0, train_horizon = 3600.0, train_green = 15.0;
    int train_mult_min = 0, train_mult_max = 0, train_refresh = 25;
    cmd_train->add_option("--flow", train_flow, "fixed total flow, veh/h")->capture_default_str();
    auto *train_mult_min_opt = cmd_train->add_option(
        "--flow-mult-min", train_mult_min, "min demand multiplier (stochastic flow mode)");
    cmd_train->add_option("--flow-mult-max", train_mult_max, "max demand multiplier")
        ->needs(train_mult_min_opt);
    cmd_train->add_option("--horizon", train_horizon, "episode length, s")->capture_default_str();
    cmd_train->add_option("--green", train_green, "green per decision, s")->capture_default_str();
    cmd_train->add_option("--refresh", train_refresh, "episodes between demand refreshes")
        ->capture_default_str();
    DqnConfig dqn_defaults;
    PpoConfig ppo_defaults;
    int train_episodes = ppo_defaults.total_episodes;
    double train_lr = 0.0; // 0 = keep the agent's default
    double train_gamma = ppo_defaults.gamma;
    int train_batch = ppo_defaults.batch;
    bool train_plain_sgd = false;
    cmd_train->add_option("--episodes", train_episodes, "training episodes")
        ->capture_default_str();
    cmd_train->add_option("--lr", train_lr, "learning rate (0 = agent default)");
    cmd_train->add_option("--gamma", train_gamma, "discount factor")->capture_default_str();
    cmd_train->add_option("--batch", train_batch, "minibatch size")->capture_default_str();
    cmd_train->add_flag("--plain-sgd", train_plain_sgd,
                        "plain gradient steps instead of adaptive moments");
    int train_target_sync = dqn_defaults.target_sync_interval;
    int train_epochs = dqn_defaults.epochs;
    std::uint64_t train_replay = dqn_defaults.replay_capacity;
    cmd_train->add_option("--target-sync", train_target_sync, "dqn: updates between target syncs")
        ->capture_default_str();
    cmd_train->add_option("--passes", train_epochs, "dqn: outer passes over the episode loop")
        ->capture_default_str();
    cmd_train->add_option("--replay-capacity", train_replay, "dqn: replay buffer capacity")
        ->capture_default_str();
    double train_clip = ppo_defaults.clip, train_gae = ppo_defaults.gae_lambda;
    int train_epochs_per_update = ppo_defaults.epochs_per_update;
    int train_rollout = ppo_defaults.rollout_horizon;
    bool train_no_adv_norm = false;
    cmd_train->add_option("--clip", train_clip, "ppo: surrogate clip width")
        ->capture_default_str();
    cmd_train->add_option("--gae-lambda", train_gae, "ppo: advantage decay")
        ->capture_default_str();
    cmd_train
        ->add_option("--epochs-per-update", train_epochs_per_update,
                     "ppo: minibatch passes per update")
        ->capture_default_str();
    cmd_train->add_option("--rollout", train_rollout, "ppo: decisions collected per update")
        ->capture_default_str();
    cmd_train->add_flag("--no-adv-norm", train_no_adv_norm,
                        "ppo: skip advantage normalization");
    cmd_train->add_option("--name", train_name, "checkpoint base name (default agent_state)");

    // ---- eval: replicated evaluation of one control method -----------------
    auto *cmd_eval = app.add_subcommand("eval", "evaluate one control method");
    std::string eval_method, eval_ckpt;
    cmd_eval->add_option("--method", eval_method, "control method")
        ->required()
        ->check(CLI::IsMember({"vcl_ppo", "vcl_dqn", "fcl_ppo", "agg_ppo", "fixed_time",
                               "actuated", "random_phase"}));
    cmd_eval->add_option("--ckpt", eval_ckpt, "checkpoint path (RL methods)");
    double eval_range = 500.0, eval_first = 7.0;
    int eval_cells = 10;
    cmd_eval->add_option("--range", eval_range, "runtime detection range, m")
        ->capture_default_str();
    cmd_eval->add_option("--first-cell", eval_first, "first cell length, m")
        ->capture_default_str();
    cmd_eval->add_option("--cells", eval_cells, "number of cells")->capture_default_str();
    double eval_flow = 1000.0, eval_warmup = 1800.0, eval_window = 5400.0;
    int eval_replicates = 10;
    cmd_eval->add_option("--flow", eval_flow, "total flow, veh/h")->capture_default_str();
    cmd_eval->add_option("--warmup", eval_warmup, "warm-up period, s")->capture_default_str();
    cmd_eval->add_option("--eval", eval_window, "evaluation window, s")->capture_default_str();
    cmd_eval->add_option("--replicates", eval_replicates, "seeded replicates")
        ->capture_default_str();

    // ---- transfer: cross-range deployment comparison -----------------------
    auto *cmd_transfer = app.add_subcommand("transfer",
                                            "run a checkpoint at a different detection range");
    std::string transfer_ckpt, transfer_native;
    double transfer_range = 0.0;
    int transfer_cells = 0;
    cmd_transfer->add_option("--ckpt", transfer_ckpt, "trained checkpoint")->required();
    cmd_transfer->add_option("--runtime-range", transfer_range, "deployment detection range, m")
        ->required();
    cmd_transfer
        ->add_option("--cells", transfer_cells, "runtime cell count (0 = checkpoint's own)")
        ->capture_default_str();
    cmd_transfer->add_option("--native-ckpt", transfer_native,
                             "checkpoint trained at the runtime range, for reference");
    double transfer_flow = 1000.0, transfer_warmup = 1800.0, transfer_window = 1800.0;
    int transfer_replicates = 10;
    cmd_transfer->add_option("--flow", transfer_flow, "total flow, veh/h")->capture_default_str();
    cmd_transfer->add_option("--warmup", transfer_warmup, "warm-up period, s")
        ->capture_default_str();
    cmd_transfer->add_option("--eval", transfer_window, "evaluation window, s")
        ->capture_default_str();
    cmd_transfer->add_option("--replicates", transfer_replicates, "seeded replicates")
        ->capture_default_str();

    // ---- compare: scenario x method matrix ----------------------------------
    auto *cmd_compare = app.add_subcommand("compare", "compare control methods across flows");
    std::string cmp_vcl_ppo, cmp_vcl_dqn, cmp_fcl_ppo, cmp_agg_ppo;
    cmd_compare->add_option("--ckpt-vcl-ppo", cmp_vcl_ppo, "vcl_ppo checkpoint")->required();
    cmd_compare->add_option("--ckpt-vcl-dqn", cmp_vcl_dqn, "vcl_dqn checkpoint")->required();
    cmd_compare->add_option("--ckpt-fcl-ppo", cmp_fcl_ppo, "fcl_ppo checkpoint")->required();
    cmd_compare->add_option("--ckpt-agg-ppo", cmp_agg_ppo, "agg_ppo checkpoint")->required();
    bool cmp_baselines = false;
    cmd_compare->add_flag("--with-baselines", cmp_baselines,
                          "include fixed-time, actuated and random-phase rows");
    std::vector<double> cmp_flows{500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0};
    cmd_compare->add_option("--flows", cmp_flows, "scenario flows, veh/h")
        ->delimiter(',')
        ->capture_default_str();
    double cmp_warmup = 1800.0, cmp_window = 5400.0;
    int cmp_replicates = 10;
    cmd_compare->add_option("--warmup", cmp_warmup, "warm-up period, s")->capture_default_str();
    cmd_compare->add_option("--eval", cmp_window, "evaluation window, s")->capture_default_str();
    cmd_compare->add_option("--replicates", cmp_replicates, "seeded replicates")
        ->capture_default_str();

    // ---- plot-data: results/curves -> tidy series --------------------------
    auto *cmd_plot = app.add_subcommand("plot-data", "re-emit CSVs as (x, series, value) files");
    std::vector<std::string> plot_inputs;
    cmd_plot->add_option("inputs", plot_inputs, "result or training-log CSV files")
        ->required()
        ->expected(-1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(cmd_partition)) {
            const CellLayout layout =
                part_uniform ? uniform_layout(part_range, part_cells)
                             : rounded_layout({part_range, part_first, part_cells});
            std::cout << "cell,length_m,exact_m,outer_boundary_m\n";
            for (int i = 0; i < layout.num_cells(); ++i)
                std::cout << i + 1 << ',' << layout.lengths_m[i] << ','
                          << layout.real_lengths_m[i] << ',' << layout.boundaries_m[i + 1]
                          << '\n';
        } else if (app.got_subcommand(cmd_routes)) {
            const Network net = parse_network(default_network_document());
            DemandSpec demand = DemandSpec::fixed(routes_flow, routes_horizon);
            if (routes_mult_min_opt->count() > 0) {
                demand = DemandSpec{};
                demand.flow_mult_min = routes_mult_min;
                demand.flow_mult_max = std::max(routes_mult_max, routes_mult_min);
                demand.horizon_s = routes_horizon;
            }
            std::mt19937_64 rng(seed);
            const std::map<int, int> counts = generate_demand(rng, demand);
            const std::vector<Route> routes =
                generate_trajectories(rng, net, counts, routes_horizon);
            fs::create_directories(out_dir);
            const std::string path = (fs::path(out_dir) / routes_name).string();
            write_text(path, routes_to_text(routes));
            std::cout << "wrote " << routes.size() << " routes to " << path << '\n';
        } else if (app.got_subcommand(cmd_train)) {
            EnvConfig env_cfg;
            env_cfg.encoder = parse_encoder(train_state);
            if (env_cfg.encoder == EncoderKind::Agg && train_cells_opt->count() > 0) {
                std::cerr << "warning: --cells is ignored by the aggregate encoder\n";
                train_cells = env_cfg.partition.num_cells;
            }
            env_cfg.partition = PartitionSpec{train_range, train_first, train_cells};
            env_cfg.horizon_s = train_horizon;
            env_cfg.green_s = train_green;
            env_cfg.demand_refresh_episodes = train_refresh;
            env_cfg.demand = DemandSpec::fixed(train_flow, train_horizon);
            if (train_mult_min_opt->count() > 0) {
                env_cfg.demand = DemandSpec{};
                env_cfg.demand.flow_mult_min = train_mult_min;
                env_cfg.demand.flow_mult_max = std::max(train_mult_max, train_mult_min);
                env_cfg.demand.horizon_s = train_horizon;
            }
            TrafficEnv env(env_cfg);
            fs::create_directories(out_dir);
            const std::string base =
                train_name.empty() ? train_agent + "_" + train_state : train_name;
            const std::string ckpt_path = (fs::path(out_dir) / (base + ".ckpt")).string();
            const std::string curve_path =
                (fs::path(out_dir) / (base + "_curve.csv")).string();
            const auto opt_mode = train_plain_sgd ? OptimizerConfig::Mode::PlainSgd
                                                  : OptimizerConfig::Mode::Adaptive;
            if (train_agent == "dqn") {
                DqnConfig cfg;
                if (train_lr > 0.0) cfg.lr = train_lr;
                cfg.gamma = train_gamma;
                cfg.batch = train_batch;
                cfg.target_sync_interval = train_target_sync;
                cfg.total_episodes = train_episodes;
                cfg.epochs = train_epochs;
                cfg.replay_capacity = train_replay;
                cfg.opt_mode = opt_mode;
                DqnTrainResult result = train_dqn(env, cfg, seed);
                save_checkpoint(ckpt_path, result.agent.online(),
                                CheckpointMeta{env_cfg.partition, env.norm()});
                write_train_log(curve_path, result.log, false);
                std::cout << "wrote " << ckpt_path << " and " << curve_path << " ("
                          << result.log.size() << " episodes)\n";
            } else {
                PpoConfig cfg;
                if (train_lr > 0.0) cfg.lr = train_lr;
                cfg.gamma = train_gamma;
                cfg.clip = train_clip;
                cfg.gae_lambda = train_gae;
                cfg.batch = train_batch;
                cfg.epochs_per_update = train_epochs_per_update;
                cfg.total_episodes = train_episodes;
                cfg.rollout_horizon = train_rollout;
                cfg.normalize_advantages = !train_no_adv_norm;
                cfg.opt_mode = opt_mode;
                PpoTrainResult result = train_ppo(env, cfg, seed);
                save_checkpoint(ckpt_path, result.agent.actor(),
                                CheckpointMeta{env_cfg.partition, env.norm()});
                write_train_log(curve_path, result.log, true);
                std::cout << "wrote " << ckpt_path << " and " << curve_path << " ("
                          << result.log.size() << " episodes)\n";
            }
        } else if (app.got_subcommand(cmd_eval)) {
            const ControllerKind kind = parse_controller(eval_method);
            const PartitionSpec runtime{eval_range, eval_first, eval_cells};
            MethodSpec method;
            if (controller_uses_checkpoint(kind)) {
                if (eval_ckpt.empty())
                    throw InvalidSpecError("--ckpt is required for method " + eval_method);
                method = MethodSpec::rl(kind, eval_ckpt, runtime);
            } else {
                method.controller = kind;
                method.partition = runtime;
            }
            ScenarioSpec scenario{eval_flow, eval_warmup, eval_window, eval_replicates, seed};
            const std::vector<ResultRow> rows = run_experiment(scenario, method, out_dir);
            print_rows({rows.back()}, false);
        } else if (app.got_subcommand(cmd_transfer)) {
            ScenarioSpec scenario{transfer_flow, transfer_warmup, transfer_window,
                                  transfer_replicates, seed};
            const std::vector<ResultRow> rows = transfer_eval(
                transfer_ckpt, transfer_range, transfer_cells, scenario, transfer_native,
                out_dir);
            print_rows(rows, true);
        } else if (app.got_subcommand(cmd_compare)) {
            std::vector<ScenarioSpec> scenarios;
            for (const double flow : cmp_flows)
                scenarios.push_back(
                    ScenarioSpec{flow, cmp_warmup, cmp_window, cmp_replicates, seed});
            std::vector<MethodSpec> methods;
            const std::pair<ControllerKind, std::string> rl_methods[] = {
                {ControllerKind::VclPpo, cmp_vcl_ppo},
                {ControllerKind::VclDqn, cmp_vcl_dqn},
                {ControllerKind::FclPpo, cmp_fcl_ppo},
                {ControllerKind::AggPpo, cmp_agg_ppo},
            };
            for (const auto &[kind, path] : rl_methods) {
                // each policy runs at the layout it was trained with
                const CheckpointMeta meta = load_checkpoint(path).meta;
                methods.push_back(MethodSpec::rl(kind, path, meta.partition));
            }
            if (cmp_baselines) {
                methods.push_back(MethodSpec::fixed_time());
                methods.push_back(MethodSpec::actuated());
                methods.push_back(MethodSpec::random_phase());
            }
            const std::vector<ResultRow> means = compare_methods(scenarios, methods, out_dir);
            print_rows(means, false);
        } else if (app.got_subcommand(cmd_plot)) {
            emit_plot_data(plot_inputs, out_dir);
            std::cout << "wrote plot data for " << plot_inputs.size() << " file(s) under "
                      << out_dir << '\n';
        }
    } catch (const InvalidSpecError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidPlanError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MissingInputError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DegenerateDenominatorError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NonMonotonicLayoutError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NonPositiveCellError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const LastCellInvalidError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

} // namespace atsc
