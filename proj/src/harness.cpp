#include "atsc/harness.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace atsc {

namespace fs = std::filesystem;

const char *controller_name(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::VclPpo: return "vcl_ppo";
    case ControllerKind::VclDqn: return "vcl_dqn";
    case ControllerKind::FclPpo: return "fcl_ppo";
    case ControllerKind::AggPpo: return "agg_ppo";
    case ControllerKind::FixedTime: return "fixed_time";
    case ControllerKind::Actuated: return "actuated";
    case ControllerKind::RandomPhase: return "random_phase";
    }
    return "?";
}

ControllerKind parse_controller(const std::string &name) {
    for (const ControllerKind kind :
         {ControllerKind::VclPpo, ControllerKind::VclDqn, ControllerKind::FclPpo,
          ControllerKind::AggPpo, ControllerKind::FixedTime, ControllerKind::Actuated,
          ControllerKind::RandomPhase})
        if (name == controller_name(kind)) return kind;
    throw InvalidSpecError("unknown control method '" + name + "'");
}

bool controller_uses_checkpoint(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::VclPpo:
    case ControllerKind::VclDqn:
    case ControllerKind::FclPpo:
    case ControllerKind::AggPpo: return true;
    default: return false;
    }
}

EncoderKind controller_encoder(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::VclPpo:
    case ControllerKind::VclDqn: return EncoderKind::Vcl;
    case ControllerKind::FclPpo: return EncoderKind::Fcl;
    case ControllerKind::AggPpo: return EncoderKind::Agg;
    default: throw InvalidSpecError("method has no state encoder");
    }
}

std::string ScenarioSpec::name() const {
    std::ostringstream os;
    os << "flow" << flow_veh_per_h;
    return os.str();
}

void validate_scenario(const ScenarioSpec &scenario) {
    if (!(scenario.flow_veh_per_h >= 0.0))
        throw InvalidSpecError("scenario flow must be nonnegative");
    if (!(scenario.warmup_s >= 0.0) || !(scenario.eval_s >= 0.0) ||
        !(scenario.warmup_s + scenario.eval_s > 0.0))
        throw InvalidSpecError("scenario durations must be nonnegative and not both zero");
    if (scenario.replicates < 1) throw InvalidSpecError("scenario needs at least one replicate");
}

MethodSpec MethodSpec::fixed_time() { return MethodSpec{}; }

MethodSpec MethodSpec::actuated() {
    MethodSpec m;
    m.controller = ControllerKind::Actuated;
    return m;
}

MethodSpec MethodSpec::random_phase() {
    MethodSpec m;
    m.controller = ControllerKind::RandomPhase;
    return m;
}

MethodSpec MethodSpec::rl(ControllerKind kind, std::string checkpoint,
                          PartitionSpec runtime_partition) {
    if (!controller_uses_checkpoint(kind))
        throw InvalidSpecError("method does not take a checkpoint");
    MethodSpec m;
    m.controller = kind;
    m.checkpoint_path = std::move(checkpoint);
    m.partition = runtime_partition;
    return m;
}

std::string result_csv_header() {
    return "method,scenario,replicate,cumulative_queue_veh_s,cumulative_wait_s,"
           "mean_speed_mps,total_fuel_ml";
}

namespace {

std::string replicate_label(int replicate) {
    return replicate == kMeanReplicate ? "mean" : std::to_string(replicate);
}

} // namespace

std::string result_row_csv(const ResultRow &row) {
    std::ostringstream os;
    os << row.method << ',' << row.scenario << ',' << replicate_label(row.replicate) << ','
       << row.cumulative_queue_veh_s << ',' << row.cumulative_wait_s << ','
       << row.mean_speed_mps << ',' << row.total_fuel_ml;
    return os.str();
}

ResultRow mean_of(const std::vector<ResultRow> &rows) {
    if (rows.empty()) throw InvalidSpecError("cannot average an empty result set");
    ResultRow mean;
    mean.method = rows.front().method;
    mean.scenario = rows.front().scenario;
    mean.replicate = kMeanReplicate;
    for (const ResultRow &row : rows) {
        mean.cumulative_queue_veh_s += row.cumulative_queue_veh_s;
        mean.cumulative_wait_s += row.cumulative_wait_s;
        mean.mean_speed_mps += row.mean_speed_mps;
        mean.total_fuel_ml += row.total_fuel_ml;
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    mean.cumulative_queue_veh_s *= inv;
    mean.cumulative_wait_s *= inv;
    mean.mean_speed_mps *= inv;
    mean.total_fuel_ml *= inv;
    return mean;
}

namespace {

void write_text_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingInputError("cannot open for writing: " + path);
    out << content;
}

/// Greedy policy over a loaded network; works for both the action-value and
/// the policy head, whose argmax is the deployed action either way.
struct GreedyNetController {
    Net net;
    EncoderKind encoder;
    PartitionSpec runtime;
    NormState norm;

    GreedyNetController(Net net_, EncoderKind encoder_, PartitionSpec runtime_, NormState norm_)
        : net(std::move(net_)), encoder(encoder_), runtime(runtime_), norm(norm_) {}

    PlanEntry operator()(SimWorld &world) {
        StateTensor state = TrafficEnv::encode(world, encoder, runtime, norm);
        const Tensor out = net.forward(state_to_input(state, net.input_shape()));
        const int best = static_cast<int>(
            std::max_element(out.data.begin(), out.data.end()) - out.data.begin());
        return PlanEntry{best + 1, world.params().fixed_green_s};
    }
};

PhaseController make_controller(const MethodSpec &method, std::uint64_t seed) {
    switch (method.controller) {
    case ControllerKind::FixedTime: {
        auto plan = std::make_shared<std::vector<PlanEntry>>(default_fixed_time_plan());
        auto cursor = std::make_shared<size_t>(0);
        return [plan, cursor](SimWorld &) {
            const PlanEntry entry = (*plan)[*cursor];
            *cursor = (*cursor + 1) % plan->size();
            return entry;
        };
    }
    case ControllerKind::Actuated: {
        auto cursor = std::make_shared<int>(0);
        return [cursor](SimWorld &world) {
            const int phase = 1 + *cursor;
            *cursor = (*cursor + 1) % 4;
            int queue = 0;
            for (const auto &[approach, movement] : phase_table()[phase - 1].protected_movements) {
                (void)movement;
                queue += world.queue_count(approach);
            }
            return PlanEntry{phase, actuated_green_s(queue, {})};
        };
    }
    case ControllerKind::RandomPhase: {
        auto rng = std::make_shared<std::mt19937_64>(seed ^ 0x9e3779b97f4a7c15ull);
        return [rng](SimWorld &world) {
            std::uniform_int_distribution<int> pick(1, kNumPhases);
            return PlanEntry{pick(*rng), world.params().fixed_green_s};
        };
    }
    default: {
        LoadedCheckpoint loaded = load_checkpoint(method.checkpoint_path);
        if (loaded.meta.partition.num_cells != method.partition.num_cells)
            throw TransferIncompatibleError(
                "checkpoint encodes " + std::to_string(loaded.meta.partition.num_cells) +
                " cells but the runtime layout has " +
                std::to_string(method.partition.num_cells));
        auto policy = std::make_shared<GreedyNetController>(
            std::move(loaded.net), controller_encoder(method.controller), method.partition,
            loaded.meta.norm);
        return [policy](SimWorld &world) { return (*policy)(world); };
    }
    }
}

std::string method_label(const MethodSpec &method) {
    return method.label.empty() ? controller_name(method.controller) : method.label;
}

} // namespace

ResultRow run_replicate(const ScenarioSpec &scenario, const MethodSpec &method, int replicate) {
    validate_scenario(scenario);
    validate_spec(method.partition);
    const std::uint64_t seed = scenario.seed_base + static_cast<std::uint64_t>(replicate);

    const Network net = parse_network(default_network_document());
    std::mt19937_64 rng(seed);
    const double horizon = scenario.warmup_s + scenario.eval_s;
    const DemandSpec demand = DemandSpec::fixed(scenario.flow_veh_per_h, horizon);
    const std::map<int, int> counts = generate_demand(rng, demand);
    const std::vector<Route> routes = generate_trajectories(rng, net, counts, horizon);

    SimParams sim;
    sim.detection_range_m = method.partition.detection_range_m;
    SimWorld world(net, routes, sim);
    const PhaseController controller = make_controller(method, seed);

    if (scenario.warmup_s > 0.0) {
        run_with_controller(world, controller, scenario.warmup_s);
        world.window_metrics(); // drop everything accumulated during warm-up
    }
    const std::vector<MetricsRow> rows = run_with_controller(world, controller, horizon);
    const MetricsWindow tail = world.window_metrics(); // evaluation past the last 60 s mark

    ResultRow result;
    result.method = method_label(method);
    result.scenario = scenario.name();
    result.replicate = replicate;
    double speed_weighted = 0.0, speed_time = 0.0;
    const double cadence_s = 60.0;
    for (const MetricsRow &row : rows) {
        result.cumulative_queue_veh_s += row.queue_veh_s;
        result.cumulative_wait_s += row.cur_waiting_s;
        result.total_fuel_ml += row.cur_fuel_ml;
        speed_weighted += row.cur_mean_speed_mps * cadence_s;
        speed_time += cadence_s;
    }
    if (tail.window_s > 0.0) {
        result.cumulative_queue_veh_s += tail.queue_veh_s;
        result.cumulative_wait_s += tail.cur_waiting_s;
        result.total_fuel_ml += tail.cur_fuel_ml;
        speed_weighted += tail.cur_mean_speed_mps * tail.window_s;
        speed_time += tail.window_s;
    }
    result.mean_speed_mps = speed_time > 0.0 ? speed_weighted / speed_time : 0.0;
    return result;
}

std::vector<ResultRow> run_experiment(const ScenarioSpec &scenario, const MethodSpec &method,
                                      const std::string &out_dir) {
    validate_scenario(scenario);
    std::vector<ResultRow> rows;
    rows.reserve(static_cast<size_t>(scenario.replicates) + 1);
    for (int k = 0; k < scenario.replicates; ++k)
        rows.push_back(run_replicate(scenario, method, k));
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow &a, const ResultRow &b) { return a.replicate < b.replicate; });
    rows.push_back(mean_of(rows));

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream body;
        body << result_csv_header() << '\n';
        for (const ResultRow &row : rows) body << result_row_csv(row) << '\n';
        const std::string name =
            "results_" + method_label(method) + "_" + scenario.name() + ".csv";
        write_text_file((fs::path(out_dir) / name).string(), body.str());
    }
    return rows;
}

std::vector<ResultRow> transfer_eval(const std::string &checkpoint_path,
                                     double runtime_range_m, int runtime_cells,
                                     const ScenarioSpec &scenario,
                                     const std::string &native_checkpoint_path,
                                     const std::string &out_dir) {
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    if (runtime_cells <= 0) runtime_cells = loaded.meta.partition.num_cells;
    if (loaded.meta.partition.num_cells != runtime_cells)
        throw TransferIncompatibleError(
            "checkpoint encodes " + std::to_string(loaded.meta.partition.num_cells) +
            " cells but the runtime layout has " + std::to_string(runtime_cells));

    PartitionSpec runtime = loaded.meta.partition;
    runtime.detection_range_m = runtime_range_m;
    runtime.num_cells = runtime_cells;
    validate_spec(runtime);
    rounded_layout(runtime); // the runtime layout must be feasible

    std::vector<MethodSpec> methods;
    MethodSpec transferred = MethodSpec::rl(ControllerKind::VclPpo, checkpoint_path, runtime);
    transferred.label = "transferred";
    methods.push_back(std::move(transferred));
    if (!native_checkpoint_path.empty()) {
        MethodSpec native = MethodSpec::rl(ControllerKind::VclPpo, native_checkpoint_path,
                                           runtime);
        native.label = "native";
        methods.push_back(std::move(native));
    }
    MethodSpec baseline = MethodSpec::fixed_time();
    baseline.partition = runtime;
    methods.push_back(std::move(baseline));

    std::vector<ResultRow> all;
    for (const MethodSpec &method : methods) {
        const std::vector<ResultRow> rows = run_experiment(scenario, method, "");
        all.insert(all.end(), rows.begin(), rows.end());
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream body;
        body << result_csv_header() << '\n';
        for (const ResultRow &row : all) body << result_row_csv(row) << '\n';
        write_text_file((fs::path(out_dir) / "transfer.csv").string(), body.str());
    }
    return all;
}

std::vector<ResultRow> compare_methods(const std::vector<ScenarioSpec> &scenarios,
                                       const std::vector<MethodSpec> &methods,
                                       const std::string &out_dir) {
    if (scenarios.empty() || methods.empty())
        throw InvalidSpecError("comparison needs at least one scenario and one method");

    std::vector<ResultRow> means;
    for (const ScenarioSpec &scenario : scenarios)
        for (const MethodSpec &method : methods) {
            const std::vector<ResultRow> rows = run_experiment(scenario, method, out_dir);
            means.push_back(rows.back());
        }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        auto cell = [&](const std::string &method, const std::string &scenario) {
            for (const ResultRow &row : means)
                if (row.method == method && row.scenario == scenario) return row;
            throw MissingInputError("missing comparison cell");
        };

        // mean matrices, one row per method
        for (const bool queue_metric : {true, false}) {
            std::ostringstream body;
            body << "method";
            for (const ScenarioSpec &s : scenarios) body << ',' << s.name();
            body << '\n';
            for (const MethodSpec &m : methods) {
                body << method_label(m);
                for (const ScenarioSpec &s : scenarios) {
                    const ResultRow row = cell(method_label(m), s.name());
                    body << ','
                         << (queue_metric ? row.cumulative_queue_veh_s : row.cumulative_wait_s);
                }
                body << '\n';
            }
            const char *name = queue_metric ? "summary_queue.csv" : "summary_wait.csv";
            write_text_file((fs::path(out_dir) / name).string(), body.str());
        }

        // ascending-wait rankings and the max-min spread diagnostic
        std::ostringstream ranks;
        ranks << "scenario,rank,method,cumulative_wait_s\n";
        std::ostringstream spread;
        spread << "scenario,wait_spread_s\n";
        for (const ScenarioSpec &s : scenarios) {
            std::vector<ResultRow> column;
            for (const MethodSpec &m : methods) column.push_back(cell(method_label(m), s.name()));
            std::sort(column.begin(), column.end(), [](const ResultRow &a, const ResultRow &b) {
                return a.cumulative_wait_s < b.cumulative_wait_s;
            });
            for (size_t i = 0; i < column.size(); ++i)
                ranks << s.name() << ',' << i + 1 << ',' << column[i].method << ','
                      << column[i].cumulative_wait_s << '\n';
            spread << s.name() << ','
                   << column.back().cumulative_wait_s - column.front().cumulative_wait_s << '\n';
        }
        write_text_file((fs::path(out_dir) / "rankings.csv").string(), ranks.str());
        write_text_file((fs::path(out_dir) / "spread_wait.csv").string(), spread.str());

        // long format for plotting
        std::ostringstream tidy;
        tidy << "flow_veh_per_h,scenario,method,metric,value\n";
        for (const ScenarioSpec &s : scenarios)
            for (const MethodSpec &m : methods) {
                const ResultRow row = cell(method_label(m), s.name());
                const std::pair<const char *, double> metrics[] = {
                    {"cumulative_queue_veh_s", row.cumulative_queue_veh_s},
                    {"cumulative_wait_s", row.cumulative_wait_s},
                    {"mean_speed_mps", row.mean_speed_mps},
                    {"total_fuel_ml", row.total_fuel_ml},
                };
                for (const auto &[metric, value] : metrics)
                    tidy << s.flow_veh_per_h << ',' << s.name() << ',' << row.method << ','
                         << metric << ',' << value << '\n';
            }
        write_text_file((fs::path(out_dir) / "compare_long.csv").string(), tidy.str());
    }
    return means;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) fields.push_back(field);
    return fields;
}

std::vector<std::vector<std::string>> read_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("cannot read: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw MissingInputError("empty csv: " + path);
    return rows;
}

/// "flow1000" -> "1000"; anything else passes through unchanged.
std::string scenario_x(const std::string &scenario) {
    if (scenario.rfind("flow", 0) == 0) return scenario.substr(4);
    return scenario;
}

} // namespace

void emit_plot_data(const std::vector<std::string> &input_files, const std::string &out_dir) {
    if (input_files.empty()) throw MissingInputError("no input files given");
    fs::create_directories(out_dir);
    for (const std::string &path : input_files) {
        const auto rows = read_csv(path);
        const std::string stem = fs::path(path).stem().string();
        const std::vector<std::string> &header = rows.front();

        std::ostringstream joined;
        for (size_t i = 0; i < header.size(); ++i) joined << (i ? "," : "") << header[i];

        if (joined.str() == result_csv_header()) {
            // keep the mean rows when present, otherwise everything
            std::vector<std::vector<std::string>> data(rows.begin() + 1, rows.end());
            std::vector<std::vector<std::string>> means;
            for (const auto &row : data)
                if (row.size() > 2 && row[2] == "mean") means.push_back(row);
            if (!means.empty()) data = std::move(means);

            const std::pair<const char *, size_t> metrics[] = {
                {"queue", 3}, {"wait", 4}, {"speed", 5}, {"fuel", 6}};
            for (const auto &[short_name, column] : metrics) {
                std::ostringstream body;
                body << "x,series,value\n";
                for (const auto &row : data)
                    body << scenario_x(row[1]) << ',' << row[0] << ',' << row[column] << '\n';
                const std::string name = "plot_" + stem + "_" + short_name + ".csv";
                write_text_file((fs::path(out_dir) / name).string(), body.str());
            }
        } else if (header.size() >= 3 && header[0] == "episode" && header[1] == "steps") {
            std::ostringstream body;
            body << "x,series,value\n";
            for (size_t col = 2; col < header.size(); ++col)
                for (size_t i = 1; i < rows.size(); ++i)
                    body << rows[i][0] << ',' << header[col] << ',' << rows[i][col] << '\n';
            const std::string name = "plot_" + stem + "_curves.csv";
            write_text_file((fs::path(out_dir) / name).string(), body.str());
        } else {
            throw InvalidSpecError("unrecognized csv header in " + path);
        }
    }
}

} // namespace atsc
