#pragma once

#include "atsc/checkpoint.hpp"
#include "atsc/env.hpp"
#include "atsc/partition.hpp"
#include "atsc/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace atsc {

enum class ControllerKind { VclPpo, VclDqn, FclPpo, AggPpo, FixedTime, Actuated, RandomPhase };

const char *controller_name(ControllerKind kind);
ControllerKind parse_controller(const std::string &name); // throws InvalidSpecError
bool controller_uses_checkpoint(ControllerKind kind);
EncoderKind controller_encoder(ControllerKind kind); // RL kinds only

struct ScenarioSpec {
    double flow_veh_per_h = 1000.0;
    double warmup_s = 1800.0;
    double eval_s = 5400.0;
    int replicates = 10;
    std::uint64_t seed_base = 1;

    std::string name() const; // "flow1000"
};

void validate_scenario(const ScenarioSpec &scenario);

struct MethodSpec {
    ControllerKind controller = ControllerKind::FixedTime;
    std::string checkpoint_path;              // RL controllers only
    PartitionSpec partition{500.0, 7.0, 10};  // runtime detection layout
    std::string label;                        // row label; empty = controller name

    static MethodSpec fixed_time();
    static MethodSpec actuated();
    static MethodSpec random_phase();
    static MethodSpec rl(ControllerKind kind, std::string checkpoint,
                         PartitionSpec runtime_partition);
};

struct ResultRow {
    std::string method;
    std::string scenario;
    int replicate = 0; // kMeanReplicate marks the across-replicates mean row
    double cumulative_queue_veh_s = 0.0;
    double cumulative_wait_s = 0.0;
    double mean_speed_mps = 0.0;
    double total_fuel_ml = 0.0;
};

constexpr int kMeanReplicate = -1;

std::string result_csv_header();
std::string result_row_csv(const ResultRow &row);
ResultRow mean_of(const std::vector<ResultRow> &rows);

/// Runs one seeded replicate: warm-up (metrics discarded) followed by the
/// evaluation window, aggregated over 60 s metric rows.
ResultRow run_replicate(const ScenarioSpec &scenario, const MethodSpec &method, int replicate);

/// All replicates of one (scenario, method) cell plus the mean row; writes
/// results_<method>_<scenario>.csv under out_dir when out_dir is non-empty.
std::vector<ResultRow> run_experiment(const ScenarioSpec &scenario, const MethodSpec &method,
                                      const std::string &out_dir);

/// Runs the transferred checkpoint at a different detection range against an
/// optional natively trained checkpoint and the fixed-time baseline on shared
/// seeds. Throws TransferIncompatibleError when cell counts differ.
std::vector<ResultRow> transfer_eval(const std::string &checkpoint_path,
                                     double runtime_range_m, int runtime_cells,
                                     const ScenarioSpec &scenario,
                                     const std::string &native_checkpoint_path,
                                     const std::string &out_dir);

/// Evaluates every (scenario, method) pair; writes per-cell result files, the
/// mean matrices, ascending-wait rankings, the per-scenario spread
/// diagnostic, and a long-format CSV for plotting. Returns the mean rows.
std::vector<ResultRow> compare_methods(const std::vector<ScenarioSpec> &scenarios,
                                       const std::vector<MethodSpec> &methods,
                                       const std::string &out_dir);

/// Re-emits result or training-log CSVs as tidy (x, series, value) files
/// under out_dir; byte-identical on unchanged inputs.
void emit_plot_data(const std::vector<std::string> &input_files, const std::string &out_dir);

/// Command-line entry: 0 on success, 2 on configuration errors, 3 on runtime
/// failures.
int run_cli(const std::vector<std::string> &args);

} // namespace atsc
