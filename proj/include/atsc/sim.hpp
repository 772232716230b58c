#pragma once

#include "atsc/network.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace atsc {

/// Arms are ordered by their source node id; on the default testbed that
/// puts source 1 West, 2 North, 3 East, 4 South.
enum class Approach : int { W = 0, N = 1, E = 2, S = 3 };
enum class Movement : int { Left = 0, Through = 1, Right = 2 };

constexpr int kNumArms = 4;
constexpr int kLanesPerArm = 4; // Left, Through, Through, Right
constexpr int kControlledLanesPerArm = 3;
constexpr int kNumControlledLanes = kNumArms * kControlledLanesPerArm;
constexpr int kNumPhases = 8;

const char *approach_name(Approach a);

struct SimParams {
    double dt_s = 1.0;
    double v_max_mps = 20.0;        // 72 km/h
    double accel_mps2 = 2.0;
    double decel_mps2 = 4.5;        // comfortable braking, used in the safe-speed rule
    double min_gap_m = 2.5;
    double vehicle_length_m = 5.0;
    double yellow_s = 3.0;
    double fixed_green_s = 15.0;
    double crossing_delay_s = 3.0;  // junction traversal latency
    double detection_range_m = 500.0;
    double stop_speed_mps = 0.1;    // below this a vehicle counts as waiting
};

struct Vehicle {
    int id = 0;
    Approach approach = Approach::W;
    Movement movement = Movement::Through;
    Approach exit_arm = Approach::E;
    double front_pos_m = 0.0; // distance of the front bumper from the lane start
    double speed_mps = 0.0;
    double accum_wait_s = 0.0;
    double accum_fuel_ml = 0.0;
    double last_fuel_ml = 0.0; // fuel burned during the most recent step
};

/// One of the eight signal phases; protected movements are (approach,
/// movement) pairs over Left/Through only. Right turns are permanently
/// permitted and unsignalized.
struct Phase {
    int id = 0;
    std::array<std::pair<Approach, Movement>, 2> protected_movements;
    const char *name = "";
};

const std::array<Phase, kNumPhases> &phase_table();
bool movements_conflict(Approach a1, Movement m1, Approach a2, Movement m2);

struct SignalState {
    enum class Mode { Green, Yellow };
    int active_phase = 1;
    Mode mode = Mode::Green;
    double time_in_mode_s = 0.0;
    double mode_remaining_s = 0.0;
    int pending_phase = 1; // takes over when yellow elapses
};

/// Traffic measurements accumulated since the previous read. Waiting, speed
/// and fuel are scoped to vehicles within the detection range on controlled
/// lanes; queue counts cover the whole controlled lanes.
struct MetricsWindow {
    double window_s = 0.0;
    double cur_waiting_s = 0.0;
    double cur_mean_speed_mps = 0.0;
    double cur_fuel_ml = 0.0;
    double queue_veh_s = 0.0; // time-integrated total queue over the window
    std::array<int, kNumArms> queue_by_approach{};
};

struct MetricsRow {
    double sim_time_s = 0.0;
    double cur_waiting_s = 0.0;
    double cur_mean_speed_mps = 0.0;
    double cur_fuel_ml = 0.0;
    std::array<int, kNumArms> queue{};
    int active_phase = 0;
    double queue_veh_s = 0.0;
};

std::string metrics_csv_header();
std::string metrics_row_csv(const MetricsRow &row);

/// Per-vehicle observation used by the state encoders: distance of the front
/// bumper to the stop line, current speed, and vehicle length.
struct VehicleObs {
    double dist_to_stop_m = 0.0;
    double speed_mps = 0.0;
    double length_m = 5.0;
};

/// Idle-plus-speed-plus-acceleration fuel proxy, milliliters per step.
double fuel_step(double speed_mps, double accel_mps2, double dt_s);

struct ConservationCounts {
    std::int64_t scheduled = 0;
    std::int64_t injected = 0;
    std::int64_t on_network = 0;
    std::int64_t exited = 0;
};

class SimWorld {
  public:
    SimWorld(const Network &net, const std::vector<Route> &routes, SimParams params = {});

    /// Advances the world by one dt. Throws ConsistencyError on overlap.
    void step();

    /// Requests a phase. A change inserts a yellow interval first; selecting
    /// the active phase again extends its green without yellow. green_s
    /// defaults to the fixed green time.
    void set_phase(int phase, std::optional<double> green_s = std::nullopt);

    /// True when the current green has elapsed and a decision is due.
    bool decision_due() const;

    int queue_count(Approach approach) const;
    std::array<int, kNumArms> queue_counts() const;

    /// Reads and resets the metrics accumulated since the previous call.
    MetricsWindow window_metrics();

    /// Observations for one controlled lane; slot 0 = left, 1..2 = through.
    std::vector<VehicleObs> controlled_lane_obs(int arm, int slot) const;

    const SignalState &signal() const { return signal_; }
    const SimParams &params() const { return params_; }
    double clock_s() const { return clock_s_; }
    double approach_length_m(int arm) const { return approach_len_m_[arm]; }
    ConservationCounts counts() const;

    /// True while the (approach, movement) pair has a protected green.
    bool movement_protected(Approach a, Movement m) const;

    /// Test support: verifies ordering/spacing on every lane.
    void check_consistency() const;

  private:
    struct PendingVehicle {
        double depart_s = 0.0;
        Vehicle vehicle;
    };
    struct CrossingVehicle {
        Vehicle vehicle;
        double remaining_s = 0.0;
    };
    using LaneVec = std::vector<Vehicle>; // ordered by front_pos descending

    void advance_signal();
    void inject_arrivals();
    void update_approach_lane(int arm, int slot);
    void update_exit_lane(int arm, int slot);
    void update_junction();
    void accumulate_metrics();
    bool try_enter_exit_arm(Vehicle &veh);
    double lane_entry_clearance(const LaneVec &lane) const;
    void update_vehicle(Vehicle &veh, double allowed_travel_m, double leader_speed_mps,
                        bool anticipate);

    SimParams params_;
    double clock_s_ = 0.0;
    SignalState signal_;
    double pending_green_s_ = 15.0; // green to apply when the current yellow elapses

    std::array<double, kNumArms> approach_len_m_{};
    std::array<double, kNumArms> exit_len_m_{};
    std::array<std::array<LaneVec, kLanesPerArm>, kNumArms> approach_lanes_;
    std::array<std::array<LaneVec, kLanesPerArm>, kNumArms> exit_lanes_;
    std::array<std::array<std::deque<PendingVehicle>, kLanesPerArm>, kNumArms> pending_;
    std::vector<PendingVehicle> schedule_; // sorted by depart time, consumed front to back
    size_t next_scheduled_ = 0;
    std::vector<CrossingVehicle> junction_;

    std::int64_t injected_ = 0;
    std::int64_t exited_ = 0;

    // metrics accumulators since the last window read
    double acc_window_s_ = 0.0;
    double acc_waiting_s_ = 0.0;
    double acc_speed_sum_ = 0.0;
    std::int64_t acc_speed_samples_ = 0;
    double acc_fuel_ml_ = 0.0;
    double acc_queue_veh_s_ = 0.0;
};

/// Cyclic fixed-time plan entry.
struct PlanEntry {
    int phase = 1;
    double green_s = 15.0;
};

std::vector<PlanEntry> default_fixed_time_plan();

struct ActuatedParams {
    double headway_s = 2.0;
    double min_green_s = 15.0;
    double max_green_s = 60.0;
};

/// Queue-responsive green duration: clamp(queue × headway, min, max).
double actuated_green_s(int queue_count, const ActuatedParams &params);

/// Steps the world until horizon_s, consulting the controller at every
/// decision point; emits one metrics row per cadence_s of simulated time.
using PhaseController = std::function<PlanEntry(SimWorld &)>;
std::vector<MetricsRow> run_with_controller(SimWorld &world, const PhaseController &controller,
                                            double horizon_s, double cadence_s = 60.0);

std::vector<MetricsRow> run_fixed_time(SimWorld &world, const std::vector<PlanEntry> &plan,
                                       double horizon_s);
std::vector<MetricsRow> run_actuated(SimWorld &world, const ActuatedParams &params,
                                     double horizon_s);

} // namespace atsc
