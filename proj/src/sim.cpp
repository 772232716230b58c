#include "atsc/sim.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace atsc {

namespace {

constexpr int kLeftSlot = 0;
constexpr int kThroughSlot1 = 1;
constexpr int kThroughSlot2 = 2;
constexpr int kRightSlot = 3;

// With arms ordered W, N, E, S clockwise from west, a left turn exits one
// position clockwise, a through movement exits opposite, a right turn three.
Movement movement_of(int in_arm, int out_arm) {
    const int delta = (out_arm - in_arm + kNumArms) % kNumArms;
    switch (delta) {
    case 1: return Movement::Left;
    case 2: return Movement::Through;
    case 3: return Movement::Right;
    default: throw TopologyError("route re-enters its own approach arm");
    }
}

int slot_for_movement(Movement m) {
    switch (m) {
    case Movement::Left: return kLeftSlot;
    case Movement::Through: return kThroughSlot1; // resolved against lane load later
    case Movement::Right: return kRightSlot;
    }
    throw Error("unreachable movement");
}

} // namespace

const char *approach_name(Approach a) {
    switch (a) {
    case Approach::W: return "W";
    case Approach::N: return "N";
    case Approach::E: return "E";
    case Approach::S: return "S";
    }
    return "?";
}

const std::array<Phase, kNumPhases> &phase_table() {
    using A = Approach;
    using M = Movement;
    static const std::array<Phase, kNumPhases> table = {{
        {1, {{{A::E, M::Through}, {A::W, M::Through}}}, "EW-Through"},
        {2, {{{A::E, M::Left}, {A::W, M::Left}}}, "EW-Left"},
        {3, {{{A::N, M::Through}, {A::S, M::Through}}}, "NS-Through"},
        {4, {{{A::N, M::Left}, {A::S, M::Left}}}, "NS-Left"},
        {5, {{{A::E, M::Through}, {A::E, M::Left}}}, "E-Through+Left"},
        {6, {{{A::S, M::Through}, {A::S, M::Left}}}, "S-Through+Left"},
        {7, {{{A::W, M::Through}, {A::W, M::Left}}}, "W-Through+Left"},
        {8, {{{A::N, M::Through}, {A::N, M::Left}}}, "N-Through+Left"},
    }};
    return table;
}

bool movements_conflict(Approach a1, Movement m1, Approach a2, Movement m2) {
    if (m1 == Movement::Right || m2 == Movement::Right) return false;
    if (a1 == a2) return false;
    const int i1 = static_cast<int>(a1);
    const int i2 = static_cast<int>(a2);
    const bool opposite = (i1 + 2) % kNumArms == i2;
    if (opposite) return m1 != m2; // paired through or paired left flows do not cross
    return true;                   // perpendicular approaches always cross
}

std::string metrics_csv_header() {
    return "sim_time_s,cur_waiting_s,cur_mean_speed_mps,cur_fuel_ml,"
           "queue_N,queue_E,queue_S,queue_W,active_phase";
}

std::string metrics_row_csv(const MetricsRow &row) {
    std::ostringstream os;
    os << row.sim_time_s << ',' << row.cur_waiting_s << ',' << row.cur_mean_speed_mps << ','
       << row.cur_fuel_ml << ',' << row.queue[static_cast<int>(Approach::N)] << ','
       << row.queue[static_cast<int>(Approach::E)] << ','
       << row.queue[static_cast<int>(Approach::S)] << ','
       << row.queue[static_cast<int>(Approach::W)] << ',' << row.active_phase;
    return os.str();
}

double fuel_step(double speed_mps, double accel_mps2, double dt_s) {
    constexpr double c_idle = 0.25; // mL/s at idle
    constexpr double c_v = 0.035;   // mL per meter travelled
    constexpr double c_p = 0.06;    // mL per unit of positive accel power
    const double rate = c_idle + c_v * speed_mps + c_p * std::max(0.0, accel_mps2) * speed_mps;
    return std::max(0.0, rate) * dt_s;
}

SimWorld::SimWorld(const Network &net, const std::vector<Route> &routes, SimParams params)
    : params_(params) {
    const int hub = net.signalized_node();
    const auto &hub_neighbors = net.nodes.at(hub).neighbors;
    if (hub_neighbors.size() != kNumArms)
        throw TopologyError("signalized node must join exactly four arms");

    // Walk each arm outward from the hub to its source; arms are then
    // ordered by source id so the compass labels are stable.
    struct Arm {
        int source = 0;
        int inner = 0; // hub-adjacent node, identifies the arm in routes
        double length_m = 0.0;
    };
    std::vector<Arm> arms;
    for (int inner : hub_neighbors) {
        int prev = hub;
        int cur = inner;
        double length = net.edge_length_m;
        while (net.nodes.at(cur).kind != NodeKind::SourceSink) {
            const auto &nbrs = net.nodes.at(cur).neighbors;
            if (nbrs.size() != 2)
                throw TopologyError("arm node " + std::to_string(cur) + " must have degree 2");
            const int next = nbrs[0] == prev ? nbrs[1] : nbrs[0];
            prev = cur;
            cur = next;
            length += net.edge_length_m;
        }
        arms.push_back({cur, inner, length});
    }
    std::sort(arms.begin(), arms.end(), [](const Arm &a, const Arm &b) { return a.source < b.source; });

    std::map<int, int> arm_of_inner; // hub-adjacent node id -> arm index
    for (int i = 0; i < kNumArms; ++i) {
        arm_of_inner[arms[i].inner] = i;
        approach_len_m_[i] = arms[i].length_m;
        exit_len_m_[i] = arms[i].length_m;
    }

    for (const auto &route : routes) {
        const auto it = std::find(route.node_sequence.begin(), route.node_sequence.end(), hub);
        if (it == route.node_sequence.end() || it == route.node_sequence.begin() ||
            it + 1 == route.node_sequence.end())
            throw TopologyError("route " + std::to_string(route.vehicle_id) +
                                " does not pass through the signalized intersection");
        const int in_arm = arm_of_inner.at(*(it - 1));
        const int out_arm = arm_of_inner.at(*(it + 1));
        Vehicle veh;
        veh.id = route.vehicle_id;
        veh.approach = static_cast<Approach>(in_arm);
        veh.movement = movement_of(in_arm, out_arm);
        veh.exit_arm = static_cast<Approach>(out_arm);
        veh.front_pos_m = 0.0;
        veh.speed_mps = 0.0;
        schedule_.push_back({route.depart_time_s, veh});
    }
    std::stable_sort(schedule_.begin(), schedule_.end(),
                     [](const PendingVehicle &a, const PendingVehicle &b) {
                         return a.depart_s < b.depart_s;
                     });

    signal_.active_phase = 1;
    signal_.mode = SignalState::Mode::Green;
    signal_.mode_remaining_s = 0.0; // first decision is due immediately
    signal_.pending_phase = 1;
}

bool SimWorld::movement_protected(Approach a, Movement m) const {
    if (m == Movement::Right) return true; // right turns are always permitted
    if (signal_.mode != SignalState::Mode::Green) return false;
    const Phase &phase = phase_table()[signal_.active_phase - 1];
    for (const auto &[pa, pm] : phase.protected_movements)
        if (pa == a && pm == m) return true;
    return false;
}

void SimWorld::set_phase(int phase, std::optional<double> green_s) {
    if (phase < 1 || phase > kNumPhases)
        throw InvalidSpecError("phase " + std::to_string(phase) + " outside 1.." +
                               std::to_string(kNumPhases));
    const double green = green_s.value_or(params_.fixed_green_s);
    if (!(green > 0.0)) throw InvalidSpecError("green time must be positive");
    if (signal_.mode == SignalState::Mode::Green && phase == signal_.active_phase) {
        signal_.mode_remaining_s = green; // extension, no yellow
        return;
    }
    if (signal_.mode == SignalState::Mode::Yellow) {
        signal_.pending_phase = phase; // redirect the pending change
        return;
    }
    signal_.mode = SignalState::Mode::Yellow;
    signal_.time_in_mode_s = 0.0;
    signal_.mode_remaining_s = params_.yellow_s;
    signal_.pending_phase = phase;
    // remember the requested green so it applies when yellow elapses
    pending_green_s_ = green;
}

bool SimWorld::decision_due() const {
    return signal_.mode == SignalState::Mode::Green && signal_.mode_remaining_s <= 1e-9;
}

void SimWorld::advance_signal() {
    signal_.time_in_mode_s += params_.dt_s;
    signal_.mode_remaining_s -= params_.dt_s;
    if (signal_.mode == SignalState::Mode::Yellow && signal_.mode_remaining_s <= 1e-9) {
        signal_.mode = SignalState::Mode::Green;
        signal_.active_phase = signal_.pending_phase;
        signal_.time_in_mode_s = 0.0;
        signal_.mode_remaining_s = pending_green_s_;
    }
}

double SimWorld::lane_entry_clearance(const LaneVec &lane) const {
    if (lane.empty()) return std::numeric_limits<double>::infinity();
    const Vehicle &last = lane.back();
    return last.front_pos_m - params_.vehicle_length_m - params_.min_gap_m;
}

void SimWorld::inject_arrivals() {
    while (next_scheduled_ < schedule_.size() &&
           schedule_[next_scheduled_].depart_s <= clock_s_ + 1e-9) {
        PendingVehicle pv = schedule_[next_scheduled_++];
        const int arm = static_cast<int>(pv.vehicle.approach);
        int slot = slot_for_movement(pv.vehicle.movement);
        if (pv.vehicle.movement == Movement::Through) {
            // Balance the two through lanes by current load including the
            // vehicles still waiting to enter.
            const size_t load1 =
                approach_lanes_[arm][kThroughSlot1].size() + pending_[arm][kThroughSlot1].size();
            const size_t load2 =
                approach_lanes_[arm][kThroughSlot2].size() + pending_[arm][kThroughSlot2].size();
            slot = load2 < load1 ? kThroughSlot2 : kThroughSlot1;
        }
        pending_[arm][slot].push_back(std::move(pv));
    }
    for (int arm = 0; arm < kNumArms; ++arm) {
        for (int slot = 0; slot < kLanesPerArm; ++slot) {
            auto &queue = pending_[arm][slot];
            auto &lane = approach_lanes_[arm][slot];
            while (!queue.empty() && lane_entry_clearance(lane) >= 0.0) {
                lane.push_back(std::move(queue.front().vehicle));
                queue.pop_front();
                injected_ += 1;
            }
        }
    }
}

void SimWorld::update_vehicle(Vehicle &veh, double allowed_travel_m, double leader_speed_mps,
                              bool anticipate) {
    const double dt = params_.dt_s;
    const double v_prev = veh.speed_mps;
    double v = std::min(v_prev + params_.accel_mps2 * dt, params_.v_max_mps);
    if (anticipate) {
        // Krauss-style bound: be able to stop within the gap plus whatever
        // distance the leader needs to stop at comfortable deceleration.
        const double v_safe = std::sqrt(std::max(
            0.0, leader_speed_mps * leader_speed_mps + 2.0 * params_.decel_mps2 * allowed_travel_m));
        v = std::min(v, v_safe);
    }
    v = std::min(v, std::max(0.0, allowed_travel_m) / dt); // hard no-overlap bound
    v = std::max(0.0, v);
    veh.front_pos_m += v * dt;
    veh.speed_mps = v;
    const double accel = (v - v_prev) / dt;
    veh.last_fuel_ml = fuel_step(v, accel, dt);
    veh.accum_fuel_ml += veh.last_fuel_ml;
    if (v < params_.stop_speed_mps) veh.accum_wait_s += dt;
}

void SimWorld::update_approach_lane(int arm, int slot) {
    auto &lane = approach_lanes_[arm][slot];
    if (lane.empty()) return;
    const double stop_line = approach_len_m_[arm];
    const Approach approach = static_cast<Approach>(arm);

    for (size_t i = 0; i < lane.size(); ++i) {
        Vehicle &veh = lane[i];
        double allowed;
        double leader_speed;
        bool anticipate = true;
        if (i == 0) {
            if (movement_protected(approach, veh.movement)) {
                // free run toward the junction
                allowed = params_.v_max_mps * params_.dt_s + 1.0;
                leader_speed = params_.v_max_mps;
                anticipate = false;
            } else {
                // red or yellow: the stop line acts as a stopped leader
                allowed = stop_line - veh.front_pos_m;
                leader_speed = 0.0;
            }
        } else {
            const Vehicle &leader = lane[i - 1]; // already moved this step
            allowed = leader.front_pos_m - params_.vehicle_length_m - params_.min_gap_m -
                      veh.front_pos_m;
            leader_speed = leader.speed_mps;
        }
        update_vehicle(veh, allowed, leader_speed, anticipate);
    }

    // Front vehicle crossing the stop line with a protected movement hands
    // over to the junction with a fixed traversal latency.
    if (!lane.empty()) {
        Vehicle &front = lane.front();
        if (front.front_pos_m >= stop_line - 1e-9 &&
            movement_protected(approach, front.movement)) {
            CrossingVehicle crossing;
            crossing.vehicle = front;
            crossing.remaining_s = params_.crossing_delay_s;
            junction_.push_back(std::move(crossing));
            lane.erase(lane.begin());
        }
    }
}

bool SimWorld::try_enter_exit_arm(Vehicle &veh) {
    const int arm = static_cast<int>(veh.exit_arm);
    int best_slot = -1;
    double best_clearance = 0.0;
    for (int slot = 0; slot < kLanesPerArm; ++slot) {
        const double clearance = lane_entry_clearance(exit_lanes_[arm][slot]);
        if (clearance >= 0.0 && (best_slot < 0 || clearance > best_clearance)) {
            best_slot = slot;
            best_clearance = clearance;
        }
    }
    if (best_slot < 0) return false;
    veh.front_pos_m = 0.0;
    exit_lanes_[arm][best_slot].push_back(std::move(veh));
    return true;
}

void SimWorld::update_junction() {
    for (auto it = junction_.begin(); it != junction_.end();) {
        it->remaining_s -= params_.dt_s;
        if (it->remaining_s <= 1e-9) {
            if (try_enter_exit_arm(it->vehicle)) {
                it = junction_.erase(it);
                continue;
            }
            it->remaining_s = 0.0; // downstream blocked; retry next step
            it->vehicle.speed_mps = 0.0;
            it->vehicle.accum_wait_s += params_.dt_s;
        }
        ++it;
    }
}

void SimWorld::update_exit_lane(int arm, int slot) {
    auto &lane = exit_lanes_[arm][slot];
    for (size_t i = 0; i < lane.size(); ++i) {
        Vehicle &veh = lane[i];
        if (i == 0) {
            update_vehicle(veh, params_.v_max_mps * params_.dt_s + 1.0, params_.v_max_mps, false);
        } else {
            const Vehicle &leader = lane[i - 1];
            const double allowed = leader.front_pos_m - params_.vehicle_length_m -
                                   params_.min_gap_m - veh.front_pos_m;
            update_vehicle(veh, allowed, leader.speed_mps, true);
        }
    }
    while (!lane.empty() && lane.front().front_pos_m >= exit_len_m_[arm]) {
        lane.erase(lane.begin());
        exited_ += 1;
    }
}

void SimWorld::accumulate_metrics() {
    const double dt = params_.dt_s;
    int total_queue = 0;
    for (int arm = 0; arm < kNumArms; ++arm) {
        const double stop_line = approach_len_m_[arm];
        for (int slot = 0; slot < kControlledLanesPerArm; ++slot) {
            for (const Vehicle &veh : approach_lanes_[arm][slot]) {
                if (veh.speed_mps < params_.stop_speed_mps) total_queue += 1;
                const double dist = stop_line - veh.front_pos_m;
                if (dist > params_.detection_range_m) continue;
                if (veh.speed_mps < params_.stop_speed_mps) acc_waiting_s_ += dt;
                acc_speed_sum_ += veh.speed_mps;
                acc_speed_samples_ += 1;
                acc_fuel_ml_ += veh.last_fuel_ml;
            }
        }
    }
    acc_queue_veh_s_ += total_queue * dt;
    acc_window_s_ += dt;
}

void SimWorld::step() {
    inject_arrivals();
    // The junction advances before the approaches so a vehicle crossing this
    // step spends three full steps in traversal before joining its exit lane.
    update_junction();
    for (int arm = 0; arm < kNumArms; ++arm)
        for (int slot = 0; slot < kLanesPerArm; ++slot) update_approach_lane(arm, slot);
    for (int arm = 0; arm < kNumArms; ++arm)
        for (int slot = 0; slot < kLanesPerArm; ++slot) update_exit_lane(arm, slot);
    advance_signal();
    clock_s_ += params_.dt_s;
    accumulate_metrics();
    check_consistency();
}

int SimWorld::queue_count(Approach approach) const {
    const int arm = static_cast<int>(approach);
    int count = 0;
    for (int slot = 0; slot < kControlledLanesPerArm; ++slot)
        for (const Vehicle &veh : approach_lanes_[arm][slot])
            if (veh.speed_mps < params_.stop_speed_mps) count += 1;
    return count;
}

std::array<int, kNumArms> SimWorld::queue_counts() const {
    std::array<int, kNumArms> out{};
    for (int arm = 0; arm < kNumArms; ++arm) out[arm] = queue_count(static_cast<Approach>(arm));
    return out;
}

MetricsWindow SimWorld::window_metrics() {
    MetricsWindow win;
    win.window_s = acc_window_s_;
    win.cur_waiting_s = acc_waiting_s_;
    win.cur_mean_speed_mps = acc_speed_samples_ > 0 ? acc_speed_sum_ / acc_speed_samples_ : 0.0;
    win.cur_fuel_ml = acc_fuel_ml_;
    win.queue_veh_s = acc_queue_veh_s_;
    win.queue_by_approach = queue_counts();
    acc_window_s_ = 0.0;
    acc_waiting_s_ = 0.0;
    acc_speed_sum_ = 0.0;
    acc_speed_samples_ = 0;
    acc_fuel_ml_ = 0.0;
    acc_queue_veh_s_ = 0.0;
    return win;
}

std::vector<VehicleObs> SimWorld::controlled_lane_obs(int arm, int slot) const {
    if (arm < 0 || arm >= kNumArms || slot < 0 || slot >= kControlledLanesPerArm)
        throw InvalidSpecError("controlled lane index out of range");
    std::vector<VehicleObs> out;
    const double stop_line = approach_len_m_[arm];
    for (const Vehicle &veh : approach_lanes_[arm][slot])
        out.push_back({stop_line - veh.front_pos_m, veh.speed_mps, params_.vehicle_length_m});
    return out;
}

ConservationCounts SimWorld::counts() const {
    ConservationCounts c;
    c.scheduled = static_cast<std::int64_t>(schedule_.size());
    c.injected = injected_;
    c.exited = exited_;
    std::int64_t on_net = 0;
    for (int arm = 0; arm < kNumArms; ++arm)
        for (int slot = 0; slot < kLanesPerArm; ++slot)
            on_net += static_cast<std::int64_t>(approach_lanes_[arm][slot].size() +
                                                exit_lanes_[arm][slot].size());
    on_net += static_cast<std::int64_t>(junction_.size());
    c.on_network = on_net;
    return c;
}

void SimWorld::check_consistency() const {
    // follower front + min_gap must stay at or behind the leader's rear
    const double spacing = params_.vehicle_length_m + params_.min_gap_m;
    auto check_lane = [&](const LaneVec &lane, const char *what, int arm, int slot) {
        for (size_t i = 1; i < lane.size(); ++i) {
            const double bound = lane[i - 1].front_pos_m - spacing;
            if (lane[i].front_pos_m > bound + 1e-6) {
                std::ostringstream os;
                os << "vehicle spacing violated on " << what << " arm " << arm << " lane "
                   << slot << ": vehicle " << lane[i].id << " front " << lane[i].front_pos_m
                   << " behind leader front " << lane[i - 1].front_pos_m;
                throw ConsistencyError(os.str());
            }
        }
    };
    for (int arm = 0; arm < kNumArms; ++arm) {
        for (int slot = 0; slot < kLanesPerArm; ++slot) {
            check_lane(approach_lanes_[arm][slot], "approach", arm, slot);
            check_lane(exit_lanes_[arm][slot], "exit", arm, slot);
        }
    }
}

std::vector<PlanEntry> default_fixed_time_plan() {
    return {{1, 30.0}, {2, 15.0}, {3, 30.0}, {4, 15.0}};
}

std::vector<MetricsRow> run_with_controller(SimWorld &world, const PhaseController &controller,
                                            double horizon_s, double cadence_s) {
    std::vector<MetricsRow> rows;
    double next_emit = world.clock_s() + cadence_s; // cadence relative to the call
    while (world.clock_s() < horizon_s - 1e-9) {
        if (world.decision_due()) {
            const PlanEntry entry = controller(world);
            world.set_phase(entry.phase, entry.green_s);
        }
        world.step();
        if (world.clock_s() >= next_emit - 1e-9) {
            const MetricsWindow win = world.window_metrics();
            MetricsRow row;
            row.sim_time_s = world.clock_s();
            row.cur_waiting_s = win.cur_waiting_s;
            row.cur_mean_speed_mps = win.cur_mean_speed_mps;
            row.cur_fuel_ml = win.cur_fuel_ml;
            row.queue = win.queue_by_approach;
            row.active_phase = world.signal().active_phase;
            row.queue_veh_s = win.queue_veh_s;
            rows.push_back(row);
            next_emit += cadence_s;
        }
    }
    return rows;
}

std::vector<MetricsRow> run_fixed_time(SimWorld &world, const std::vector<PlanEntry> &plan,
                                       double horizon_s) {
    if (plan.empty()) throw InvalidPlanError("fixed-time plan is empty");
    // Every controlled movement must receive green somewhere in the cycle.
    std::array<std::array<bool, 2>, kNumArms> served{};
    for (const PlanEntry &entry : plan) {
        if (entry.phase < 1 || entry.phase > kNumPhases)
            throw InvalidPlanError("plan phase " + std::to_string(entry.phase) + " outside 1..8");
        if (!(entry.green_s > 0.0)) throw InvalidPlanError("plan green time must be positive");
        for (const auto &[a, m] : phase_table()[entry.phase - 1].protected_movements)
            served[static_cast<int>(a)][static_cast<int>(m)] = true;
    }
    for (int arm = 0; arm < kNumArms; ++arm)
        for (int m = 0; m < 2; ++m)
            if (!served[arm][m])
                throw InvalidPlanError(std::string("plan never serves ") +
                                       approach_name(static_cast<Approach>(arm)) +
                                       (m == static_cast<int>(Movement::Left) ? " left"
                                                                              : " through"));
    size_t cursor = 0;
    return run_with_controller(
        world,
        [&plan, &cursor](SimWorld &) {
            const PlanEntry entry = plan[cursor];
            cursor = (cursor + 1) % plan.size();
            return entry;
        },
        horizon_s);
}

double actuated_green_s(int queue_count, const ActuatedParams &params) {
    return std::clamp(queue_count * params.headway_s, params.min_green_s, params.max_green_s);
}

std::vector<MetricsRow> run_actuated(SimWorld &world, const ActuatedParams &params,
                                     double horizon_s) {
    // Cycles phases 1-4, stretching each green by the queue it serves.
    static const std::array<int, 4> cycle = {1, 2, 3, 4};
    size_t cursor = 0;
    return run_with_controller(
        world,
        [&params, &cursor](SimWorld &w) {
            const int phase = cycle[cursor];
            cursor = (cursor + 1) % cycle.size();
            int queue = 0;
            for (const auto &[a, m] : phase_table()[phase - 1].protected_movements) {
                (void)m;
                queue += w.queue_count(a);
            }
            return PlanEntry{phase, actuated_green_s(queue, params)};
        },
        horizon_s);
}

} // namespace atsc
