#include "atsc/state.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace atsc {

double NormState::channel_max(int channel) const {
    switch (channel) {
    case 0: return count_max;
    case 1: return speed_max;
    case 2: return occupancy_max;
    default: throw ShapeMismatchError("channel index outside 0..2");
    }
}

void NormState::raise(int channel, double value) {
    switch (channel) {
    case 0: count_max = std::max(count_max, value); break;
    case 1: speed_max = std::max(speed_max, value); break;
    case 2: occupancy_max = std::max(occupancy_max, value); break;
    default: throw ShapeMismatchError("channel index outside 0..2");
    }
}

double occupancy(double cell_lo_m, double cell_hi_m, const std::vector<VehicleObs> &vehicles) {
    const double cell_len = cell_hi_m - cell_lo_m;
    if (!(cell_len > 0.0)) throw InvalidSpecError("cell interval must have positive length");
    double covered = 0.0;
    for (const VehicleObs &veh : vehicles) {
        const double lo = std::max(cell_lo_m, veh.dist_to_stop_m);
        const double hi = std::min(cell_hi_m, veh.dist_to_stop_m + veh.length_m);
        covered += std::max(0.0, hi - lo);
    }
    return std::min(1.0, covered / cell_len);
}

std::vector<std::vector<VehicleObs>> collect_lane_obs(const SimWorld &world) {
    std::vector<std::vector<VehicleObs>> lanes;
    lanes.reserve(kStateLanes);
    for (int arm = 0; arm < kNumArms; ++arm)
        for (int slot = 0; slot < kControlledLanesPerArm; ++slot)
            lanes.push_back(world.controlled_lane_obs(arm, slot));
    return lanes;
}

StateTensor encode_from_obs(const std::vector<std::vector<VehicleObs>> &lane_obs,
                            const CellLayout &layout) {
    if (lane_obs.size() != kStateLanes)
        throw ShapeMismatchError("expected " + std::to_string(kStateLanes) + " lanes, got " +
                                 std::to_string(lane_obs.size()));
    const int n = layout.spec.num_cells;
    StateTensor tensor(kStateLanes, n, kStateChannels);
    for (int lane = 0; lane < kStateLanes; ++lane) {
        const auto &vehicles = lane_obs[lane];
        std::vector<int> counts(n, 0);
        std::vector<double> speed_sums(n, 0.0);
        for (const VehicleObs &veh : vehicles) {
            const auto cell = cell_index_of(veh.dist_to_stop_m, layout);
            if (!cell) continue; // beyond the detection range (or past the line)
            counts[*cell - 1] += 1;
            speed_sums[*cell - 1] += veh.speed_mps;
        }
        for (int c = 0; c < n; ++c) {
            tensor.at(lane, c, 0) = counts[c];
            tensor.at(lane, c, 1) = counts[c] > 0 ? speed_sums[c] / counts[c] : 0.0;
            tensor.at(lane, c, 2) =
                occupancy(layout.boundaries_m[c], layout.boundaries_m[c + 1], vehicles);
        }
    }
    return tensor;
}

StateTensor encode_raw(const SimWorld &world, const CellLayout &layout) {
    return encode_from_obs(collect_lane_obs(world), layout);
}

StateTensor encode_fcl(const SimWorld &world, double detection_range_m, int num_cells) {
    return encode_from_obs(collect_lane_obs(world), uniform_layout(detection_range_m, num_cells));
}

StateTensor encode_aggregate(const SimWorld &world, double detection_range_m) {
    if (!(detection_range_m > 0.0)) throw InvalidSpecError("detection range must be positive");
    const auto lanes = collect_lane_obs(world);
    StateTensor tensor(kStateLanes, 1, kStateChannels);
    for (int lane = 0; lane < kStateLanes; ++lane) {
        int count = 0;
        double speed_sum = 0.0;
        std::vector<VehicleObs> in_range;
        for (const VehicleObs &veh : lanes[lane]) {
            if (veh.dist_to_stop_m < 0.0 || veh.dist_to_stop_m > detection_range_m) continue;
            count += 1;
            speed_sum += veh.speed_mps;
            in_range.push_back(veh);
        }
        tensor.at(lane, 0, 0) = count;
        tensor.at(lane, 0, 1) = count > 0 ? speed_sum / count : 0.0;
        tensor.at(lane, 0, 2) = occupancy(0.0, detection_range_m, in_range);
    }
    return tensor;
}

StateTensor normalize(const StateTensor &raw, NormState &norm) {
    if (raw.channels != kStateChannels)
        throw ShapeMismatchError("normalization expects three channels");
    for (int ch = 0; ch < kStateChannels; ++ch) {
        double batch_max = 0.0;
        for (int lane = 0; lane < raw.lanes; ++lane)
            for (int cell = 0; cell < raw.cells; ++cell)
                batch_max = std::max(batch_max, raw.at(lane, cell, ch));
        norm.raise(ch, batch_max); // update first so outputs never exceed 1
    }
    StateTensor out = raw;
    for (int ch = 0; ch < kStateChannels; ++ch) {
        const double denom = norm.channel_max(ch);
        for (int lane = 0; lane < raw.lanes; ++lane)
            for (int cell = 0; cell < raw.cells; ++cell)
                out.at(lane, cell, ch) = raw.at(lane, cell, ch) / denom;
    }
    return out;
}

double reward(double cur_waiting_s, double cur_mean_speed_mps, double cur_fuel_ml,
              const RewardWeights &weights) {
    const double wait_pen = std::min(cur_waiting_s / weights.norm_wait_s, 1.0);
    const double speed_rew = std::min(cur_mean_speed_mps / weights.norm_speed_mps, 1.0);
    const double fuel_pen = std::min(cur_fuel_ml / weights.norm_fuel_ml, 1.0);
    return weights.w_wait * wait_pen + weights.w_speed * speed_rew + weights.w_fuel * fuel_pen;
}

double reward(const MetricsWindow &window, const RewardWeights &weights) {
    return reward(window.cur_waiting_s, window.cur_mean_speed_mps, window.cur_fuel_ml, weights);
}

namespace {

void put_i32(std::vector<std::uint8_t> &out, std::int32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::int32_t get_i32(const std::vector<std::uint8_t> &in, size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
    return static_cast<std::int32_t>(v);
}

} // namespace

std::vector<std::uint8_t> state_to_bytes(const StateTensor &tensor) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + tensor.size() * 4);
    put_i32(out, tensor.lanes);
    put_i32(out, tensor.cells);
    put_i32(out, tensor.channels);
    for (double v : tensor.values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_i32(out, static_cast<std::int32_t>(bits));
    }
    return out;
}

StateTensor state_from_bytes(const std::vector<std::uint8_t> &bytes) {
    if (bytes.size() < 12) throw ParseError("state dump shorter than its shape header");
    const int lanes = get_i32(bytes, 0);
    const int cells = get_i32(bytes, 4);
    const int channels = get_i32(bytes, 8);
    if (lanes <= 0 || cells <= 0 || channels <= 0)
        throw ParseError("state dump header has non-positive dimensions");
    const size_t count = static_cast<size_t>(lanes) * cells * channels;
    if (bytes.size() != 12 + count * 4)
        throw ParseError("state dump length does not match its header");
    StateTensor tensor(lanes, cells, channels);
    for (size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(get_i32(bytes, 12 + i * 4));
        float f;
        std::memcpy(&f, &bits, 4);
        tensor.values[i] = f;
    }
    return tensor;
}

} // namespace atsc
