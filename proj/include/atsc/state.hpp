#pragma once

#include "atsc/partition.hpp"
#include "atsc/sim.hpp"

#include <cstdint>
#include <vector>

namespace atsc {

constexpr int kStateLanes = 12; // 4 arms x (left + two through)
constexpr int kStateCells = 10;
constexpr int kStateChannels = 3; // vehicle count, mean speed, space occupancy

/// Lane-major, then cell, then channel.
struct StateTensor {
    int lanes = 0;
    int cells = 0;
    int channels = 0;
    std::vector<double> values;

    StateTensor() = default;
    StateTensor(int lanes_, int cells_, int channels_)
        : lanes(lanes_), cells(cells_), channels(channels_),
          values(static_cast<size_t>(lanes_) * cells_ * channels_, 0.0) {}

    double &at(int lane, int cell, int channel) {
        return values[(static_cast<size_t>(lane) * cells + cell) * channels + channel];
    }
    double at(int lane, int cell, int channel) const {
        return values[(static_cast<size_t>(lane) * cells + cell) * channels + channel];
    }
    size_t size() const { return values.size(); }
};

/// Running per-channel maxima used for historical-max normalization. The
/// floors keep the denominators strictly positive from the first sample.
struct NormState {
    double count_max = 1.0;
    double speed_max = 20.0; // the speed limit
    double occupancy_max = 1.0;

    double channel_max(int channel) const;
    void raise(int channel, double value);
};

struct RewardWeights {
    double w_wait = -0.7;
    double w_speed = 0.2;
    double w_fuel = -0.1;
    double norm_wait_s = 200.0;
    double norm_speed_mps = 20.0;
    double norm_fuel_ml = 100.0;
};

/// Summed overlap of the vehicles with [cell_lo, cell_hi), divided by the
/// cell length; a vehicle occupies [dist_to_stop, dist_to_stop + length].
double occupancy(double cell_lo_m, double cell_hi_m, const std::vector<VehicleObs> &vehicles);

/// Unnormalized three-channel tensor from explicit per-lane observations.
/// Count and mean speed assign each vehicle to the cell holding its front
/// bumper; occupancy apportions exact interval overlap.
StateTensor encode_from_obs(const std::vector<std::vector<VehicleObs>> &lane_obs,
                            const CellLayout &layout);

/// Observations straight from the world's 12 controlled lanes, ordered
/// arm-major (W, N, E, S) and left-through-through within an arm.
std::vector<std::vector<VehicleObs>> collect_lane_obs(const SimWorld &world);

StateTensor encode_raw(const SimWorld &world, const CellLayout &layout);

/// Same encoder over uniform cells of length d/n.
StateTensor encode_fcl(const SimWorld &world, double detection_range_m, int num_cells);

/// Non-discretized ablation: per lane [in-range count, mean speed,
/// whole-lane occupancy], shaped lanes x 1 x 3 (36 entries).
StateTensor encode_aggregate(const SimWorld &world, double detection_range_m);

/// Divides each channel by its historical max, raising the max first when
/// the batch exceeds it so outputs stay in [0, 1].
StateTensor normalize(const StateTensor &raw, NormState &norm);

double reward(double cur_waiting_s, double cur_mean_speed_mps, double cur_fuel_ml,
              const RewardWeights &weights = {});
double reward(const MetricsWindow &window, const RewardWeights &weights = {});

/// Debug/checkpoint dump: three little-endian int32 shape fields followed by
/// the values as little-endian 32-bit floats.
std::vector<std::uint8_t> state_to_bytes(const StateTensor &tensor);
StateTensor state_from_bytes(const std::vector<std::uint8_t> &bytes);

} // namespace atsc
