#pragma once

#include <optional>
#include <string>
#include <vector>

namespace atsc {

/// Parameters of the logarithmic-linear road partition: a detection range of
/// d meters is split into n cells whose lengths grow with distance from the
/// stop line, the first cell being l1 meters.
struct PartitionSpec {
    double detection_range_m = 500.0; // d
    double first_cell_m = 7.0;        // l1
    int num_cells = 10;               // n
};

/// Coefficients of the cell length function f(x) = a*ln(x+1) + b*x.
struct Coefficients {
    double a = 0.0;
    double b = 0.0;
};

/// A resolved partition. Cells are indexed 1..n starting at the stop line.
/// lengths_m holds the rounded layout (cells 1..n-1 are whole meters, the
/// last cell absorbs the remainder so the sum equals the detection range
/// exactly). boundaries_m has n+1 entries, boundaries_m[0] == 0, and cell k
/// covers the half-open interval [boundaries_m[k-1], boundaries_m[k]).
struct CellLayout {
    PartitionSpec spec;
    std::vector<double> lengths_m;
    std::vector<double> real_lengths_m;
    std::vector<double> boundaries_m;

    int num_cells() const { return static_cast<int>(lengths_m.size()); }
    double detection_range_m() const { return spec.detection_range_m; }
};

/// Throws InvalidSpecError unless d > l1 > 0 and n >= 2.
void validate_spec(const PartitionSpec &spec);

/// Solves f(1) = l1 and sum f(x) = d for (a, b).
Coefficients solve_coefficients(const PartitionSpec &spec);

/// Evaluates f(x) for x = 1..n. Throws NonPositiveCellError or
/// NonMonotonicLayoutError when the spec is infeasible.
std::vector<double> cell_lengths(const PartitionSpec &spec);

/// Rounds cells 1..n-1 half-up to whole meters and assigns the remainder to
/// cell n. Throws if the rounded sequence is not strictly increasing and
/// positive (LastCellInvalidError when the remainder cell is the offender).
CellLayout rounded_layout(const PartitionSpec &spec);

/// Uniform layout of n cells of range/n meters each (the fixed-cell-length
/// ablation baseline).
CellLayout uniform_layout(double range_m, int num_cells);

/// 1-based index of the cell containing the given distance from the stop
/// line, or nullopt when the distance lies outside [0, d). Callers skip
/// out-of-range vehicles.
std::optional<int> cell_index_of(double distance_to_stopline_m, const CellLayout &layout);

/// Reports every violated CellLayout invariant; empty means valid.
std::vector<std::string> validate_layout(const CellLayout &layout);

} // namespace atsc
