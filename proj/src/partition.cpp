#include "atsc/partition.hpp"

#include "atsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atsc {

namespace {

double sum_log_terms(int n) {
    // sum_{x=1..n} ln(x+1) == ln((n+1)!)
    double s = 0.0;
    for (int x = 1; x <= n; ++x) s += std::log(static_cast<double>(x + 1));
    return s;
}

double sum_linear_terms(int n) { return 0.5 * static_cast<double>(n) * (n + 1); }

double round_half_up(double v) { return std::floor(v + 0.5); }

} // namespace

void validate_spec(const PartitionSpec &spec) {
    if (!(spec.first_cell_m > 0.0))
        throw InvalidSpecError("first cell length must be positive");
    if (!(spec.detection_range_m > spec.first_cell_m))
        throw InvalidSpecError("detection range must exceed the first cell length");
    if (spec.num_cells < 2)
        throw InvalidSpecError("at least two cells required");
}

Coefficients solve_coefficients(const PartitionSpec &spec) {
    validate_spec(spec);
    const int n = spec.num_cells;
    const double sum_log = sum_log_terms(n);
    const double sum_lin = sum_linear_terms(n);
    const double denom = sum_log - std::log(2.0) * sum_lin;
    if (std::abs(denom) < 1e-12)
        throw DegenerateDenominatorError("partition system is singular");
    const double numer = spec.detection_range_m - spec.first_cell_m * sum_lin;
    Coefficients c;
    c.a = numer / denom;
    c.b = spec.first_cell_m - std::log(2.0) * numer / denom;
    return c;
}

std::vector<double> cell_lengths(const PartitionSpec &spec) {
    const Coefficients c = solve_coefficients(spec);
    const int n = spec.num_cells;
    std::vector<double> lengths(n);
    for (int x = 1; x <= n; ++x)
        lengths[x - 1] = c.a * std::log(static_cast<double>(x + 1)) + c.b * x;
    for (int i = 0; i < n; ++i) {
        if (!(lengths[i] > 0.0)) {
            std::ostringstream os;
            os << "cell " << (i + 1) << " has non-positive length " << lengths[i];
            throw NonPositiveCellError(os.str());
        }
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (!(lengths[i + 1] > lengths[i])) {
            std::ostringstream os;
            os << "cell lengths not strictly increasing at index " << (i + 2);
            throw NonMonotonicLayoutError(os.str());
        }
    }
    return lengths;
}

CellLayout rounded_layout(const PartitionSpec &spec) {
    CellLayout layout;
    layout.spec = spec;
    layout.real_lengths_m = cell_lengths(spec);
    const int n = spec.num_cells;

    layout.lengths_m.resize(n);
    double prefix = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        layout.lengths_m[i] = round_half_up(layout.real_lengths_m[i]);
        prefix += layout.lengths_m[i];
    }
    // The last cell absorbs the rounding remainder so the sum equals d.
    layout.lengths_m[n - 1] = spec.detection_range_m - prefix;

    const double last = layout.lengths_m[n - 1];
    if (!(last > 0.0) || !(last > layout.lengths_m[n - 2]))
        throw LastCellInvalidError("remainder cell violates positivity or monotonicity");
    for (int i = 0; i + 1 < n; ++i) {
        if (!(layout.lengths_m[i] > 0.0))
            throw NonPositiveCellError("rounded cell has non-positive length");
        if (i + 2 < n && !(layout.lengths_m[i + 1] > layout.lengths_m[i]))
            throw NonMonotonicLayoutError("rounded cell lengths not strictly increasing");
    }

    layout.boundaries_m.resize(n + 1);
    layout.boundaries_m[0] = 0.0;
    for (int i = 0; i < n; ++i)
        layout.boundaries_m[i + 1] = layout.boundaries_m[i] + layout.lengths_m[i];
    return layout;
}

CellLayout uniform_layout(double range_m, int num_cells) {
    if (!(range_m > 0.0) || num_cells < 1)
        throw InvalidSpecError("uniform layout requires positive range and cell count");
    CellLayout layout;
    const double len = range_m / num_cells;
    layout.spec.detection_range_m = range_m;
    layout.spec.first_cell_m = len;
    layout.spec.num_cells = num_cells;
    layout.lengths_m.assign(num_cells, len);
    layout.real_lengths_m = layout.lengths_m;
    layout.boundaries_m.resize(num_cells + 1);
    layout.boundaries_m[0] = 0.0;
    for (int i = 0; i < num_cells; ++i)
        layout.boundaries_m[i + 1] = layout.boundaries_m[i] + len;
    layout.boundaries_m[num_cells] = range_m;
    return layout;
}

std::optional<int> cell_index_of(double distance_to_stopline_m, const CellLayout &layout) {
    const auto &b = layout.boundaries_m;
    if (b.size() < 2 || distance_to_stopline_m < 0.0 || distance_to_stopline_m >= b.back())
        return std::nullopt;
    const auto it = std::upper_bound(b.begin(), b.end(), distance_to_stopline_m);
    return static_cast<int>(it - b.begin());
}

std::vector<std::string> validate_layout(const CellLayout &layout) {
    std::vector<std::string> violations;
    const int n = layout.num_cells();
    if (n < 2) {
        violations.push_back("fewer than two cells");
        return violations;
    }
    if (static_cast<int>(layout.real_lengths_m.size()) != n)
        violations.push_back("real_lengths_m size differs from lengths_m");
    if (static_cast<int>(layout.boundaries_m.size()) != n + 1)
        violations.push_back("boundaries_m must have num_cells + 1 entries");

    double sum = 0.0;
    for (double l : layout.lengths_m) sum += l;
    if (std::abs(sum - layout.spec.detection_range_m) > 1e-9)
        violations.push_back("lengths do not sum to the detection range");

    for (int i = 0; i < n; ++i)
        if (!(layout.lengths_m[i] > 0.0)) {
            violations.push_back("non-positive cell length");
            break;
        }
    for (int i = 0; i + 1 < n; ++i)
        if (!(layout.lengths_m[i + 1] > layout.lengths_m[i])) {
            violations.push_back("lengths not strictly increasing");
            break;
        }
    if (!layout.real_lengths_m.empty() &&
        std::abs(layout.real_lengths_m.front() - layout.spec.first_cell_m) > 1e-6)
        violations.push_back("first computed cell differs from the configured first cell length");
    if (static_cast<int>(layout.boundaries_m.size()) == n + 1) {
        if (layout.boundaries_m.front() != 0.0)
            violations.push_back("boundaries must start at the stop line");
        for (int i = 0; i < n; ++i) {
            const double expect = layout.boundaries_m[i] + layout.lengths_m[i];
            if (std::abs(layout.boundaries_m[i + 1] - expect) > 1e-9) {
                violations.push_back("boundaries inconsistent with lengths");
                break;
            }
        }
    }
    return violations;
}

} // namespace atsc
