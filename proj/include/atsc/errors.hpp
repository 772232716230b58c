#pragma once

#include <stdexcept>
#include <string>

namespace atsc {

struct Error : std::runtime_error {
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// cell partition
struct InvalidSpecError : Error { using Error::Error; };
struct DegenerateDenominatorError : Error { using Error::Error; };
struct NonMonotonicLayoutError : Error { using Error::Error; };
struct NonPositiveCellError : Error { using Error::Error; };
struct LastCellInvalidError : Error { using Error::Error; };

// road network
struct ParseError : Error { using Error::Error; };
struct TopologyError : Error { using Error::Error; };
struct DeadEndError : Error { using Error::Error; };

// simulator
struct ConsistencyError : Error { using Error::Error; };
struct InvalidPlanError : Error { using Error::Error; };

// tensor engine
struct ShapeMismatchError : Error { using Error::Error; };
struct NoForwardCacheError : Error { using Error::Error; };
struct NonFiniteGradientError : Error { using Error::Error; };
struct ChecksumMismatchError : Error { using Error::Error; };
struct ArchitectureMismatchError : Error { using Error::Error; };

// harness
struct CheckpointMismatchError : Error { using Error::Error; };
struct TransferIncompatibleError : Error { using Error::Error; };
struct MissingInputError : Error { using Error::Error; };

} // namespace atsc
