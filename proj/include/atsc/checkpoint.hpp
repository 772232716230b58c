#pragma once

#include "atsc/nn.hpp"
#include "atsc/partition.hpp"
#include "atsc/state.hpp"

#include <string>

namespace atsc {

/// Training context stored beside the weights so inference reproduces the
/// exact encoding: the cell partition the net was trained on and the
/// historical normalization maxima.
struct CheckpointMeta {
    PartitionSpec partition{500.0, 7.0, 10};
    NormState norm;
};

/// Binary checkpoint: magic, format version, architecture hash, partition
/// spec, normalization state, layer descriptors with float32 parameter
/// blobs, and a trailing integrity checksum. Everything little-endian.
void save_checkpoint(const std::string &path, const Net &net, const CheckpointMeta &meta);

struct LoadedCheckpoint {
    Net net;
    CheckpointMeta meta;
};

/// Rebuilds the stored network. Throws ChecksumMismatchError on corruption
/// and CheckpointMismatchError on malformed or wrong-version files.
LoadedCheckpoint load_checkpoint(const std::string &path);

/// Loads parameters into an existing network after verifying the stored
/// architecture hash matches; returns the stored meta.
CheckpointMeta load_params_into(Net &net, const std::string &path);

} // namespace atsc
