// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/network.hpp"

#include <iosfwd>
#include <string>

namespace sketchwatch::detector {

inline constexpr std::uint32_t kWeightsVersion = 1;

/// Layout: "SKWT", u32 version, u64 header length, JSON header, then float32 data.
/// All integers and floats little-endian. The header names every tensor with its
/// shape and element offset into the data block.
void save_weights(const Network &net, std::ostream &out);
void save_weights(const Network &net, const std::string &path);

/// Rebuilds the network from the embedded config. Throws Error(malformed) on any
/// inconsistency and Error(io) if the file cannot be read.
Network load_weights(std::istream &in);
Network load_weights(const std::string &path);

} // namespace sketchwatch::detector
