#pragma once

#include <string>

#include "graspmap/types.hpp"

namespace graspmap {

/// Flat binary belief-map format: 16-byte header (magic "GBM1", u32 LE width,
/// u32 LE height, u32 reserved) followed by width*height little-endian
/// 32-bit floats, row-major.
void write_belief_map(const std::string& path, const BeliefMap& map);
BeliefMap read_belief_map(const std::string& path);

/// 8-bit grayscale PNG visualization (value * 255, rounded).
void write_belief_map_png(const std::string& path, const BeliefMap& map);

} // namespace graspmap
