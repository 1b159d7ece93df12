#pragma once

#include <string>
#include <vector>

#include "splatplan/core.hpp"

namespace splatplan {

/// Binary PPM (P6), 8 bits per channel; values clamped to [0, 1].
bool write_ppm(const std::string& path, int width, int height,
               const std::vector<Vec3>& pixels);

/// Binary PGM (P5), 16-bit big-endian, depth in millimeters clamped to
/// 65535. Sentinel / out-of-range depths saturate.
bool write_depth_pgm(const std::string& path, int width, int height,
                     const std::vector<double>& depth_m);

/// Binary PGM (P5), 16-bit big-endian, values scaled so the maximum maps
/// to 65535 (all-zero input writes zeros).
bool write_scalar_pgm(const std::string& path, int width, int height,
                      const std::vector<double>& values);

}  // namespace splatplan
