#include "splatplan/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace splatplan {

namespace {

std::ofstream open_binary(const std::string& path) {
  return std::ofstream(path, std::ios::binary | std::ios::trunc);
}

void put_u16be(std::ofstream& os, std::uint16_t v) {
  os.put(char(v >> 8));
  os.put(char(v & 0xFF));
}

}  // namespace

bool write_ppm(const std::string& path, int width, int height,
               const std::vector<Vec3>& pixels) {
  if (int(pixels.size()) != width * height) return false;
  std::ofstream os = open_binary(path);
  if (!os) return false;
  os << "P6\n" << width << " " << height << "\n255\n";
  for (const Vec3& p : pixels)
    for (int c = 0; c < 3; ++c)
      os.put(char(std::lround(255.0 * std::clamp(p[c], 0.0, 1.0))));
  return bool(os);
}

bool write_depth_pgm(const std::string& path, int width, int height,
                     const std::vector<double>& depth_m) {
  if (int(depth_m.size()) != width * height) return false;
  std::ofstream os = open_binary(path);
  if (!os) return false;
  os << "P5\n" << width << " " << height << "\n65535\n";
  for (double d : depth_m) {
    const double mm = std::clamp(d * 1000.0, 0.0, 65535.0);
    put_u16be(os, std::uint16_t(std::lround(mm)));
  }
  return bool(os);
}

bool write_scalar_pgm(const std::string& path, int width, int height,
                      const std::vector<double>& values) {
  if (int(values.size()) != width * height) return false;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  std::ofstream os = open_binary(path);
  if (!os) return false;
  os << "P5\n" << width << " " << height << "\n65535\n";
  const double scale = vmax > 0.0 ? 65535.0 / vmax : 0.0;
  for (double v : values)
    put_u16be(os, std::uint16_t(std::lround(std::clamp(v, 0.0, vmax) * scale)));
  return bool(os);
}

}  // namespace splatplan
