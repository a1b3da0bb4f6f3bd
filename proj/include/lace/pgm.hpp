#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lace {

// Binary (P5) greymap. maxval <= 255 is stored one byte per pixel, larger
// maxval two bytes big-endian, as the netpbm format prescribes.
struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> pixels;  // row-major, size width * height

  std::uint16_t at(int x, int y) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
};

PgmImage parse_pgm(std::string_view bytes);
PgmImage read_pgm(const std::filesystem::path& path);
std::string encode_pgm(const PgmImage& image);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace lace
