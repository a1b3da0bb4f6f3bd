#include "lace/pgm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "lace/error.hpp"

namespace lace {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    const size_t start = pos_;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) {
      throw ParseError("pgm: expected integer at offset " +
                       std::to_string(start));
    }
    if (pos_ - start > 9) {
      throw ParseError("pgm: integer too large at offset " +
                       std::to_string(start));
    }
    return std::stoi(std::string(bytes_.substr(start, pos_ - start)));
  }

  // Exactly one whitespace byte separates the header from the raster.
  size_t raster_offset() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ParseError("pgm: missing whitespace before raster at offset " +
                       std::to_string(pos_));
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  size_t pos_ = 2;
};

}  // namespace

PgmImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("pgm: missing P5 magic at offset 0");
  }
  HeaderReader header(bytes);
  PgmImage image;
  image.width = header.next_int();
  image.height = header.next_int();
  image.maxval = header.next_int();
  if (image.width <= 0 || image.height <= 0) {
    throw ParseError("pgm: non-positive dimensions");
  }
  if (image.maxval <= 0 || image.maxval > 65535) {
    throw ParseError("pgm: maxval out of range");
  }
  const size_t offset = header.raster_offset();
  const size_t count = static_cast<size_t>(image.width) * image.height;
  const size_t bytes_per_pixel = image.maxval > 255 ? 2 : 1;
  if (bytes.size() < offset + count * bytes_per_pixel) {
    throw ParseError("pgm: raster truncated at offset " +
                     std::to_string(bytes.size()));
  }
  image.pixels.resize(count);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  for (size_t i = 0; i < count; ++i) {
    image.pixels[i] = bytes_per_pixel == 1
                          ? raw[i]
                          : static_cast<std::uint16_t>((raw[2 * i] << 8) |
                                                       raw[2 * i + 1]);
  }
  return image;
}

PgmImage read_pgm(const std::filesystem::path& path) {
  return parse_pgm(read_file(path));
}

std::string encode_pgm(const PgmImage& image) {
  std::ostringstream out;
  out << "P5\n" << image.width << ' ' << image.height << '\n'
      << image.maxval << '\n';
  std::string data = out.str();
  const bool wide = image.maxval > 255;
  data.reserve(data.size() + image.pixels.size() * (wide ? 2 : 1));
  for (std::uint16_t v : image.pixels) {
    if (wide) data.push_back(static_cast<char>(v >> 8));
    data.push_back(static_cast<char>(v & 0xff));
  }
  return data;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  write_file(path, encode_pgm(image));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lace
