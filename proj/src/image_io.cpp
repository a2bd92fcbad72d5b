#include "dxt/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dxt/error.hpp"

namespace dxt {

std::string_view group_name(Group g) noexcept { return g == Group::X ? "X" : "Y"; }

Group parse_group(std::string_view text) {
  if (text == "X" || text == "x") return Group::X;
  if (text == "Y" || text == "y") return Group::Y;
  throw DataError("io", "unknown group label '" + std::string(text) + "' (expected X or Y)");
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::uint8_t* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("io", "cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("io", "write failed for " + path.string());
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

int header_int(const std::string& bytes, std::size_t& pos, const std::filesystem::path& path) {
  const std::string token = header_token(bytes, pos);
  try {
    std::size_t used = 0;
    const int value = std::stoi(token, &used);
    if (used != token.size() || value <= 0) throw std::invalid_argument(token);
    return value;
  } catch (const std::exception&) {
    throw FormatError("io", "bad PGM header field '" + token + "' in " + path.string());
  }
}

}  // namespace

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_pgm(const std::filesystem::path& path, const ImageMatrix& pixels) {
  std::vector<std::uint8_t> data(static_cast<std::size_t>(pixels.size()));
  std::size_t k = 0;
  for (Index r = 0; r < pixels.rows(); ++r)
    for (Index c = 0; c < pixels.cols(); ++c) {
      const double v = std::clamp(pixels(r, c), 0.0, 1.0);
      data[k++] = static_cast<std::uint8_t>(std::floor(v * 255.0));
    }
  const std::string header = "P5\n" + std::to_string(pixels.cols()) + " " +
                             std::to_string(pixels.rows()) + "\n255\n";
  write_bytes(path, header, data.data(), data.size());
}

ImageMatrix read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;
  if (header_token(bytes, pos) != "P5") throw FormatError("io", path.string() + " is not a binary PGM");
  const int width = header_int(bytes, pos, path);
  const int height = header_int(bytes, pos, path);
  const int maxval = header_int(bytes, pos, path);
  if (maxval > 255) throw FormatError("io", "16-bit PGM not supported: " + path.string());
  ++pos;  // single whitespace after maxval
  const std::size_t needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < pos + needed) throw FormatError("io", "truncated PGM " + path.string());
  ImageMatrix pixels(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      pixels(r, c) = static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(r) * width + c]) /
                     static_cast<double>(maxval);
  return pixels;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  if (image.bytes.size() != static_cast<std::size_t>(image.height) * image.width * 3)
    throw ShapeError("io", "RGB buffer size does not match " + std::to_string(image.height) + "x" +
                               std::to_string(image.width));
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  write_bytes(path, header, image.bytes.data(), image.bytes.size());
}

}  // namespace dxt
