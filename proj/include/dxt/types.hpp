#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dxt {

using Index = Eigen::Index;

/// Grayscale image, rows × cols, values in [0, 1].
using ImageMatrix = Eigen::MatrixXd;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// 8-bit RGB raster in row-major interleaved order.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bytes;  // height * width * 3
};

/// Population label of a sample in a two-sample test.
enum class Group { X, Y };

std::string_view group_name(Group g) noexcept;
Group parse_group(std::string_view text);

}  // namespace dxt
