#pragma once

#include <filesystem>

#include "dxt/types.hpp"

namespace dxt {

/// Binary PGM (P5, maxval 255). Values are clamped to [0, 1] and written as floor(v * 255).
void write_pgm(const std::filesystem::path& path, const ImageMatrix& pixels);

/// Reads P5 PGM with maxval ≤ 255; pixel values map to v / maxval.
ImageMatrix read_pgm(const std::filesystem::path& path);

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Whole-file byte read; throws IoError.
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace dxt
