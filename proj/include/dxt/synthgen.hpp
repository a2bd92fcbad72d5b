#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dxt/types.hpp"

namespace dxt::synthgen {

enum class ShapeKind { Square, Ellipse };

std::string_view kind_name(ShapeKind kind) noexcept;
ShapeKind parse_kind(std::string_view text);

/// Geometry of one shape in continuous image coordinates: x runs along
/// columns, y along rows, and pixel (r, c) has its center at (c + 0.5, r + 0.5).
struct ShapeSpec {
  ShapeKind kind = ShapeKind::Square;
  double center_x = 0.0;
  double center_y = 0.0;
  double half_extent_a = 4.0;  // along the rotated local u axis
  double half_extent_b = 4.0;  // along the rotated local v axis
  double rotation = 0.0;       // radians; [0, π/2) for squares, [0, π) for ellipses
};

/// Smallest legal half extent, in pixels.
inline constexpr double kMinHalfExtent = 4.0;

struct SampleImage {
  std::string id;
  ShapeSpec spec;
  ImageMatrix pixels;  // 0 background, 1 foreground
  BoolMask mask;
};

/// True iff the continuous point (x, y) lies inside the shape.
bool contains(const ShapeSpec& spec, double x, double y) noexcept;

/// Half-width and half-height of the rotated shape's axis-aligned bounding box.
std::pair<double, double> bounding_half_extents(const ShapeSpec& spec) noexcept;

/// Throws BoundsError unless the spec is legal for a height × width canvas.
void validate(const ShapeSpec& spec, int height, int width);

/// Binary pixel-center rasterization of one shape.
SampleImage render_shape(const ShapeSpec& spec, int height, int width);

/// Ranges the generator draws from. Centers are then restricted so the
/// circumscribing circle stays at least `margin` pixels inside the border.
struct GeneratorConfig {
  int height = 64;
  int width = 64;
  double square_min = 6.0;
  double square_max = 6.5;
  double ellipse_major_min = 15.0;
  double ellipse_major_max = 16.0;
  double ellipse_minor_min = 10.0;
  double ellipse_minor_max = 11.0;
  double margin = 1.0;
};

/// Draws the shape for one sample from its own counter-based stream.
ShapeSpec sample_spec(ShapeKind kind, std::uint64_t stream_seed, const GeneratorConfig& config);

struct ManifestEntry {
  std::string id;
  Group group = Group::X;
  std::string subgroup;
  std::string path;  // relative to the manifest's directory unless absolute
};

struct GroupManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;

  /// Number of entries with the given group and subgroup.
  std::size_t count(Group group, std::string_view subgroup) const;
};

/// Subgroup composition of one group, in generation order, e.g. {{"square", 40}, {"ellipse", 160}}.
using Composition = std::vector<std::pair<std::string, int>>;

/// Parses "square:40,ellipse:160".
Composition parse_composition(std::string_view text);

struct GeneratedGroup {
  std::vector<SampleImage> images;
  GroupManifest manifest;
};

/**
 * Generates `count` images for one group. Subgroups are emitted in the order
 * given by `composition`; sample k draws from `derive_seed(seed, k)`, so the
 * output is a pure function of the arguments. Ids have the form
 * `<group>_<subgroup>_<kkkk>`; manifest paths are `images/<id>.pgm`.
 */
GeneratedGroup generate_group(int count, const Composition& composition, std::uint64_t seed,
                              Group group, const GeneratorConfig& config = {}, unsigned threads = 1);

/// Writes every image under `dir/images/` and the manifest to `dir/manifest.csv`.
void write_dataset(const std::filesystem::path& dir, const std::vector<SampleImage>& images,
                   const GroupManifest& manifest);

void write_manifest(const std::filesystem::path& path, const GroupManifest& manifest);
GroupManifest read_manifest(const std::filesystem::path& path);

/// Loads the images referenced by `manifest`, resolving relative paths against `base_dir`.
/// Masks are recovered as pixels > 0.5. Throws IoError naming the failing id.
std::vector<SampleImage> load_images(const GroupManifest& manifest,
                                     const std::filesystem::path& base_dir);

}  // namespace dxt::synthgen
