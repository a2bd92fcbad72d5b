#include "dxt/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "csv.hpp"
#include "dxt/error.hpp"
#include "dxt/image_io.hpp"
#include "dxt/parallel.hpp"
#include "dxt/rng.hpp"

namespace dxt::synthgen {

std::string_view kind_name(ShapeKind kind) noexcept {
  return kind == ShapeKind::Square ? "square" : "ellipse";
}

ShapeKind parse_kind(std::string_view text) {
  if (text == "square") return ShapeKind::Square;
  if (text == "ellipse") return ShapeKind::Ellipse;
  throw ConfigError("synthgen", "unknown shape kind '" + std::string(text) + "'");
}

bool contains(const ShapeSpec& spec, double x, double y) noexcept {
  const double dx = x - spec.center_x;
  const double dy = y - spec.center_y;
  const double cs = std::cos(spec.rotation);
  const double sn = std::sin(spec.rotation);
  // Inverse rotation into the shape's local frame.
  const double u = cs * dx + sn * dy;
  const double v = -sn * dx + cs * dy;
  if (spec.kind == ShapeKind::Square)
    return std::abs(u) <= spec.half_extent_a && std::abs(v) <= spec.half_extent_b;
  const double pu = u / spec.half_extent_a;
  const double pv = v / spec.half_extent_b;
  return pu * pu + pv * pv <= 1.0;
}

std::pair<double, double> bounding_half_extents(const ShapeSpec& spec) noexcept {
  const double cs = std::abs(std::cos(spec.rotation));
  const double sn = std::abs(std::sin(spec.rotation));
  const double a = spec.half_extent_a;
  const double b = spec.half_extent_b;
  if (spec.kind == ShapeKind::Square) return {a * cs + b * sn, a * sn + b * cs};
  return {std::sqrt(a * a * cs * cs + b * b * sn * sn), std::sqrt(a * a * sn * sn + b * b * cs * cs)};
}

void validate(const ShapeSpec& spec, int height, int width) {
  auto fail = [&](const std::string& why) {
    throw BoundsError("synthgen", "invalid " + std::string(kind_name(spec.kind)) + ": " + why);
  };
  if (height <= 0 || width <= 0) fail("canvas must be nonempty");
  if (!(spec.half_extent_a >= kMinHalfExtent) || !(spec.half_extent_b >= kMinHalfExtent))
    fail("half extents must be at least 4 pixels");
  if (spec.kind == ShapeKind::Square && spec.half_extent_a != spec.half_extent_b)
    fail("squares need equal half extents");
  const double max_rotation =
      spec.kind == ShapeKind::Square ? std::numbers::pi / 2.0 : std::numbers::pi;
  if (!(spec.rotation >= 0.0 && spec.rotation < max_rotation)) fail("rotation out of range");
  const auto [hx, hy] = bounding_half_extents(spec);
  if (!(spec.center_x - hx >= 0.0 && spec.center_x + hx <= width && spec.center_y - hy >= 0.0 &&
        spec.center_y + hy <= height))
    fail("shape extends past the image border");
}

SampleImage render_shape(const ShapeSpec& spec, int height, int width) {
  validate(spec, height, width);
  SampleImage image;
  image.spec = spec;
  image.pixels = ImageMatrix::Zero(height, width);
  image.mask = BoolMask::Constant(height, width, false);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (contains(spec, c + 0.5, r + 0.5)) {
        image.pixels(r, c) = 1.0;
        image.mask(r, c) = true;
      }
  return image;
}

ShapeSpec sample_spec(ShapeKind kind, std::uint64_t stream_seed, const GeneratorConfig& config) {
  CounterRng rng(stream_seed);
  ShapeSpec spec;
  spec.kind = kind;
  if (kind == ShapeKind::Square) {
    spec.half_extent_a = spec.half_extent_b = rng.uniform(config.square_min, config.square_max);
    spec.rotation = rng.uniform(0.0, std::numbers::pi / 2.0);
  } else {
    spec.half_extent_a = rng.uniform(config.ellipse_major_min, config.ellipse_major_max);
    spec.half_extent_b = rng.uniform(config.ellipse_minor_min, config.ellipse_minor_max);
    spec.rotation = rng.uniform(0.0, std::numbers::pi);
  }
  const double radius = std::hypot(spec.half_extent_a, spec.half_extent_b);
  const double reach = kind == ShapeKind::Square ? radius : spec.half_extent_a;
  const double lo = reach + config.margin;
  if (lo > config.width - lo || lo > config.height - lo)
    throw ConfigError("synthgen", "shape size range does not fit the canvas");
  spec.center_x = rng.uniform(lo, config.width - lo);
  spec.center_y = rng.uniform(lo, config.height - lo);
  return spec;
}

std::size_t GroupManifest::count(Group group, std::string_view subgroup) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += (e.group == group && e.subgroup == subgroup);
  return n;
}

Composition parse_composition(std::string_view text) {
  Composition out;
  for (const auto& item : detail::split_csv_line(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("synthgen", "composition item '" + item + "' must be kind:count");
    const std::string kind = item.substr(0, colon);
    parse_kind(kind);
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("synthgen", "bad count in composition item '" + item + "'");
    }
    out.emplace_back(kind, n);
  }
  return out;
}

GeneratedGroup generate_group(int count, const Composition& composition, std::uint64_t seed,
                              Group group, const GeneratorConfig& config, unsigned threads) {
  long total = 0;
  std::vector<ShapeKind> kinds;
  std::vector<std::string> labels;
  for (const auto& [label, n] : composition) {
    if (n < 0) throw ConfigError("synthgen", "negative count for subgroup " + label);
    const ShapeKind kind = parse_kind(label);
    total += n;
    for (int i = 0; i < n; ++i) {
      kinds.push_back(kind);
      labels.push_back(label);
    }
  }
  if (count < 0 || total != count)
    throw ConfigError("synthgen", "subgroup counts sum to " + std::to_string(total) +
                                      " but the group size is " + std::to_string(count));

  GeneratedGroup out;
  out.images.resize(kinds.size());
  out.manifest.seed = seed;
  parallel_for(kinds.size(), threads, [&](std::size_t k) {
    const ShapeSpec spec = sample_spec(kinds[k], derive_seed(seed, k), config);
    SampleImage image = render_shape(spec, config.height, config.width);
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%04zu", k);
    image.id = std::string(group_name(group)) + "_" + labels[k] + "_" + suffix;
    out.images[k] = std::move(image);
  });
  for (std::size_t k = 0; k < kinds.size(); ++k)
    out.manifest.entries.push_back(
        {out.images[k].id, group, labels[k], "images/" + out.images[k].id + ".pgm"});
  return out;
}

void write_manifest(const std::filesystem::path& path, const GroupManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("synthgen", "cannot write manifest " + path.string());
  out << "id,group,subgroup,path\n";
  for (const auto& e : manifest.entries)
    out << e.id << ',' << group_name(e.group) << ',' << e.subgroup << ',' << e.path << '\n';
}

GroupManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("synthgen", "cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                     std::vector<std::string>{"id", "group", "subgroup", "path"})
    throw FormatError("synthgen", "manifest header must be id,group,subgroup,path");
  GroupManifest manifest;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) throw FormatError("synthgen", "manifest row has wrong arity: " + line);
    if (!seen.insert(fields[0]).second)
      throw FormatError("synthgen", "duplicate id in manifest: " + fields[0]);
    manifest.entries.push_back({fields[0], parse_group(fields[1]), fields[2], fields[3]});
  }
  return manifest;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<SampleImage>& images,
                   const GroupManifest& manifest) {
  if (images.size() != manifest.entries.size())
    throw ConfigError("synthgen", "image list and manifest differ in length");
  std::filesystem::create_directories(dir / "images");
  for (std::size_t k = 0; k < images.size(); ++k)
    write_pgm(dir / manifest.entries[k].path, images[k].pixels);
  write_manifest(dir / "manifest.csv", manifest);
}

std::vector<SampleImage> load_images(const GroupManifest& manifest,
                                     const std::filesystem::path& base_dir) {
  std::vector<SampleImage> images;
  images.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    const std::filesystem::path p = std::filesystem::path(e.path).is_absolute()
                                        ? std::filesystem::path(e.path)
                                        : base_dir / e.path;
    SampleImage image;
    image.id = e.id;
    try {
      image.pixels = read_pgm(p);
    } catch (const Error& err) {
      throw IoError("encoder", "cannot read image for id " + e.id + ": " + err.what());
    }
    image.mask = image.pixels.array() > 0.5;
    images.push_back(std::move(image));
  }
  return images;
}

}  // namespace dxt::synthgen
