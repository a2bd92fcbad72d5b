#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "dxt/error.hpp"
#include "dxt/image_io.hpp"
#include "dxt/synthgen.hpp"
#include "support.hpp"

using namespace dxt;
using namespace dxt::synthgen;

namespace {

ShapeSpec square(double cx, double cy, double a, double rot = 0.0) {
  return {ShapeKind::Square, cx, cy, a, a, rot};
}

}  // namespace

TEST_CASE("axis-aligned square covers exactly the pixel centers inside its extent") {
  const auto img = render_shape(square(32, 32, 8), 64, 64);
  int count = 0;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      const bool inside = r + 0.5 >= 24 && r + 0.5 <= 40 && c + 0.5 >= 24 && c + 0.5 <= 40;
      CHECK(img.mask(r, c) == inside);
      CHECK(img.pixels(r, c) == (inside ? 1.0 : 0.0));
      count += inside;
    }
  }
  CHECK(count == 16 * 16);
}

TEST_CASE("ellipse pixel count is close to its area") {
  const auto img = render_shape({ShapeKind::Ellipse, 32, 32, 10, 5, 0.0}, 64, 64);
  const double area = std::numbers::pi * 10 * 5;
  const double count = img.mask.count();
  CHECK(std::abs(count - area) <= 0.05 * area);
}

TEST_CASE("smallest square in the corner stays in bounds") {
  // rotated by π/4 the reach is 4√2
  for (const double rot : {0.0, std::numbers::pi / 4}) {
    const double reach = rot == 0.0 ? 4.0 : 4.0 * std::sqrt(2.0);
    const auto spec = square(reach, reach, 4.0, rot);
    CHECK_NOTHROW(validate(spec, 64, 64));
    const auto img = render_shape(spec, 64, 64);
    CHECK(img.mask.count() > 0);
    CHECK((img.mask == oracle::rasterize(spec, 64, 64)).all());
  }
}

TEST_CASE("rendered mask equals the inclusion-test oracle on random specs") {
  GeneratorConfig config;
  config.square_min = 4;
  config.square_max = 12;
  config.ellipse_major_min = 6;
  config.ellipse_major_max = 18;
  config.ellipse_minor_min = 4;
  config.ellipse_minor_max = 6;
  int checked = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto kind = k % 2 ? ShapeKind::Ellipse : ShapeKind::Square;
    const auto spec = sample_spec(kind, derive_seed(99, k), config);
    const auto img = render_shape(spec, 64, 64);
    REQUIRE((img.mask == oracle::rasterize(spec, 64, 64)).all());
    // nonempty foreground and background
    CHECK(img.mask.any());
    CHECK(!img.mask.all());
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("contains agrees with the oracle off the pixel grid") {
  const ShapeSpec e{ShapeKind::Ellipse, 20.3, 30.7, 9, 5, 1.1};
  CHECK(contains(e, 20.3, 30.7));
  CHECK(contains(e, 20.3 + 8.99 * std::cos(1.1), 30.7 + 8.99 * std::sin(1.1)));
  CHECK_FALSE(contains(e, 20.3 + 9.01 * std::cos(1.1), 30.7 + 9.01 * std::sin(1.1)));
}

TEST_CASE("validate rejects illegal specs") {
  CHECK_THROWS_AS(validate(square(32, 32, 3.9), 64, 64), BoundsError);
  CHECK_THROWS_AS(validate({ShapeKind::Square, 32, 32, 5, 6, 0}, 64, 64), BoundsError);
  CHECK_THROWS_AS(validate(square(32, 32, 5, std::numbers::pi / 2), 64, 64), BoundsError);
  CHECK_THROWS_AS(validate({ShapeKind::Ellipse, 32, 32, 8, 5, std::numbers::pi}, 64, 64), BoundsError);
  CHECK_THROWS_AS(validate(square(3.9, 32, 4), 64, 64), BoundsError);
  CHECK_THROWS_AS(validate(square(32, 60.5, 4), 64, 64), BoundsError);
  CHECK_THROWS_AS(render_shape(square(0, 0, 4), 64, 64), BoundsError);
}

TEST_CASE("group composition follows the requested counts") {
  const auto x = generate_group(200, parse_composition("square:200"), 1, Group::X);
  const auto y = generate_group(200, parse_composition("square:40,ellipse:160"), 2, Group::Y);
  REQUIRE(x.images.size() == 200);
  REQUIRE(y.images.size() == 200);
  CHECK(x.manifest.count(Group::X, "square") == 200);
  CHECK(y.manifest.count(Group::Y, "square") == 40);
  CHECK(y.manifest.count(Group::Y, "ellipse") == 160);
  CHECK(y.manifest.entries[0].id == "Y_square_0000");
  CHECK(y.manifest.entries[40].id == "Y_ellipse_0040");
  CHECK(y.manifest.entries[40].path == "images/Y_ellipse_0040.pgm");
  for (const auto& img : y.images) {
    CHECK(img.mask.any());
    CHECK(!img.mask.all());
  }
}

TEST_CASE("inconsistent counts are a config error") {
  CHECK_THROWS_AS(generate_group(10, parse_composition("square:4,ellipse:5"), 1, Group::X), ConfigError);
  CHECK_THROWS_AS(generate_group(1, {{"square", -1}, {"ellipse", 2}}, 1, Group::X), ConfigError);
  CHECK_THROWS_AS(parse_composition("square:x"), ConfigError);
  CHECK_THROWS_AS(parse_composition("triangle:3"), ConfigError);
}

TEST_CASE("generation is a pure function of seed and parameters") {
  const auto comp = parse_composition("square:5,ellipse:7");
  const auto a = generate_group(12, comp, 77, Group::Y, {}, 1);
  const auto b = generate_group(12, comp, 77, Group::Y, {}, 4);
  const auto c = generate_group(12, comp, 78, Group::Y, {}, 1);
  bool any_diff = false;
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.images[i].pixels == b.images[i].pixels);
    CHECK(a.images[i].spec.center_x == b.images[i].spec.center_x);
    any_diff |= a.images[i].pixels != c.images[i].pixels;
  }
  CHECK(any_diff);
}

TEST_CASE("dataset round-trips through PGM files and the manifest") {
  oracle::TempDir dir("synthgen");
  const auto g = generate_group(6, parse_composition("square:3,ellipse:3"), 5, Group::Y);
  write_dataset(dir.path(), g.images, g.manifest);
  const auto manifest = read_manifest(dir / "manifest.csv");
  REQUIRE(manifest.entries.size() == 6);
  CHECK(manifest.entries[4].subgroup == "ellipse");
  CHECK(manifest.entries[4].group == Group::Y);
  const auto images = load_images(manifest, dir.path());
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(images[i].id == g.images[i].id);
    CHECK(images[i].pixels == g.images[i].pixels);
    CHECK((images[i].mask == g.images[i].mask).all());
  }

  // byte-identical regeneration
  oracle::TempDir again("synthgen2");
  write_dataset(again.path(), generate_group(6, parse_composition("square:3,ellipse:3"), 5, Group::Y).images,
                g.manifest);
  CHECK(read_file_bytes(dir / "images/Y_square_0000.pgm") ==
        read_file_bytes(again / "images/Y_square_0000.pgm"));
}

TEST_CASE("missing image is an IO error naming the id") {
  oracle::TempDir dir("synthgen_missing");
  GroupManifest m;
  m.entries.push_back({"X_square_0000", Group::X, "square", "images/nope.pgm"});
  try {
    load_images(m, dir.path());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("X_square_0000") != std::string::npos);
  }
}

TEST_CASE("duplicate manifest ids are rejected") {
  oracle::TempDir dir("synthgen_dup");
  std::ofstream(dir / "manifest.csv") << "id,group,subgroup,path\na,X,square,a.pgm\na,Y,square,b.pgm\n";
  CHECK_THROWS_AS(read_manifest(dir / "manifest.csv"), FormatError);
}
