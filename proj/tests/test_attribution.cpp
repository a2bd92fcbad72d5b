#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "dxt/attribution.hpp"
#include "dxt/encoder.hpp"
#include "dxt/error.hpp"
#include "support.hpp"

using namespace dxt;
using namespace dxt::attribution;

namespace {

constexpr Variant kAll[] = {Variant::GradientWeighted, Variant::SecondOrder, Variant::LayerWiseSpatial};

FeatureMaps random_maps(CounterRng& rng, int channels, int h, int w, bool nonnegative) {
  FeatureMaps maps(static_cast<std::size_t>(channels), Eigen::MatrixXd(h, w));
  for (auto& m : maps)
    for (Index i = 0; i < m.size(); ++i) m(i) = nonnegative ? std::max(0.0, rng.normal()) : rng.normal();
  return maps;
}

// Two groups with identical means: embeddings of X are duplicated into Y.
struct Fixture {
  encoder::EncoderModel model = encoder::build_random(42);
  synthgen::GeneratedGroup x =
      synthgen::generate_group(4, synthgen::parse_composition("square:4"), 1, Group::X);
  synthgen::GeneratedGroup y =
      synthgen::generate_group(6, synthgen::parse_composition("square:2,ellipse:4"), 2, Group::Y);

  EmbeddingSet embed() const {
    auto images = x.images;
    images.insert(images.end(), y.images.begin(), y.images.end());
    auto manifest = x.manifest;
    manifest.entries.insert(manifest.entries.end(), y.manifest.entries.begin(), y.manifest.entries.end());
    return encoder::embed_images(model, images, manifest);
  }
};

}  // namespace

TEST_CASE("variant names round-trip") {
  for (const auto v : kAll) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(variant_name(Variant::SecondOrder) == "second-order");
  CHECK_THROWS_AS(parse_variant("gradcam"), ConfigError);
}

TEST_CASE("gradient-weighted aggregation follows its definition") {
  CounterRng rng(1);
  const auto a = random_maps(rng, 5, 4, 6, true);
  const auto g = random_maps(rng, 5, 4, 6, false);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(4, 6);
  for (int k = 0; k < 5; ++k) expect += g[std::size_t(k)].mean() * a[std::size_t(k)];
  expect = expect.cwiseMax(0.0);
  CHECK((aggregate(a, g, Variant::GradientWeighted) - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("second-order and layer-wise aggregation follow their definitions") {
  CounterRng rng(2);
  const auto a = random_maps(rng, 3, 3, 3, true);
  const auto g = random_maps(rng, 3, 3, 3, false);
  Eigen::MatrixXd so = Eigen::MatrixXd::Zero(3, 3), lw = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double alpha = 0;
    const double sum_a = a[k].sum();
    for (Index i = 0; i < 9; ++i) {
      const double gi = g[k](i);
      const double den = 2 * gi * gi + sum_a * gi * gi * gi;
      const double w = std::abs(den) < 1e-12 ? 0.0 : gi * gi / den;
      alpha += w * std::max(gi, 0.0);
    }
    so += alpha * a[k];
    lw += g[k].cwiseMax(0.0).cwiseProduct(a[k]);
  }
  CHECK((aggregate(a, g, Variant::SecondOrder) - so.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((aggregate(a, g, Variant::LayerWiseSpatial) - lw.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(channel_weights(a, g, Variant::LayerWiseSpatial), ConfigError);
}

TEST_CASE("single channel with unit weight gives ReLU of the map") {
  CounterRng rng(3);
  auto a = random_maps(rng, 1, 5, 5, false);
  FeatureMaps g{Eigen::MatrixXd::Constant(5, 5, 1.0)};
  CHECK(aggregate(a, g, Variant::GradientWeighted) == a[0].cwiseMax(0.0));
}

TEST_CASE("jointly permuting channels leaves every variant unchanged") {
  CounterRng rng(4);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const int c = 1 + int(rng.below(8));
    const auto a = random_maps(rng, c, 1 + int(rng.below(6)), 1 + int(rng.below(6)), true);
    const auto g = random_maps(rng, c, int(a[0].rows()), int(a[0].cols()), false);
    std::vector<std::size_t> perm(std::size_t(c), 0);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    FeatureMaps pa, pg;
    for (const auto k : perm) {
      pa.push_back(a[k]);
      pg.push_back(g[k]);
    }
    for (const auto v : kAll)
      worst = std::max(worst, (aggregate(a, g, v) - aggregate(pa, pg, v)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("zero gradient gives a zero map and outputs are nonnegative") {
  CounterRng rng(5);
  const auto a = random_maps(rng, 4, 6, 6, true);
  const FeatureMaps zero(4, Eigen::MatrixXd::Zero(6, 6));
  const auto g = random_maps(rng, 4, 6, 6, false);
  for (const auto v : kAll) {
    CHECK(aggregate(a, zero, v).isZero(0.0));
    CHECK(aggregate(a, g, v).minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(aggregate(a, random_maps(rng, 3, 6, 6, false), Variant::GradientWeighted), ShapeError);
  CHECK_THROWS_AS(aggregate(a, random_maps(rng, 4, 5, 6, false), Variant::LayerWiseSpatial), ShapeError);
}

TEST_CASE("bilinear upsampling matches the sampling formula") {
  Eigen::MatrixXd src(2, 2);
  src << 0, 1, 1, 0;
  const auto out = bilinear_resize(src, 4, 4);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) CHECK(std::abs(out(r, c) - oracle::bilinear_at(src, 4, 4, r, c)) <= 1e-15);
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 1) == doctest::Approx(0.375));

  CounterRng rng(6);
  Eigen::MatrixXd big(5, 7);
  for (Index i = 0; i < big.size(); ++i) big(i) = rng.uniform();
  const auto up = bilinear_resize(big, 13, 29);
  for (Index r = 0; r < 13; ++r)
    for (Index c = 0; c < 29; ++c) CHECK(std::abs(up(r, c) - oracle::bilinear_at(big, 13, 29, r, c)) <= 1e-14);
}

TEST_CASE("upsampling preserves constants and identity scale") {
  CHECK(bilinear_upsample(Eigen::MatrixXd::Constant(1, 1, 3.0), 8, 8) == Eigen::MatrixXd::Ones(8, 8));
  CHECK(bilinear_upsample(Eigen::MatrixXd::Constant(1, 1, -3.0), 8, 8).isZero(0.0));
  CHECK(bilinear_resize(Eigen::MatrixXd::Constant(3, 4, 0.7), 9, 5).isApprox(Eigen::MatrixXd::Constant(9, 5, 0.7)));
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  CHECK(bilinear_resize(m, 3, 2) == m);
  CHECK(bilinear_upsample(m, 3, 2) == m / 6.0);
  CHECK_THROWS_AS(bilinear_upsample(m, 0, 4), ConfigError);
  CHECK_THROWS_AS(bilinear_upsample(Eigen::MatrixXd(0, 0), 4, 4), ConfigError);
}

TEST_CASE("mask coverage") {
  BoolMask mask = BoolMask::Constant(4, 4, false);
  mask.block(0, 0, 2, 2).setConstant(true);
  CHECK(coverage(Eigen::MatrixXd::Ones(4, 4), mask) == 0.25);
  Eigen::MatrixXd inside = Eigen::MatrixXd::Zero(4, 4);
  inside(1, 1) = 0.5;
  CHECK(coverage(inside, mask) == 1.0);
  CHECK(coverage(Eigen::MatrixXd::Zero(4, 4), mask) == 0.0);
  CHECK_THROWS_AS(coverage(Eigen::MatrixXd::Zero(3, 4), mask), ShapeError);
}

TEST_CASE("overlay blends a monotone colormap") {
  ImageMatrix img(2, 3);
  img << 0, 0.25, 0.5, 0.75, 1, 0.1;
  const auto plain = render_overlay(img, Eigen::MatrixXd::Zero(2, 3));
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 3; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const auto byte = plain.bytes[std::size_t((r * 3 + c) * 3 + ch)];
        CHECK(byte == std::uint8_t(std::floor(img(r, c) * 255 + 0.5)));
      }
  const auto full = render_overlay(img, Eigen::MatrixXd::Ones(2, 3));
  const auto top = colormap(1.0);
  for (Index r = 0; r < 2; ++r)
    for (Index c = 0; c < 3; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const double v = 0.5 * img(r, c) + 0.5 * top[std::size_t(ch)];
        CHECK(full.bytes[std::size_t((r * 3 + c) * 3 + ch)] == std::uint8_t(std::floor(v * 255 + 0.5)));
      }
  // each channel is nondecreasing in the map value
  for (int i = 1; i <= 100; ++i)
    for (int ch = 0; ch < 3; ++ch) CHECK(colormap(i / 100.0)[std::size_t(ch)] >= colormap((i - 1) / 100.0)[std::size_t(ch)]);
  CHECK_THROWS_AS(render_overlay(img, Eigen::MatrixXd::Zero(3, 2)), ShapeError);
}

TEST_CASE("equal group means give identically zero maps for every variant") {
  Fixture f;
  const auto base = f.embed();
  // Y = X duplicated under new ids, so μ_X = μ_Y exactly
  EmbeddingSet emb(base.dim());
  for (Index r = 0; r < 4; ++r) emb.append(base.info(r), base.row(r));
  for (Index r = 0; r < 4; ++r) emb.append({"dup_" + base.info(r).id, Group::Y, "square"}, base.row(r));
  for (const auto v : kAll)
    for (const int layer : f.model.conv_layers()) {
      const auto map = attribute(f.model, f.x.images[1], emb, layer, v);
      CHECK(map.raw.isZero(0.0));
      CHECK(map.upsampled.isZero(0.0));
    }
}

TEST_CASE("attribution pipeline shapes, ranges and errors") {
  Fixture f;
  const auto emb = f.embed();
  const Attributor attributor(f.model, emb);
  const auto& image = f.y.images[3];
  for (const auto v : kAll) {
    const auto map = attributor(image, f.model.penultimate_conv(), v);
    CHECK(map.raw.rows() == 32);
    CHECK(map.upsampled.rows() == 64);
    CHECK(map.raw.minCoeff() >= 0.0);
    CHECK(map.upsampled.minCoeff() >= 0.0);
    CHECK(map.upsampled.maxCoeff() <= 1.0);
    CHECK(map.n == 4);
    CHECK(map.m == 6);
    CHECK(map.sample_id == image.id);
  }
  const auto fin = attribute(f.model, image, emb, f.model.final_conv(), Variant::GradientWeighted);
  CHECK(fin.raw.rows() == 16);
  CHECK(fin.layer_index == 6);

  auto stranger = image;
  stranger.id = "nobody";
  CHECK_THROWS_AS(attributor(stranger, 6, Variant::GradientWeighted), NotFoundError);
  CHECK_THROWS_AS(attributor(image, 2, Variant::GradientWeighted), LayerError);
}

TEST_CASE("scaling the statistic gradient leaves the gradient-weighted map unchanged") {
  Fixture f;
  const auto emb = f.embed();
  const auto fwd = encoder::forward(f.model, f.y.images[4].pixels, true);
  const auto& a = encoder::activations(f.model, *fwd.cache, 3);
  const Eigen::VectorXd g = dmmd::statistic_gradient_wrt_sample(emb, f.y.images[4].id);
  const auto m1 = bilinear_upsample(aggregate(a, encoder::backward_to_layer(f.model, *fwd.cache, g, 3),
                                              Variant::GradientWeighted), 64, 64);
  const auto m2 = bilinear_upsample(aggregate(a, encoder::backward_to_layer(f.model, *fwd.cache, 3.0 * g, 3),
                                              Variant::GradientWeighted), 64, 64);
  CHECK((m1 - m2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("coverage CSV layout") {
  oracle::TempDir dir("attr");
  write_coverage_csv(dir / "c.csv", {{"Y_ellipse_0040", "ellipse", Variant::SecondOrder, 0.5}});
  std::ifstream in(dir / "c.csv");
  std::string a, b;
  std::getline(in, a);
  std::getline(in, b);
  CHECK(a == "id,subgroup,variant,coverage");
  CHECK(b == "Y_ellipse_0040,ellipse,second-order,0.5");
}

TEST_CASE("overlay bytes for a fixed seed-42 sample match the recorded snapshot") {
  Fixture f;
  const auto emb = f.embed();
  const auto& image = f.y.images[3];
  const auto map = attribute(f.model, image, emb, f.model.penultimate_conv(), Variant::GradientWeighted);
  const auto rgb = render_overlay(image.pixels, map.upsampled);
  const std::string_view bytes(reinterpret_cast<const char*>(rgb.bytes.data()), rgb.bytes.size());
  CHECK(rgb.bytes.size() == 64 * 64 * 3);
  // recorded from the first verified run
  CHECK(oracle::fnv1a(bytes) == 16199491872529274043ULL);
}
