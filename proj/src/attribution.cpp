#include "dxt/attribution.hpp"

#include <fstream>

#include "csv.hpp"
#include "dxt/error.hpp"

namespace dxt::attribution {

namespace {

constexpr char kModule[] = "attribution";

void check_pair(const FeatureMaps& a, const FeatureMaps& g) {
  if (a.empty() || a.size() != g.size())
    throw ShapeError(kModule, "activation and gradient tensors have different channel counts");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].rows() != a.front().rows() || a[k].cols() != a.front().cols() ||
        g[k].rows() != a[k].rows() || g[k].cols() != a[k].cols())
      throw ShapeError(kModule, "activation and gradient maps differ in size at channel " +
                                    std::to_string(k));
}

Eigen::MatrixXd weighted_sum(const FeatureMaps& a, const Eigen::VectorXd& alpha) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(a.front().rows(), a.front().cols());
  for (std::size_t k = 0; k < a.size(); ++k) acc += alpha(static_cast<Index>(k)) * a[k];
  return acc;
}

}  // namespace

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::GradientWeighted: return "gradient";
    case Variant::SecondOrder: return "second-order";
    case Variant::LayerWiseSpatial: return "layer-wise";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "gradient" || text == "gradient-weighted") return Variant::GradientWeighted;
  if (text == "second-order") return Variant::SecondOrder;
  if (text == "layer-wise") return Variant::LayerWiseSpatial;
  throw ConfigError(kModule, "unknown variant '" + std::string(text) +
                                 "' (expected gradient, second-order or layer-wise)");
}

Eigen::VectorXd channel_weights(const FeatureMaps& activations, const FeatureMaps& gradients,
                                Variant variant) {
  check_pair(activations, gradients);
  const auto channels = static_cast<Index>(activations.size());
  Eigen::VectorXd alpha(channels);
  for (Index k = 0; k < channels; ++k) {
    const auto& a = activations[static_cast<std::size_t>(k)];
    const auto& g = gradients[static_cast<std::size_t>(k)];
    switch (variant) {
      case Variant::GradientWeighted: alpha(k) = g.mean(); break;
      case Variant::SecondOrder: {
        const double a_sum = a.sum();
        const Eigen::ArrayXXd g2 = g.array().square();
        const Eigen::ArrayXXd denom = 2.0 * g2 + a_sum * g2 * g.array();
        const Eigen::ArrayXXd w = (denom.abs() < kDenominatorGuard).select(0.0, g2 / denom);
        alpha(k) = (w * g.array().max(0.0)).sum();
        break;
      }
      case Variant::LayerWiseSpatial:
        throw ConfigError(kModule, "layer-wise aggregation has no channel weights");
    }
  }
  return alpha;
}

Eigen::MatrixXd aggregate(const FeatureMaps& activations, const FeatureMaps& gradients,
                          Variant variant) {
  check_pair(activations, gradients);
  if (variant == Variant::LayerWiseSpatial) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(activations.front().rows(), activations.front().cols());
    for (std::size_t k = 0; k < activations.size(); ++k)
      acc.array() += gradients[k].array().max(0.0) * activations[k].array();
    return acc.cwiseMax(0.0);
  }
  return weighted_sum(activations, channel_weights(activations, gradients, variant)).cwiseMax(0.0);
}

Eigen::MatrixXd max_normalize(const Eigen::MatrixXd& map) {
  const double peak = map.size() == 0 ? 0.0 : map.maxCoeff();
  if (!(peak > 0.0)) return Eigen::MatrixXd::Zero(map.rows(), map.cols());
  return (map / peak).cwiseMax(0.0);
}

Eigen::MatrixXd bilinear_upsample(const Eigen::MatrixXd& raw, Index rows, Index cols) {
  if (raw.rows() < 1 || raw.cols() < 1) throw ConfigError(kModule, "cannot upsample an empty map");
  if (rows < 1 || cols < 1) throw ConfigError(kModule, "upsampling target must be at least 1x1");
  return max_normalize(bilinear_resize(raw, rows, cols));
}

Attributor::Attributor(const encoder::EncoderModel& model, const EmbeddingSet& emb)
    : model_(model), emb_(emb), moments_(dmmd::moments(emb)) {
  if (emb.dim() != model.embed_dim())
    throw ShapeError(kModule, "embedding dimension " + std::to_string(emb.dim()) +
                                  " does not match the encoder output " +
                                  std::to_string(model.embed_dim()));
}

AttributionMap Attributor::operator()(const synthgen::SampleImage& image, int conv_layer,
                                      Variant variant) const {
  const auto row = emb_.find(image.id);
  if (!row) throw NotFoundError(kModule, "sample " + image.id + " is not in the embedding set");
  model_.activation_layer(conv_layer);  // LayerError before any work

  const Eigen::VectorXd grad_embedding = moments_.gradient(emb_.info(*row).group);
  const encoder::ForwardResult fwd = encoder::forward(model_, image.pixels, true);
  const FeatureMaps& a = encoder::activations(model_, *fwd.cache, conv_layer);
  const FeatureMaps g = encoder::backward_to_layer(model_, *fwd.cache, grad_embedding, conv_layer);

  AttributionMap map;
  map.sample_id = image.id;
  map.layer_index = conv_layer;
  map.variant = variant;
  map.raw = aggregate(a, g, variant);
  map.upsampled = bilinear_upsample(map.raw, image.pixels.rows(), image.pixels.cols());
  map.n = moments_.n;
  map.m = moments_.m;
  map.statistic = moments_.statistic();
  return map;
}

AttributionMap attribute(const encoder::EncoderModel& model, const synthgen::SampleImage& image,
                         const EmbeddingSet& emb, int conv_layer, Variant variant) {
  return Attributor(model, emb)(image, conv_layer, variant);
}

double coverage(const Eigen::MatrixXd& upsampled, const BoolMask& mask) {
  if (mask.rows() != upsampled.rows() || mask.cols() != upsampled.cols())
    throw ShapeError(kModule, "mask and attribution map differ in size");
  const double total = upsampled.sum();
  if (!(total > 0.0)) return 0.0;
  return mask.select(upsampled.array(), 0.0).sum() / total;
}

double coverage(const AttributionMap& map, const BoolMask& mask) { return coverage(map.upsampled, mask); }

std::array<double, 3> colormap(double v) noexcept {
  v = std::clamp(v, 0.0, 1.0);
  return {std::clamp(3.0 * v, 0.0, 1.0), std::clamp(3.0 * v - 1.0, 0.0, 1.0),
          std::clamp(3.0 * v - 2.0, 0.0, 1.0)};
}

RgbImage render_overlay(const ImageMatrix& image, const Eigen::MatrixXd& upsampled) {
  if (image.rows() != upsampled.rows() || image.cols() != upsampled.cols())
    throw ShapeError(kModule, "overlay image and map differ in size");
  RgbImage out;
  out.height = static_cast<int>(image.rows());
  out.width = static_cast<int>(image.cols());
  out.bytes.reserve(static_cast<std::size_t>(image.size()) * 3);
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      const double gray = std::clamp(image(r, c), 0.0, 1.0);
      const double v = std::clamp(upsampled(r, c), 0.0, 1.0);
      const double weight = 0.5 * v;
      const auto color = colormap(v);
      for (const double channel : color) {
        const double mixed = (1.0 - weight) * gray + weight * channel;
        out.bytes.push_back(static_cast<std::uint8_t>(std::floor(mixed * 255.0 + 0.5)));
      }
    }
  return out;
}

void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << "id,subgroup,variant,coverage\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.subgroup << ',' << variant_name(r.variant) << ','
        << detail::format_double(r.coverage) << '\n';
}

}  // namespace dxt::attribution
