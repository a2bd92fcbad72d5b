#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dxt/dmmd.hpp"
#include "dxt/encoder.hpp"

namespace dxt::attribution {

using encoder::FeatureMaps;

/// Channel aggregation rule turning (A, ∂S/∂A) into a spatial map.
enum class Variant {
  GradientWeighted,  // α_k = mean(G_k); ReLU(Σ α_k A_k)
  SecondOrder,       // α_k = Σ w_k·ReLU(G_k), w = G² / (2G² + ΣA_k·G³); ReLU(Σ α_k A_k)
  LayerWiseSpatial,  // ReLU(Σ_k ReLU(G_k) ⊙ A_k)
};

std::string_view variant_name(Variant v) noexcept;
Variant parse_variant(std::string_view text);

/// Second-order weights are set to zero where |denominator| falls below this.
inline constexpr double kDenominatorGuard = 1e-12;

/// Per-channel weights α_k for the GradientWeighted and SecondOrder variants.
Eigen::VectorXd channel_weights(const FeatureMaps& activations, const FeatureMaps& gradients,
                                Variant variant);

/// Raw nonnegative map at feature resolution. Throws ShapeError when A and G disagree.
Eigen::MatrixXd aggregate(const FeatureMaps& activations, const FeatureMaps& gradients,
                          Variant variant);

/// Bilinear resampling with half-pixel centers: output (r, c) reads the source at
/// ((r + 0.5)·h/H − 0.5, (c + 0.5)·w/W − 0.5), clamped to the source edges.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> bilinear_resize(
    const Eigen::MatrixBase<Derived>& src, Index rows, Index cols) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  const Index h = src.rows();
  const Index w = src.cols();
  auto coord = [](Index i, Index src_len, Index dst_len, Index& i0, Index& i1, Scalar& t) {
    Scalar s = (Scalar(i) + Scalar(0.5)) * Scalar(src_len) / Scalar(dst_len) - Scalar(0.5);
    s = std::clamp(s, Scalar(0), Scalar(src_len - 1));
    i0 = static_cast<Index>(std::floor(s));
    i1 = std::min(i0 + 1, src_len - 1);
    t = s - Scalar(i0);
  };
  for (Index r = 0; r < rows; ++r) {
    Index r0, r1;
    Scalar fy;
    coord(r, h, rows, r0, r1, fy);
    for (Index c = 0; c < cols; ++c) {
      Index c0, c1;
      Scalar fx;
      coord(c, w, cols, c0, c1, fx);
      const Scalar top = (Scalar(1) - fx) * src(r0, c0) + fx * src(r0, c1);
      const Scalar bottom = (Scalar(1) - fx) * src(r1, c0) + fx * src(r1, c1);
      out(r, c) = (Scalar(1) - fy) * top + fy * bottom;
    }
  }
  return out;
}

/// Divides by the maximum; maps whose maximum is ≤ 0 become all zero.
Eigen::MatrixXd max_normalize(const Eigen::MatrixXd& map);

/// bilinear_resize followed by max_normalize. Throws ConfigError on empty source or target.
Eigen::MatrixXd bilinear_upsample(const Eigen::MatrixXd& raw, Index rows, Index cols);

struct AttributionMap {
  std::string sample_id;
  int layer_index = 0;
  Variant variant = Variant::GradientWeighted;
  Eigen::MatrixXd raw;        // h×w, ≥ 0
  Eigen::MatrixXd upsampled;  // input resolution, in [0, 1]
  Index n = 0;
  Index m = 0;
  double statistic = 0.0;
};

/**
 * Explains one sample's contribution to the statistic of a frozen
 * (encoder, embedding set) pair. The group means are computed once at
 * construction and shared by every call.
 */
class Attributor {
 public:
  Attributor(const encoder::EncoderModel& model, const EmbeddingSet& emb);

  /// Backpropagates ∂S/∂φ(image) to `conv_layer` and aggregates with `variant`.
  /// Throws NotFoundError if the image id is not in the embedding set.
  AttributionMap operator()(const synthgen::SampleImage& image, int conv_layer, Variant variant) const;

 private:
  const encoder::EncoderModel& model_;
  const EmbeddingSet& emb_;
  dmmd::GroupMoments moments_;
};

AttributionMap attribute(const encoder::EncoderModel& model, const synthgen::SampleImage& image,
                         const EmbeddingSet& emb, int conv_layer, Variant variant);

/// Share of the upsampled map's mass that falls inside `mask`; 0 for an all-zero map.
double coverage(const AttributionMap& map, const BoolMask& mask);
double coverage(const Eigen::MatrixXd& upsampled, const BoolMask& mask);

/// Monotone "hot" colormap: black → red → yellow → white over [0, 1].
std::array<double, 3> colormap(double v) noexcept;

/// Blends the grayscale input with colormap(v) using weight 0.5·v per pixel.
RgbImage render_overlay(const ImageMatrix& image, const Eigen::MatrixXd& upsampled);

struct CoverageRow {
  std::string id;
  std::string subgroup;
  Variant variant = Variant::GradientWeighted;
  double coverage = 0.0;
};

/// CSV `id,subgroup,variant,coverage`.
void write_coverage_csv(const std::filesystem::path& path, const std::vector<CoverageRow>& rows);

}  // namespace dxt::attribution
