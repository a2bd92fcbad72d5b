#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dxt/embeddings.hpp"
#include "dxt/synthgen.hpp"
#include "dxt/types.hpp"

namespace dxt::encoder {

enum class LayerKind : std::uint32_t {
  Conv2D = 1,  // 3×3 kernel, stride 1, zero padding 1, bias
  ReLU = 2,
  MaxPool2 = 3,  // 2×2 window, stride 2
  GlobalAvgPool = 4,
  Dense = 5,
};

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int in = 0;   // input channels / features (Conv2D, Dense)
  int out = 0;  // output channels / features (Conv2D, Dense)
};

struct TensorShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct Architecture {
  TensorShape input{1, 64, 64};
  std::vector<LayerSpec> layers;

  /// Conv(1→8)·ReLU·Pool · Conv(8→16)·ReLU·Pool · Conv(16→32)·ReLU · GAP · Dense(32→10).
  static Architecture standard(int height = 64, int width = 64, int embed_dim = 10);

  /// Output shape of every layer in order. Throws ArchError if the layers do not compose
  /// or the stack does not end in a flat (C×1×1) embedding.
  std::vector<TensorShape> composed_shapes() const;
};

/// One tensor per channel: maps[k] is the h×w map of channel k.
using FeatureMaps = std::vector<Eigen::MatrixXd>;

/// Conv2D: weights is out × (in·9) with column i·9 + 3·dr + dc. Dense: out × in.
struct LayerParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Immutable CNN weights plus their composed shapes.
class EncoderModel {
 public:
  EncoderModel(Architecture arch, std::vector<LayerParams> params, std::uint64_t seed);

  /// Every weight and bias zero.
  static EncoderModel zeros(const Architecture& arch);

  const Architecture& architecture() const noexcept { return arch_; }
  const std::vector<TensorShape>& shapes() const noexcept { return shapes_; }
  const LayerParams& params(std::size_t layer) const { return params_.at(layer); }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  int embed_dim() const noexcept { return shapes_.back().channels; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Hash of architecture, seed and weight bits; ties caches to the model that produced them.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  std::vector<int> conv_layers() const;
  int final_conv() const;
  int penultimate_conv() const;

  /// Layer whose output is the conv layer's post-activation map: the following ReLU when
  /// there is one, otherwise the conv itself. Throws LayerError for non-conv layers.
  int activation_layer(int conv_layer) const;

  /// Shape of the post-activation map of `conv_layer`.
  TensorShape activation_shape(int conv_layer) const;

 private:
  Architecture arch_;
  std::vector<TensorShape> shapes_;
  std::vector<LayerParams> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t fingerprint_ = 0;
};

/// Fan-in scaled uniform weights on [-sqrt(6/fan_in), sqrt(6/fan_in)], zero biases.
EncoderModel build_random(std::uint64_t seed, const Architecture& arch = Architecture::standard());

/// Outputs of one forward pass. outputs[i] is the output of layer i.
struct ActivationCache {
  std::uint64_t model_fingerprint = 0;
  FeatureMaps input;
  std::vector<FeatureMaps> outputs;
};

struct ForwardResult {
  Eigen::VectorXd embedding;
  std::optional<ActivationCache> cache;
};

ForwardResult forward(const EncoderModel& model, const ImageMatrix& image, bool keep_cache = false);

/// Runs layers after `layer` starting from `output`, which replaces that layer's output.
Eigen::VectorXd propagate_from(const EncoderModel& model, int layer, const FeatureMaps& output);

/// Post-activation maps of `conv_layer` taken from a cache.
const FeatureMaps& activations(const EncoderModel& model, const ActivationCache& cache,
                               int conv_layer);

/**
 * Reverse-mode gradient of dot(grad_embedding, embedding) with respect to the
 * post-activation maps of `conv_layer`.
 *
 * MaxPool routes the gradient to the first maximum in row-major order; ReLU
 * passes it only where the pre-activation is strictly positive.
 */
FeatureMaps backward_to_layer(const EncoderModel& model, const ActivationCache& cache,
                              const Eigen::Ref<const Eigen::VectorXd>& grad_embedding,
                              int conv_layer);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const EncoderModel& model);
EncoderModel load_model(const std::filesystem::path& path);

/// One row per image in order, tagged from the manifest entry at the same position.
EmbeddingSet embed_images(const EncoderModel& model, const std::vector<synthgen::SampleImage>& images,
                          const synthgen::GroupManifest& manifest, unsigned threads = 1);

/// Loads every manifest image (relative paths resolve against `base_dir`) and embeds it.
EmbeddingSet embed_dataset(const EncoderModel& model, const synthgen::GroupManifest& manifest,
                           const std::filesystem::path& base_dir, unsigned threads = 1);

}  // namespace dxt::encoder
