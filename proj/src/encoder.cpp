#include "dxt/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "dxt/error.hpp"
#include "dxt/image_io.hpp"
#include "dxt/parallel.hpp"
#include "dxt/rng.hpp"

namespace dxt::encoder {

namespace {

constexpr char kModule[] = "encoder";
constexpr char kMagic[4] = {'D', 'M', 'E', 'X'};

bool has_params(LayerKind kind) { return kind == LayerKind::Conv2D || kind == LayerKind::Dense; }

const char* kind_label(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::MaxPool2: return "MaxPool2";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::Dense: return "Dense";
  }
  return "?";
}

std::string shape_text(const TensorShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

Index param_rows(const LayerSpec& spec) { return spec.out; }
Index param_cols(const LayerSpec& spec) {
  return spec.kind == LayerKind::Conv2D ? Index{spec.in} * 9 : Index{spec.in};
}

// Overlap of a map with itself shifted by (dy, dx): output rows [r0, r0 + nr) read input rows
// [r0 + dy, r0 + dy + nr).
struct Window {
  Index r0, c0, nr, nc;
};
Window shifted_window(Index h, Index w, int dy, int dx) {
  const Index r0 = std::max<Index>(0, -dy);
  const Index c0 = std::max<Index>(0, -dx);
  return {r0, c0, std::min<Index>(h, h - dy) - r0, std::min<Index>(w, w - dx) - c0};
}

FeatureMaps conv_forward(const LayerParams& p, const FeatureMaps& in) {
  const Index h = in.front().rows();
  const Index w = in.front().cols();
  const Index out_channels = p.weights.rows();
  FeatureMaps out(static_cast<std::size_t>(out_channels));
  for (Index o = 0; o < out_channels; ++o) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Constant(h, w, p.bias(o));
    for (std::size_t i = 0; i < in.size(); ++i)
      for (int dr = 0; dr < 3; ++dr)
        for (int dc = 0; dc < 3; ++dc) {
          const double k = p.weights(o, static_cast<Index>(i) * 9 + 3 * dr + dc);
          const Window win = shifted_window(h, w, dr - 1, dc - 1);
          if (win.nr <= 0 || win.nc <= 0) continue;
          acc.block(win.r0, win.c0, win.nr, win.nc) +=
              k * in[i].block(win.r0 + dr - 1, win.c0 + dc - 1, win.nr, win.nc);
        }
    out[static_cast<std::size_t>(o)] = std::move(acc);
  }
  return out;
}

FeatureMaps conv_backward(const LayerParams& p, const FeatureMaps& grad_out, Index in_channels) {
  const Index h = grad_out.front().rows();
  const Index w = grad_out.front().cols();
  FeatureMaps grad_in(static_cast<std::size_t>(in_channels), Eigen::MatrixXd::Zero(h, w));
  for (Index i = 0; i < in_channels; ++i)
    for (std::size_t o = 0; o < grad_out.size(); ++o)
      for (int dr = 0; dr < 3; ++dr)
        for (int dc = 0; dc < 3; ++dc) {
          const double k = p.weights(static_cast<Index>(o), i * 9 + 3 * dr + dc);
          const Window win = shifted_window(h, w, dr - 1, dc - 1);
          if (win.nr <= 0 || win.nc <= 0) continue;
          grad_in[static_cast<std::size_t>(i)].block(win.r0 + dr - 1, win.c0 + dc - 1, win.nr, win.nc) +=
              k * grad_out[o].block(win.r0, win.c0, win.nr, win.nc);
        }
  return grad_in;
}

FeatureMaps relu_forward(const FeatureMaps& in) {
  FeatureMaps out;
  out.reserve(in.size());
  for (const auto& m : in) out.push_back(m.cwiseMax(0.0));
  return out;
}

FeatureMaps relu_backward(const FeatureMaps& pre, const FeatureMaps& grad_out) {
  FeatureMaps grad_in;
  grad_in.reserve(pre.size());
  for (std::size_t k = 0; k < pre.size(); ++k)
    grad_in.push_back((pre[k].array() > 0.0).select(grad_out[k], 0.0));
  return grad_in;
}

FeatureMaps pool_forward(const FeatureMaps& in) {
  FeatureMaps out;
  out.reserve(in.size());
  for (const auto& m : in) {
    Eigen::MatrixXd o(m.rows() / 2, m.cols() / 2);
    for (Index r = 0; r < o.rows(); ++r)
      for (Index c = 0; c < o.cols(); ++c) o(r, c) = m.block<2, 2>(2 * r, 2 * c).maxCoeff();
    out.push_back(std::move(o));
  }
  return out;
}

FeatureMaps pool_backward(const FeatureMaps& in, const FeatureMaps& grad_out) {
  FeatureMaps grad_in;
  grad_in.reserve(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto& m = in[k];
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m.rows(), m.cols());
    for (Index r = 0; r < grad_out[k].rows(); ++r)
      for (Index c = 0; c < grad_out[k].cols(); ++c) {
        // First maximum in row-major scan order wins ties.
        Index br = 2 * r, bc = 2 * c;
        for (Index dr = 0; dr < 2; ++dr)
          for (Index dc = 0; dc < 2; ++dc)
            if (m(2 * r + dr, 2 * c + dc) > m(br, bc)) {
              br = 2 * r + dr;
              bc = 2 * c + dc;
            }
        g(br, bc) += grad_out[k](r, c);
      }
    grad_in.push_back(std::move(g));
  }
  return grad_in;
}

FeatureMaps gap_forward(const FeatureMaps& in) {
  FeatureMaps out;
  out.reserve(in.size());
  for (const auto& m : in) out.push_back(Eigen::MatrixXd::Constant(1, 1, m.mean()));
  return out;
}

FeatureMaps gap_backward(const FeatureMaps& in, const FeatureMaps& grad_out) {
  FeatureMaps grad_in;
  grad_in.reserve(in.size());
  for (std::size_t k = 0; k < in.size(); ++k)
    grad_in.push_back(Eigen::MatrixXd::Constant(in[k].rows(), in[k].cols(),
                                                grad_out[k](0, 0) / static_cast<double>(in[k].size())));
  return grad_in;
}

Eigen::VectorXd flatten(const FeatureMaps& maps) {
  Eigen::VectorXd v(static_cast<Index>(maps.size()));
  for (std::size_t k = 0; k < maps.size(); ++k) v(static_cast<Index>(k)) = maps[k](0, 0);
  return v;
}

FeatureMaps unflatten(const Eigen::Ref<const Eigen::VectorXd>& v) {
  FeatureMaps maps;
  maps.reserve(static_cast<std::size_t>(v.size()));
  for (Index k = 0; k < v.size(); ++k) maps.push_back(Eigen::MatrixXd::Constant(1, 1, v(k)));
  return maps;
}

FeatureMaps apply_layer(const LayerSpec& spec, const LayerParams& p, const FeatureMaps& in) {
  switch (spec.kind) {
    case LayerKind::Conv2D: return conv_forward(p, in);
    case LayerKind::ReLU: return relu_forward(in);
    case LayerKind::MaxPool2: return pool_forward(in);
    case LayerKind::GlobalAvgPool: return gap_forward(in);
    case LayerKind::Dense: return unflatten(p.weights * flatten(in) + p.bias);
  }
  throw ArchError(kModule, "unknown layer kind");
}

void check_shape(const FeatureMaps& maps, const TensorShape& shape, const char* what) {
  bool ok = static_cast<int>(maps.size()) == shape.channels;
  for (const auto& m : maps) ok = ok && m.rows() == shape.height && m.cols() == shape.width;
  if (!ok) throw ShapeError(kModule, std::string(what) + " does not have shape " + shape_text(shape));
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t fnv1a(std::uint64_t h, const T& value) {
  return fnv1a(h, &value, sizeof value);
}

}  // namespace

Architecture Architecture::standard(int height, int width, int embed_dim) {
  Architecture arch;
  arch.input = {1, height, width};
  arch.layers = {
      {LayerKind::Conv2D, 1, 8},   {LayerKind::ReLU},     {LayerKind::MaxPool2},
      {LayerKind::Conv2D, 8, 16},  {LayerKind::ReLU},     {LayerKind::MaxPool2},
      {LayerKind::Conv2D, 16, 32}, {LayerKind::ReLU},     {LayerKind::GlobalAvgPool},
      {LayerKind::Dense, 32, embed_dim},
  };
  return arch;
}

std::vector<TensorShape> Architecture::composed_shapes() const {
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0)
    throw ArchError(kModule, "input shape must be positive, got " + shape_text(input));
  if (layers.empty()) throw ArchError(kModule, "architecture has no layers");
  std::vector<TensorShape> shapes;
  TensorShape s = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + kind_label(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::Conv2D:
        if (l.in != s.channels || l.out <= 0)
          throw ArchError(kModule, where + " expects " + std::to_string(l.in) +
                                       " input channels, receives " + shape_text(s));
        s.channels = l.out;
        break;
      case LayerKind::ReLU: break;
      case LayerKind::MaxPool2:
        if (s.height < 2 || s.width < 2) throw ArchError(kModule, where + " input too small: " + shape_text(s));
        s.height /= 2;
        s.width /= 2;
        break;
      case LayerKind::GlobalAvgPool: s.height = s.width = 1; break;
      case LayerKind::Dense:
        if (s.height != 1 || s.width != 1 || l.in != s.channels || l.out <= 0)
          throw ArchError(kModule, where + " expects " + std::to_string(l.in) +
                                       " flat features, receives " + shape_text(s));
        s.channels = l.out;
        break;
      default: throw ArchError(kModule, where + " has an unknown kind");
    }
    shapes.push_back(s);
  }
  if (s.height != 1 || s.width != 1)
    throw ArchError(kModule, "architecture must end in a flat embedding, ends in " + shape_text(s));
  return shapes;
}

EncoderModel::EncoderModel(Architecture arch, std::vector<LayerParams> params, std::uint64_t seed)
    : arch_(std::move(arch)), shapes_(arch_.composed_shapes()), params_(std::move(params)), seed_(seed) {
  if (params_.size() != arch_.layers.size())
    throw ArchError(kModule, "parameter list length does not match layer count");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, seed_);
  h = fnv1a(h, arch_.input);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const LayerSpec& l = arch_.layers[i];
    const LayerParams& p = params_[i];
    h = fnv1a(h, l);
    if (has_params(l.kind)) {
      if (p.weights.rows() != param_rows(l) || p.weights.cols() != param_cols(l) ||
          p.bias.size() != l.out)
        throw ArchError(kModule, "parameters of layer " + std::to_string(i) + " have wrong size");
      if (!p.weights.allFinite() || !p.bias.allFinite())
        throw ArchError(kModule, "non-finite parameters in layer " + std::to_string(i));
    } else if (p.weights.size() != 0 || p.bias.size() != 0) {
      throw ArchError(kModule, "layer " + std::to_string(i) + " takes no parameters");
    }
    h = fnv1a(h, p.weights.data(), sizeof(double) * static_cast<std::size_t>(p.weights.size()));
    h = fnv1a(h, p.bias.data(), sizeof(double) * static_cast<std::size_t>(p.bias.size()));
  }
  fingerprint_ = h;
}

EncoderModel EncoderModel::zeros(const Architecture& arch) {
  std::vector<LayerParams> params(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i)
    if (has_params(arch.layers[i].kind)) {
      params[i].weights = Eigen::MatrixXd::Zero(param_rows(arch.layers[i]), param_cols(arch.layers[i]));
      params[i].bias = Eigen::VectorXd::Zero(arch.layers[i].out);
    }
  return EncoderModel(arch, std::move(params), 0);
}

std::vector<int> EncoderModel::conv_layers() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < arch_.layers.size(); ++i)
    if (arch_.layers[i].kind == LayerKind::Conv2D) out.push_back(static_cast<int>(i));
  return out;
}

int EncoderModel::final_conv() const {
  const auto convs = conv_layers();
  if (convs.empty()) throw LayerError(kModule, "model has no convolutional layer");
  return convs.back();
}

int EncoderModel::penultimate_conv() const {
  const auto convs = conv_layers();
  if (convs.size() < 2) throw LayerError(kModule, "model has fewer than two convolutional layers");
  return convs[convs.size() - 2];
}

int EncoderModel::activation_layer(int conv_layer) const {
  if (conv_layer < 0 || conv_layer >= static_cast<int>(arch_.layers.size()) ||
      arch_.layers[static_cast<std::size_t>(conv_layer)].kind != LayerKind::Conv2D)
    throw LayerError(kModule, "layer " + std::to_string(conv_layer) + " is not convolutional");
  const std::size_t next = static_cast<std::size_t>(conv_layer) + 1;
  if (next < arch_.layers.size() && arch_.layers[next].kind == LayerKind::ReLU)
    return static_cast<int>(next);
  return conv_layer;
}

TensorShape EncoderModel::activation_shape(int conv_layer) const {
  return shapes_[static_cast<std::size_t>(activation_layer(conv_layer))];
}

EncoderModel build_random(std::uint64_t seed, const Architecture& arch) {
  arch.composed_shapes();
  std::vector<LayerParams> params(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (!has_params(l.kind)) continue;
    CounterRng rng(derive_seed(seed, i));
    const double bound = std::sqrt(6.0 / static_cast<double>(param_cols(l)));
    Eigen::MatrixXd w(param_rows(l), param_cols(l));
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    params[i].weights = std::move(w);
    params[i].bias = Eigen::VectorXd::Zero(l.out);
  }
  return EncoderModel(arch, std::move(params), seed);
}

ForwardResult forward(const EncoderModel& model, const ImageMatrix& image, bool keep_cache) {
  const TensorShape& in_shape = model.architecture().input;
  if (in_shape.channels != 1 || image.rows() != in_shape.height || image.cols() != in_shape.width)
    throw ShapeError(kModule, "image is " + std::to_string(image.rows()) + "x" +
                                  std::to_string(image.cols()) + ", model expects " +
                                  shape_text(in_shape));
  ForwardResult result;
  FeatureMaps current{image};
  ActivationCache cache;
  if (keep_cache) {
    cache.model_fingerprint = model.fingerprint();
    cache.input = current;
    cache.outputs.reserve(model.architecture().layers.size());
  }
  for (std::size_t i = 0; i < model.architecture().layers.size(); ++i) {
    current = apply_layer(model.architecture().layers[i], model.params(i), current);
    if (keep_cache) cache.outputs.push_back(current);
  }
  result.embedding = flatten(current);
  if (keep_cache) result.cache = std::move(cache);
  return result;
}

Eigen::VectorXd propagate_from(const EncoderModel& model, int layer, const FeatureMaps& output) {
  const auto& layers = model.architecture().layers;
  if (layer < 0 || layer >= static_cast<int>(layers.size()))
    throw LayerError(kModule, "layer index " + std::to_string(layer) + " out of range");
  check_shape(output, model.shapes()[static_cast<std::size_t>(layer)], "replacement activation");
  FeatureMaps current = output;
  for (std::size_t i = static_cast<std::size_t>(layer) + 1; i < layers.size(); ++i)
    current = apply_layer(layers[i], model.params(i), current);
  return flatten(current);
}

namespace {

void check_cache(const EncoderModel& model, const ActivationCache& cache) {
  if (cache.model_fingerprint != model.fingerprint())
    throw CacheError(kModule, "activation cache was produced by a different model");
  if (cache.outputs.size() != model.shapes().size())
    throw CacheError(kModule, "activation cache has the wrong number of layers");
  for (std::size_t i = 0; i < cache.outputs.size(); ++i) {
    try {
      check_shape(cache.outputs[i], model.shapes()[i], "cached activation");
    } catch (const ShapeError& e) {
      throw CacheError(kModule, std::string(e.what()) + " (layer " + std::to_string(i) + ")");
    }
  }
}

}  // namespace

const FeatureMaps& activations(const EncoderModel& model, const ActivationCache& cache,
                               int conv_layer) {
  check_cache(model, cache);
  return cache.outputs[static_cast<std::size_t>(model.activation_layer(conv_layer))];
}

FeatureMaps backward_to_layer(const EncoderModel& model, const ActivationCache& cache,
                              const Eigen::Ref<const Eigen::VectorXd>& grad_embedding,
                              int conv_layer) {
  const int target = model.activation_layer(conv_layer);
  check_cache(model, cache);
  if (grad_embedding.size() != model.embed_dim())
    throw ShapeError(kModule, "embedding gradient has length " + std::to_string(grad_embedding.size()) +
                                  ", expected " + std::to_string(model.embed_dim()));
  const auto& layers = model.architecture().layers;
  FeatureMaps grad = unflatten(grad_embedding);
  for (int i = static_cast<int>(layers.size()) - 1; i > target; --i) {
    const std::size_t li = static_cast<std::size_t>(i);
    const FeatureMaps& layer_input = i == 0 ? cache.input : cache.outputs[li - 1];
    switch (layers[li].kind) {
      case LayerKind::Conv2D:
        grad = conv_backward(model.params(li), grad, layers[li].in);
        break;
      case LayerKind::ReLU: grad = relu_backward(layer_input, grad); break;
      case LayerKind::MaxPool2: grad = pool_backward(layer_input, grad); break;
      case LayerKind::GlobalAvgPool: grad = gap_backward(layer_input, grad); break;
      case LayerKind::Dense:
        grad = unflatten(model.params(li).weights.transpose() * flatten(grad));
        break;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Model file: "DMEX", u32 version, u64 seed, u32 input c/h/w, u32 layer count,
// (u32 kind, u32 in, u32 out) per layer, then for each Conv2D/Dense layer the
// row-major f64 weights followed by the f64 biases. All little-endian.

namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& bytes() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::uint64_t le(int n) {
    if (pos_ + static_cast<std::size_t>(n) > bytes_.size())
      throw FormatError(kModule, "model file " + source_ + " is truncated at byte " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const std::filesystem::path& path, const EncoderModel& model) {
  Writer w;
  const auto& arch = model.architecture();
  w.u32(kModelFormatVersion);
  w.u64(model.seed());
  w.u32(static_cast<std::uint32_t>(arch.input.channels));
  w.u32(static_cast<std::uint32_t>(arch.input.height));
  w.u32(static_cast<std::uint32_t>(arch.input.width));
  w.u32(static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& l : arch.layers) {
    w.u32(static_cast<std::uint32_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
  }
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (!has_params(arch.layers[i].kind)) continue;
    const LayerParams& p = model.params(i);
    for (Index r = 0; r < p.weights.rows(); ++r)
      for (Index c = 0; c < p.weights.cols(); ++c) w.f64(p.weights(r, c));
    for (Index r = 0; r < p.bias.size(); ++r) w.f64(p.bias(r));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(kModule, "cannot write model to " + path.string());
  out.write(kMagic, 4);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError(kModule, "write failed for " + path.string());
}

EncoderModel load_model(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(kModule, path.string() + " is not a model file (bad magic)");
  const std::string body = bytes.substr(4);
  Reader r(body, path.string());
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw FormatError(kModule, "unsupported model format version " + std::to_string(version) +
                                   " (this build reads version " +
                                   std::to_string(kModelFormatVersion) + ")");
  const std::uint64_t seed = r.u64();
  Architecture arch;
  arch.input.channels = static_cast<int>(r.u32());
  arch.input.height = static_cast<int>(r.u32());
  arch.input.width = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  if (count > 4096) throw FormatError(kModule, "implausible layer count " + std::to_string(count));
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerSpec l;
    const std::uint32_t kind = r.u32();
    if (kind < 1 || kind > 5) throw FormatError(kModule, "unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    arch.layers.push_back(l);
  }
  try {
    arch.composed_shapes();
  } catch (const ArchError& e) {
    throw FormatError(kModule, std::string("model file describes an invalid architecture: ") + e.what());
  }
  std::vector<LayerParams> params(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (!has_params(l.kind)) continue;
    params[i].weights.resize(param_rows(l), param_cols(l));
    for (Index row = 0; row < params[i].weights.rows(); ++row)
      for (Index c = 0; c < params[i].weights.cols(); ++c) params[i].weights(row, c) = r.f64();
    params[i].bias.resize(l.out);
    for (Index row = 0; row < l.out; ++row) params[i].bias(row) = r.f64();
  }
  if (!r.at_end()) throw FormatError(kModule, "trailing bytes after model weights in " + path.string());
  return EncoderModel(std::move(arch), std::move(params), seed);
}

EmbeddingSet embed_images(const EncoderModel& model, const std::vector<synthgen::SampleImage>& images,
                          const synthgen::GroupManifest& manifest, unsigned threads) {
  if (images.size() != manifest.entries.size())
    throw ConfigError(kModule, "image list and manifest differ in length");
  Eigen::MatrixXd vectors(static_cast<Index>(images.size()), model.embed_dim());
  parallel_for(images.size(), threads, [&](std::size_t k) {
    vectors.row(static_cast<Index>(k)) = forward(model, images[k].pixels).embedding.transpose();
  });
  std::vector<SampleInfo> info;
  info.reserve(images.size());
  for (const auto& e : manifest.entries) info.push_back({e.id, e.group, e.subgroup});
  return EmbeddingSet(std::move(info), std::move(vectors));
}

EmbeddingSet embed_dataset(const EncoderModel& model, const synthgen::GroupManifest& manifest,
                           const std::filesystem::path& base_dir, unsigned threads) {
  return embed_images(model, synthgen::load_images(manifest, base_dir), manifest, threads);
}

}  // namespace dxt::encoder
