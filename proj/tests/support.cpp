#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unistd.h>

#include "dxt/encoder.hpp"

namespace dxt::oracle {

namespace {

std::vector<double> row_of(const EmbeddingSet& emb, Index r) {
  std::vector<double> v(static_cast<std::size_t>(emb.dim()));
  for (Index j = 0; j < emb.dim(); ++j) v[static_cast<std::size_t>(j)] = emb.vectors()(r, j);
  return v;
}

double statistic_skipping(const EmbeddingSet& emb, Index skip) {
  const auto h = static_cast<std::size_t>(emb.dim());
  std::vector<double> sx(h, 0.0), sy(h, 0.0);
  double n = 0, m = 0;
  for (Index r = 0; r < emb.size(); ++r) {
    if (r == skip) continue;
    const auto v = row_of(emb, r);
    auto& acc = emb.info(r).group == Group::X ? sx : sy;
    (emb.info(r).group == Group::X ? n : m) += 1;
    for (std::size_t j = 0; j < h; ++j) acc[j] += v[j];
  }
  double sq = 0;
  for (std::size_t j = 0; j < h; ++j) {
    const double d = sx[j] / n - sy[j] / m;
    sq += d * d;
  }
  return n * m / (n + m) * sq;
}

}  // namespace

EmbeddingSet make_set(const Rows& xs, const Rows& ys) {
  const Index dim = xs.empty() ? (ys.empty() ? 0 : Index(ys[0].size())) : Index(xs[0].size());
  EmbeddingSet set(dim);
  auto add = [&](const Rows& rows, Group g, const char* prefix) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Eigen::RowVectorXd v(dim);
      for (Index j = 0; j < dim; ++j) v(j) = rows[i][static_cast<std::size_t>(j)];
      set.append({prefix + std::to_string(i), g, "all"}, v);
    }
  };
  add(xs, Group::X, "x");
  add(ys, Group::Y, "y");
  return set;
}

EmbeddingSet random_set(std::uint64_t seed, int n, int m, int dim, double shift) {
  CounterRng rng(seed);
  Rows xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(m));
  for (auto& r : xs)
    for (int j = 0; j < dim; ++j) r.push_back(rng.normal());
  for (auto& r : ys)
    for (int j = 0; j < dim; ++j) r.push_back(rng.normal() + shift);
  return make_set(xs, ys);
}

double naive_statistic(const EmbeddingSet& emb) { return statistic_skipping(emb, -1); }

double naive_influence(const EmbeddingSet& emb, Index row) {
  return statistic_skipping(emb, -1) - statistic_skipping(emb, row);
}

BoolMask rasterize(const synthgen::ShapeSpec& spec, int height, int width) {
  BoolMask mask(height, width);
  const double cs = std::cos(spec.rotation), sn = std::sin(spec.rotation);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double dx = c + 0.5 - spec.center_x;
      const double dy = r + 0.5 - spec.center_y;
      // rotate the offset by −θ into the shape's frame
      const double u = cs * dx + sn * dy;
      const double v = -sn * dx + cs * dy;
      if (spec.kind == synthgen::ShapeKind::Square) {
        mask(r, c) = std::abs(u) <= spec.half_extent_a && std::abs(v) <= spec.half_extent_b;
      } else {
        const double a = u / spec.half_extent_a, b = v / spec.half_extent_b;
        mask(r, c) = a * a + b * b <= 1.0;
      }
    }
  }
  return mask;
}

double bilinear_at(const Eigen::MatrixXd& src, Index rows, Index cols, Index r, Index c) {
  const double h = double(src.rows()), w = double(src.cols());
  double y = (r + 0.5) * h / double(rows) - 0.5;
  double x = (c + 0.5) * w / double(cols) - 0.5;
  y = std::min(std::max(y, 0.0), h - 1);
  x = std::min(std::max(x, 0.0), w - 1);
  auto at = [&](double yy, double xx) { return src(Index(yy), Index(xx)); };
  const double y0 = std::floor(y), x0 = std::floor(x);
  const double y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double ty = y - y0, tx = x - x0;
  return at(y0, x0) * (1 - ty) * (1 - tx) + at(y0, x1) * (1 - ty) * tx + at(y1, x0) * ty * (1 - tx) +
         at(y1, x1) * ty * tx;
}

FdReport encoder_fd_check(std::uint64_t seed, int pairs, int entries_per_layer, double floor) {
  constexpr double eps = 1e-4;
  FdReport report;
  for (int p = 0; p < pairs; ++p) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
    const auto model = encoder::build_random(rng());
    const auto& in = model.architecture().input;
    ImageMatrix image(in.height, in.width);
    for (Index i = 0; i < image.size(); ++i) image(i) = rng.uniform();
    Eigen::VectorXd g(model.embed_dim());
    for (Index i = 0; i < g.size(); ++i) g(i) = rng.normal();

    const auto fwd = encoder::forward(model, image, true);
    ++report.pairs;
    for (const int conv : model.conv_layers()) {
      const int layer = model.activation_layer(conv);
      const auto grad = encoder::backward_to_layer(model, *fwd.cache, g, conv);
      const auto& base = fwd.cache->outputs[static_cast<std::size_t>(layer)];
      const double f0 = g.dot(fwd.embedding);
      for (int e = 0; e < entries_per_layer; ++e) {
        const auto k = static_cast<std::size_t>(rng.below(base.size()));
        const auto r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(base[k].rows())));
        const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(base[k].cols())));
        auto eval = [&](double delta) {
          auto maps = base;
          maps[k](r, c) += delta;
          return g.dot(encoder::propagate_from(model, layer, maps));
        };
        const double fp = eval(eps), fm = eval(-eps);
        const double right = (fp - f0) / eps, left = (f0 - fm) / eps;
        if (std::abs(right - left) > 1e-6 * std::max({1.0, std::abs(right), std::abs(left)})) {
          ++report.skipped;
          continue;
        }
        const double fd = (fp - fm) / (2 * eps);
        const double an = grad[k](r, c);
        const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
        report.max_error = std::max(report.max_error, err);
        ++report.checked;
      }
    }
  }
  return report;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("dxt_" + std::string(tag) + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace dxt::oracle
