// Independent reference implementations used by the unit suites and the
// acceptance runner. Nothing here calls the code path it is checking.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dxt/embeddings.hpp"
#include "dxt/rng.hpp"
#include "dxt/synthgen.hpp"

namespace dxt::oracle {

using Rows = std::vector<std::vector<double>>;

/// X rows are named x0, x1, ..., Y rows y0, y1, ...
EmbeddingSet make_set(const Rows& xs, const Rows& ys);

/// Standard-normal rows; Y is shifted by `shift` in every coordinate.
EmbeddingSet random_set(std::uint64_t seed, int n, int m, int dim, double shift = 0.0);

/// (nm/(n+m))·‖mean_x − mean_y‖² with plain left-to-right sums.
double naive_statistic(const EmbeddingSet& emb);

/// S(full) − S(without row), recomputed from scratch.
double naive_influence(const EmbeddingSet& emb, Index row);

/// Pixel mask by direct evaluation of the inclusion test at every pixel center.
BoolMask rasterize(const synthgen::ShapeSpec& spec, int height, int width);

/// Evaluates the half-pixel bilinear sampling formula at one output position.
double bilinear_at(const Eigen::MatrixXd& src, Index rows, Index cols, Index r, Index c);

struct FdReport {
  int pairs = 0;
  int checked = 0;
  int skipped = 0;  // a ReLU or pooling decision flipped inside ±ε
  double max_error = 0.0;  // |fd − an| / max(|fd|, |an|, floor)
  bool ok(double tol) const { return max_error < tol; }
};

/**
 * Central finite differences (ε = 1e-4) of dot(g, embedding) with respect to
 * sampled post-activation entries of every conv layer, compared with
 * backward_to_layer. Each pair uses a fresh random model, a uniform random
 * image and a normal grad vector. Entries whose one-sided slopes disagree
 * sit on a kink of the piecewise-linear network and are skipped.
 */
FdReport encoder_fd_check(std::uint64_t seed, int pairs, int entries_per_layer, double floor = 1e-8);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace dxt::oracle
