#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dxt/embeddings.hpp"

namespace dxt::dmmd {

/// Pairwise (tree) summation of the selected rows of `data`, in the given order.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> pairwise_row_sum(
    const Eigen::MatrixBase<Derived>& data, std::span<const Index> rows) {
  using Row = Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic>;
  constexpr std::size_t kLeaf = 8;
  if (rows.size() <= kLeaf) {
    Row acc = Row::Zero(data.cols());
    for (const Index r : rows) acc += data.row(r);
    return acc;
  }
  const std::size_t half = rows.size() / 2;
  return pairwise_row_sum(data, rows.first(half)) + pairwise_row_sum(data, rows.subspan(half));
}

/// Row indices ordered lexicographically by row contents (ties by index). Summing a
/// subset in this order makes the result a function of the subset's multiset of rows.
template <typename Derived>
std::vector<Index> canonical_row_order(const Eigen::MatrixBase<Derived>& data) {
  std::vector<Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < data.cols(); ++j) {
      if (data(a, j) < data(b, j)) return true;
      if (data(b, j) < data(a, j)) return false;
    }
    return a < b;
  });
  return order;
}

/// (n·m / (n + m)) · ‖mean_x − mean_y‖².
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar statistic_from_means(const Eigen::MatrixBase<DerivedX>& mean_x,
                                               const Eigen::MatrixBase<DerivedY>& mean_y, Index n,
                                               Index m) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar scale = Scalar(n) * Scalar(m) / Scalar(n + m);
  return scale * (mean_x - mean_y).squaredNorm();
}

/// Group means of an embedding set, computed once and shared by the statistic,
/// its gradient and the influence scores.
struct GroupMoments {
  Eigen::RowVectorXd mean_x;
  Eigen::RowVectorXd mean_y;
  Index n = 0;
  Index m = 0;

  double statistic() const { return statistic_from_means(mean_x, mean_y, n, m); }

  /// ∂S/∂φ(s) for any sample s of `group`:
  /// X: (2m/(n+m))·(μ_X − μ_Y); Y: −(2n/(n+m))·(μ_X − μ_Y).
  Eigen::VectorXd gradient(Group group) const;
};

/// Validates the set (H ≥ 1, both groups nonempty, finite values) and computes the means
/// by pairwise summation in canonical row order.
GroupMoments moments(const EmbeddingSet& emb);

/// Deep MMD statistic S = (nm/(n+m))·‖μ_X − μ_Y‖².
double statistic(const EmbeddingSet& emb);

/// ∂S/∂φ(sample). Throws NotFoundError for an unknown id.
Eigen::VectorXd statistic_gradient_wrt_sample(const EmbeddingSet& emb, std::string_view sample_id);

struct PermutationOptions {
  int num_permutations = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool keep_statistics = false;
};

struct TestResult {
  double statistic = 0.0;
  Index n = 0;
  Index m = 0;
  double p_value = 1.0;
  int num_permutations = 0;
  std::uint64_t seed = 0;
  Index exceed_count = 0;  // #{b : S_b ≥ S}
  std::vector<double> permutation_statistics;  // filled when keep_statistics is set
};

/**
 * Monte Carlo permutation test. Labels of the pooled embeddings are shuffled
 * B times (Fisher–Yates, permutation b seeded by derive_seed(seed, b)), keeping
 * the group sizes; p = (1 + #{S_b ≥ S}) / (B + 1). The result is identical for
 * any thread count.
 */
TestResult permutation_pvalue(const EmbeddingSet& emb, const PermutationOptions& options);

/// {"statistic":…,"p_value":…,"n":…,"m":…,"B":…,"seed":…}
std::string to_json(const TestResult& result);

/// One value per line, header `statistic`.
void write_permutation_csv(const std::filesystem::path& path, const TestResult& result);

}  // namespace dxt::dmmd
