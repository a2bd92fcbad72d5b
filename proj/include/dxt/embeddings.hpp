#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dxt/types.hpp"

namespace dxt {

struct SampleInfo {
  std::string id;
  Group group = Group::X;
  std::string subgroup;
};

/**
 * Labeled embedding table: row i of `vectors()` is the embedding of sample
 * `info()[i]`. Ids are unique and every value is finite; both are enforced on
 * insertion (DataError).
 */
class EmbeddingSet {
 public:
  explicit EmbeddingSet(Index dim = 0) : vectors_(0, dim) {}
  EmbeddingSet(std::vector<SampleInfo> info, Eigen::MatrixXd vectors);

  Index dim() const noexcept { return vectors_.cols(); }
  Index size() const noexcept { return vectors_.rows(); }
  bool empty() const noexcept { return size() == 0; }

  const std::vector<SampleInfo>& info() const noexcept { return info_; }
  const SampleInfo& info(Index row) const { return info_[static_cast<std::size_t>(row)]; }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  auto row(Index i) const { return vectors_.row(i); }

  void append(SampleInfo info, const Eigen::Ref<const Eigen::RowVectorXd>& vector);

  std::optional<Index> find(std::string_view id) const;
  std::vector<Index> indices_of(Group group) const;
  Index count(Group group) const;

  /// Rows in the given order.
  EmbeddingSet subset(std::span<const Index> rows) const;

 private:
  void index_row(Index row);

  std::vector<SampleInfo> info_;
  Eigen::MatrixXd vectors_;
  std::unordered_map<std::string, Index> by_id_;
};

/// CSV with header `id,group,subgroup,e0,...,e{H-1}`; values use 17 significant digits.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet read_embeddings_csv(const std::filesystem::path& path);

}  // namespace dxt
