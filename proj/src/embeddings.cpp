#include "dxt/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "csv.hpp"
#include "dxt/error.hpp"

namespace dxt {

namespace detail {

double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError("io", "cannot parse number '" + std::string(text) + "' in " +
                                std::string(context));
  return value;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace detail

EmbeddingSet::EmbeddingSet(std::vector<SampleInfo> info, Eigen::MatrixXd vectors)
    : info_(std::move(info)), vectors_(std::move(vectors)) {
  if (static_cast<Index>(info_.size()) != vectors_.rows())
    throw DataError("encoder", "embedding table has " + std::to_string(vectors_.rows()) +
                                   " rows but " + std::to_string(info_.size()) + " labels");
  for (Index i = 0; i < size(); ++i) index_row(i);
}

void EmbeddingSet::index_row(Index row) {
  const SampleInfo& s = info_[static_cast<std::size_t>(row)];
  if (!vectors_.row(row).allFinite())
    throw DataError("encoder", "non-finite embedding for id " + s.id);
  if (!by_id_.emplace(s.id, row).second) throw DataError("encoder", "duplicate id " + s.id);
}

void EmbeddingSet::append(SampleInfo info, const Eigen::Ref<const Eigen::RowVectorXd>& vector) {
  if (vector.size() != dim())
    throw DataError("encoder", "embedding for id " + info.id + " has length " +
                                   std::to_string(vector.size()) + ", expected " +
                                   std::to_string(dim()));
  vectors_.conservativeResize(size() + 1, Eigen::NoChange);
  vectors_.row(size() - 1) = vector;
  info_.push_back(std::move(info));
  try {
    index_row(size() - 1);
  } catch (...) {
    info_.pop_back();
    vectors_.conservativeResize(size() - 1, Eigen::NoChange);
    throw;
  }
}

std::optional<Index> EmbeddingSet::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<Index> EmbeddingSet::indices_of(Group group) const {
  std::vector<Index> rows;
  for (Index i = 0; i < size(); ++i)
    if (info_[static_cast<std::size_t>(i)].group == group) rows.push_back(i);
  return rows;
}

Index EmbeddingSet::count(Group group) const {
  Index n = 0;
  for (const auto& s : info_) n += (s.group == group);
  return n;
}

EmbeddingSet EmbeddingSet::subset(std::span<const Index> rows) const {
  std::vector<SampleInfo> info;
  info.reserve(rows.size());
  Eigen::MatrixXd vectors(static_cast<Index>(rows.size()), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    info.push_back(info_.at(static_cast<std::size_t>(rows[k])));
    vectors.row(static_cast<Index>(k)) = vectors_.row(rows[k]);
  }
  return EmbeddingSet(std::move(info), std::move(vectors));
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path);
  if (!out) throw IoError("encoder", "cannot write embeddings to " + path.string());
  out << "id,group,subgroup";
  for (Index j = 0; j < set.dim(); ++j) out << ",e" << j;
  out << '\n';
  for (Index i = 0; i < set.size(); ++i) {
    const SampleInfo& s = set.info(i);
    out << s.id << ',' << group_name(s.group) << ',' << s.subgroup;
    for (Index j = 0; j < set.dim(); ++j) out << ',' << detail::format_double(set.vectors()(i, j));
    out << '\n';
  }
  if (!out) throw IoError("encoder", "write failed for " + path.string());
}

EmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("encoder", "cannot open embeddings " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("encoder", "empty embeddings file " + path.string());
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "group" || header[2] != "subgroup")
    throw FormatError("encoder", "embeddings header must start with id,group,subgroup,e0");
  const Index dim = static_cast<Index>(header.size()) - 3;
  for (Index j = 0; j < dim; ++j)
    if (header[static_cast<std::size_t>(j) + 3] != "e" + std::to_string(j))
      throw FormatError("encoder", "unexpected embeddings column " + header[static_cast<std::size_t>(j) + 3]);

  std::vector<SampleInfo> info;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<Index>(fields.size()) != dim + 3)
      throw FormatError("encoder", "embeddings line " + std::to_string(line_no) + " has " +
                                       std::to_string(fields.size()) + " fields");
    info.push_back({fields[0], parse_group(fields[1]), fields[2]});
    for (Index j = 0; j < dim; ++j)
      values.push_back(detail::parse_double(fields[static_cast<std::size_t>(j) + 3], path.string()));
  }
  const Index rows = static_cast<Index>(info.size());
  Eigen::MatrixXd vectors =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          values.data(), rows, dim);
  return EmbeddingSet(std::move(info), std::move(vectors));
}

}  // namespace dxt
