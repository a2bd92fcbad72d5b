#include "dxt/dmmd.hpp"

#include <fstream>
#include <json.hpp>

#include "csv.hpp"
#include "dxt/error.hpp"
#include "dxt/parallel.hpp"
#include "dxt/rng.hpp"

namespace dxt::dmmd {

namespace {

constexpr char kModule[] = "dmmd";

void validate(const EmbeddingSet& emb) {
  if (emb.dim() == 0) throw ConfigError(kModule, "embedding dimension must be at least 1");
  if (!emb.vectors().allFinite()) throw DataError(kModule, "embeddings contain NaN or Inf");
  if (emb.count(Group::X) == 0 || emb.count(Group::Y) == 0)
    throw EmptyGroupError(kModule, "both groups need at least one sample (n=" +
                                       std::to_string(emb.count(Group::X)) +
                                       ", m=" + std::to_string(emb.count(Group::Y)) + ")");
}

// Statistic of an arbitrary split of the pooled rows, summing each side in canonical order.
class SplitStatistic {
 public:
  explicit SplitStatistic(const Eigen::MatrixXd& pooled)
      : pooled_(pooled), order_(canonical_row_order(pooled)) {}

  double operator()(const std::vector<char>& in_x) const {
    std::vector<Index> xs, ys;
    xs.reserve(order_.size());
    ys.reserve(order_.size());
    for (const Index r : order_) (in_x[static_cast<std::size_t>(r)] ? xs : ys).push_back(r);
    const auto n = static_cast<Index>(xs.size());
    const auto m = static_cast<Index>(ys.size());
    const Eigen::RowVectorXd mean_x = pairwise_row_sum(pooled_, xs) / static_cast<double>(n);
    const Eigen::RowVectorXd mean_y = pairwise_row_sum(pooled_, ys) / static_cast<double>(m);
    return statistic_from_means(mean_x, mean_y, n, m);
  }

 private:
  const Eigen::MatrixXd& pooled_;
  std::vector<Index> order_;
};

std::vector<char> membership(const EmbeddingSet& emb) {
  std::vector<char> in_x(static_cast<std::size_t>(emb.size()));
  for (Index i = 0; i < emb.size(); ++i) in_x[static_cast<std::size_t>(i)] = emb.info(i).group == Group::X;
  return in_x;
}

}  // namespace

Eigen::VectorXd GroupMoments::gradient(Group group) const {
  const double total = static_cast<double>(n + m);
  const Eigen::VectorXd diff = (mean_x - mean_y).transpose();
  if (group == Group::X) return (2.0 * static_cast<double>(m) / total) * diff;
  return (-2.0 * static_cast<double>(n) / total) * diff;
}

GroupMoments moments(const EmbeddingSet& emb) {
  validate(emb);
  const std::vector<Index> order = canonical_row_order(emb.vectors());
  std::vector<Index> xs, ys;
  for (const Index r : order) (emb.info(r).group == Group::X ? xs : ys).push_back(r);
  GroupMoments g;
  g.n = static_cast<Index>(xs.size());
  g.m = static_cast<Index>(ys.size());
  g.mean_x = pairwise_row_sum(emb.vectors(), xs) / static_cast<double>(g.n);
  g.mean_y = pairwise_row_sum(emb.vectors(), ys) / static_cast<double>(g.m);
  return g;
}

double statistic(const EmbeddingSet& emb) { return moments(emb).statistic(); }

Eigen::VectorXd statistic_gradient_wrt_sample(const EmbeddingSet& emb, std::string_view sample_id) {
  const auto row = emb.find(sample_id);
  if (!row) throw NotFoundError(kModule, "no sample with id " + std::string(sample_id));
  return moments(emb).gradient(emb.info(*row).group);
}

TestResult permutation_pvalue(const EmbeddingSet& emb, const PermutationOptions& options) {
  if (options.num_permutations < 1)
    throw ConfigError(kModule, "number of permutations must be at least 1, got " +
                                   std::to_string(options.num_permutations));
  validate(emb);
  const SplitStatistic split(emb.vectors());
  const std::vector<char> observed_split = membership(emb);

  TestResult result;
  result.n = emb.count(Group::X);
  result.m = emb.count(Group::Y);
  result.statistic = split(observed_split);
  result.num_permutations = options.num_permutations;
  result.seed = options.seed;

  const std::size_t pooled = static_cast<std::size_t>(emb.size());
  const auto B = static_cast<std::size_t>(options.num_permutations);
  std::vector<double> draws(B);
  parallel_for(B, options.threads, [&](std::size_t b) {
    CounterRng rng(derive_seed(options.seed, b));
    std::vector<Index> perm(pooled);
    std::iota(perm.begin(), perm.end(), Index{0});
    for (std::size_t i = pooled - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<char> in_x(pooled, 0);
    for (Index k = 0; k < result.n; ++k) in_x[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = 1;
    draws[b] = split(in_x);
  });

  for (const double s : draws) result.exceed_count += (s >= result.statistic);
  result.p_value = static_cast<double>(1 + result.exceed_count) / static_cast<double>(B + 1);
  if (options.keep_statistics) result.permutation_statistics = std::move(draws);
  return result;
}

std::string to_json(const TestResult& result) {
  nlohmann::ordered_json j;
  j["statistic"] = result.statistic;
  j["p_value"] = result.p_value;
  j["n"] = result.n;
  j["m"] = result.m;
  j["B"] = result.num_permutations;
  j["seed"] = result.seed;
  return j.dump();
}

void write_permutation_csv(const std::filesystem::path& path, const TestResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << "statistic\n";
  for (const double s : result.permutation_statistics) out << detail::format_double(s) << '\n';
}

}  // namespace dxt::dmmd
