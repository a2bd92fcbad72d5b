#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dxt/dmmd.hpp"
#include "dxt/embeddings.hpp"

namespace dxt::influence {

struct InfluenceRow {
  std::string id;
  Group group = Group::X;
  std::string subgroup;
  double influence = 0.0;
};

/// One row per sample, in embedding-set order.
struct InfluenceTable {
  std::vector<InfluenceRow> rows;
  double base_statistic = 0.0;
  Index n = 0;
  Index m = 0;
};

/**
 * Leave-one-out influence IF(s) = S(full) − S(without s).
 *
 * Uses the incremental update: dropping x_i from X turns μ_X into
 * (n·μ_X − φ(x_i))/(n − 1) and the prefactor into (n − 1)m/(n − 1 + m);
 * symmetrically for Y. Positive scores amplify the group difference,
 * negative scores suppress it. Both groups need at least two samples.
 */
InfluenceTable influence_scores(const EmbeddingSet& emb, unsigned threads = 1);

/// IF of a single sample. Only the sample's own group needs a second member.
double influence_of(const EmbeddingSet& emb, std::string_view sample_id);

enum class Direction { RemoveHighest, RemoveLowest };
/// Which samples are eligible for removal.
enum class Scope { Global, GroupX, GroupY };

std::string_view direction_name(Direction d) noexcept;
std::string_view scope_name(Scope s) noexcept;

/// Row indices of the eligible samples, most-removable first: by influence (descending for
/// RemoveHighest, ascending for RemoveLowest), ties by ascending id.
std::vector<Index> removal_order(const InfluenceTable& table, Direction direction, Scope scope);

struct AblationPoint {
  double fraction = 0.0;
  Index removed = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct AblationOptions {
  std::vector<double> fractions{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  Direction direction = Direction::RemoveHighest;
  Scope scope = Scope::Global;
  int num_permutations = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct AblationCurve {
  std::vector<AblationPoint> points;
  Direction direction = Direction::RemoveHighest;
  Scope scope = Scope::Global;
  int num_permutations = 0;
  std::uint64_t seed = 0;
};

/// Seed of the permutation test at curve point `index`. Point 0 (fraction 0) uses the caller's
/// seed so it reproduces the unablated test exactly.
std::uint64_t point_seed(std::uint64_t seed, std::size_t index) noexcept;

/**
 * Progressive-removal curve. At fraction f the first floor(f·N) samples of
 * `removal_order` are dropped, where N is the number of eligible samples
 * (n + m for the global scope), and the statistic and permutation p-value are
 * recomputed on what remains.
 */
AblationCurve ablation_curve(const EmbeddingSet& emb, const InfluenceTable& table,
                             const AblationOptions& options);

/// Tukey box statistics with type-7 (linear interpolation) quartiles.
struct BoxStats {
  Index count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  double whisker_low = 0.0;   // smallest value inside the fences
  double whisker_high = 0.0;  // largest value inside the fences
  std::vector<std::string> outliers;
};

struct CdfPoint {
  double score = 0.0;
  double cdf = 0.0;  // fraction of scores ≤ score
};

struct SubgroupSummary {
  Group group = Group::X;
  std::string subgroup;
  BoxStats box;
  std::vector<double> sorted_scores;
  std::vector<CdfPoint> cdf;
};

struct DistributionSummary {
  double whisker_k = 1.5;
  double base_statistic = 0.0;
  Index n = 0;
  Index m = 0;
  std::vector<SubgroupSummary> subgroups;  // sorted by (group, subgroup)

  const SubgroupSummary* find(Group group, std::string_view subgroup) const;
};

/// Type-7 sample quantile of ascending `sorted` values, p in [0, 1].
double quantile(std::span<const double> sorted, double p);

/// Box statistics of `values`; `ids[i]` names values[i] in the outlier list.
BoxStats box_stats(std::span<const double> values, std::span<const std::string> ids,
                   double whisker_k = 1.5);

/// Fraction of ascending `sorted` values that are ≤ t.
double empirical_cdf(std::span<const double> sorted, double t);

/// Per-(group, subgroup) quartiles, IQR outliers and empirical CDF points.
DistributionSummary summarize(const InfluenceTable& table, double whisker_k = 1.5);

void write_influence_csv(const std::filesystem::path& path, const InfluenceTable& table);
InfluenceTable read_influence_csv(const std::filesystem::path& path);

void write_ablation_csv(const std::filesystem::path& path, const AblationCurve& curve);
AblationCurve read_ablation_csv(const std::filesystem::path& path);

std::string summary_to_json(const DistributionSummary& summary);
void write_cdf_csv(const std::filesystem::path& path, const DistributionSummary& summary);

}  // namespace dxt::influence
