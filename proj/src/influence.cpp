#include "dxt/influence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>

#include "csv.hpp"
#include "dxt/error.hpp"
#include "dxt/parallel.hpp"
#include "dxt/rng.hpp"

namespace dxt::influence {

namespace {
constexpr char kModule[] = "influence";
}

std::string_view direction_name(Direction d) noexcept {
  return d == Direction::RemoveHighest ? "highest" : "lowest";
}

std::string_view scope_name(Scope s) noexcept {
  switch (s) {
    case Scope::Global: return "global";
    case Scope::GroupX: return "X";
    case Scope::GroupY: return "Y";
  }
  return "?";
}

namespace {

// S(full) − S(without row i) from the group means.
double leave_one_out(const dmmd::GroupMoments& g, const EmbeddingSet& emb, Index i) {
  const auto n = static_cast<double>(g.n);
  const auto m = static_cast<double>(g.m);
  double without = 0.0;
  if (emb.info(i).group == Group::X) {
    const Eigen::RowVectorXd mean_x = (n * g.mean_x - emb.row(i)) / (n - 1.0);
    without = dmmd::statistic_from_means(mean_x, g.mean_y, g.n - 1, g.m);
  } else {
    const Eigen::RowVectorXd mean_y = (m * g.mean_y - emb.row(i)) / (m - 1.0);
    without = dmmd::statistic_from_means(g.mean_x, mean_y, g.n, g.m - 1);
  }
  return g.statistic() - without;
}

}  // namespace

InfluenceTable influence_scores(const EmbeddingSet& emb, unsigned threads) {
  const dmmd::GroupMoments g = dmmd::moments(emb);
  if (g.n < 2 || g.m < 2)
    throw DegenerateGroupError(kModule, "leave-one-out needs at least two samples per group (n=" +
                                            std::to_string(g.n) + ", m=" + std::to_string(g.m) + ")");
  InfluenceTable table;
  table.base_statistic = g.statistic();
  table.n = g.n;
  table.m = g.m;
  table.rows.resize(static_cast<std::size_t>(emb.size()));
  parallel_for(table.rows.size(), threads, [&](std::size_t k) {
    const auto i = static_cast<Index>(k);
    const SampleInfo& s = emb.info(i);
    table.rows[k] = {s.id, s.group, s.subgroup, leave_one_out(g, emb, i)};
  });
  return table;
}

double influence_of(const EmbeddingSet& emb, std::string_view sample_id) {
  const auto row = emb.find(sample_id);
  if (!row) throw NotFoundError(kModule, "no embedding for id " + std::string(sample_id));
  const dmmd::GroupMoments g = dmmd::moments(emb);
  const Index size = emb.info(*row).group == Group::X ? g.n : g.m;
  if (size < 2)
    throw DegenerateGroupError(kModule, "removing " + std::string(sample_id) + " empties its group");
  return leave_one_out(g, emb, *row);
}

std::vector<Index> removal_order(const InfluenceTable& table, Direction direction, Scope scope) {
  std::vector<Index> order;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const Group g = table.rows[k].group;
    if (scope == Scope::Global || (scope == Scope::GroupX && g == Group::X) ||
        (scope == Scope::GroupY && g == Group::Y))
      order.push_back(static_cast<Index>(k));
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto& ra = table.rows[static_cast<std::size_t>(a)];
    const auto& rb = table.rows[static_cast<std::size_t>(b)];
    if (ra.influence != rb.influence)
      return direction == Direction::RemoveHighest ? ra.influence > rb.influence
                                                   : ra.influence < rb.influence;
    return ra.id < rb.id;
  });
  return order;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) noexcept {
  return index == 0 ? seed : derive_seed(seed, index);
}

AblationCurve ablation_curve(const EmbeddingSet& emb, const InfluenceTable& table,
                             const AblationOptions& options) {
  const auto& fr = options.fractions;
  if (fr.empty() || fr.front() != 0.0)
    throw ConfigError(kModule, "ablation fractions must start at 0");
  for (std::size_t i = 0; i < fr.size(); ++i) {
    if (!(fr[i] >= 0.0 && fr[i] < 1.0))
      throw ConfigError(kModule, "ablation fraction " + detail::format_double(fr[i]) + " outside [0, 1)");
    if (i > 0 && !(fr[i] > fr[i - 1]))
      throw ConfigError(kModule, "ablation fractions must be strictly increasing");
  }
  if (table.rows.size() != static_cast<std::size_t>(emb.size()))
    throw DataError(kModule, "influence table and embeddings differ in length");

  // Map table rows onto embedding rows by id.
  std::vector<Index> emb_row(table.rows.size());
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto row = emb.find(table.rows[k].id);
    if (!row) throw NotFoundError(kModule, "influence row " + table.rows[k].id + " has no embedding");
    emb_row[k] = *row;
  }
  const std::vector<Index> order = removal_order(table, options.direction, options.scope);
  const double eligible = static_cast<double>(order.size());

  AblationCurve curve;
  curve.direction = options.direction;
  curve.scope = options.scope;
  curve.num_permutations = options.num_permutations;
  curve.seed = options.seed;
  for (std::size_t p = 0; p < fr.size(); ++p) {
    // The small slack keeps products such as 0.3 · 400 = 120.00000000000001 on the intended count.
    const auto k = static_cast<std::size_t>(std::floor(fr[p] * eligible + 1e-9));
    std::vector<char> removed(static_cast<std::size_t>(emb.size()), 0);
    for (std::size_t j = 0; j < k; ++j)
      removed[static_cast<std::size_t>(emb_row[static_cast<std::size_t>(order[j])])] = 1;
    std::vector<Index> keep;
    Index left_x = 0, left_y = 0;
    for (Index i = 0; i < emb.size(); ++i)
      if (!removed[static_cast<std::size_t>(i)]) {
        keep.push_back(i);
        (emb.info(i).group == Group::X ? left_x : left_y) += 1;
      }
    if (left_x == 0 || left_y == 0)
      throw DegenerateGroupError(kModule, "removing " + std::to_string(k) + " samples at fraction " +
                                              detail::format_double(fr[p]) + " empties a group");
    const EmbeddingSet reduced = emb.subset(keep);
    dmmd::PermutationOptions perm;
    perm.num_permutations = options.num_permutations;
    perm.seed = point_seed(options.seed, p);
    perm.threads = options.threads;
    const dmmd::TestResult r = dmmd::permutation_pvalue(reduced, perm);
    curve.points.push_back({fr[p], static_cast<Index>(k), r.statistic, r.p_value});
  }
  return curve;
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError(kModule, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empirical_cdf(std::span<const double> sorted, double t) {
  if (sorted.empty()) return 0.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

BoxStats box_stats(std::span<const double> values, std::span<const std::string> ids, double whisker_k) {
  if (values.empty()) throw DataError(kModule, "box statistics of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxStats b;
  b.count = static_cast<Index>(sorted.size());
  b.min = sorted.front();
  b.max = sorted.back();
  b.q1 = quantile(sorted, 0.25);
  b.median = quantile(sorted, 0.5);
  b.q3 = quantile(sorted, 0.75);
  const double iqr = b.q3 - b.q1;
  b.lower_fence = b.q1 - whisker_k * iqr;
  b.upper_fence = b.q3 + whisker_k * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (const double v : sorted)
    if (v >= b.lower_fence && v <= b.upper_fence) {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] < b.lower_fence || values[i] > b.upper_fence)
      b.outliers.push_back(i < ids.size() ? ids[i] : std::to_string(i));
  return b;
}

const SubgroupSummary* DistributionSummary::find(Group group, std::string_view subgroup) const {
  for (const auto& s : subgroups)
    if (s.group == group && s.subgroup == subgroup) return &s;
  return nullptr;
}

DistributionSummary summarize(const InfluenceTable& table, double whisker_k) {
  if (table.rows.empty()) throw DataError(kModule, "cannot summarize an empty influence table");
  std::map<std::pair<Group, std::string>, std::pair<std::vector<double>, std::vector<std::string>>> cells;
  for (const auto& r : table.rows) {
    auto& cell = cells[{r.group, r.subgroup}];
    cell.first.push_back(r.influence);
    cell.second.push_back(r.id);
  }
  DistributionSummary summary;
  summary.whisker_k = whisker_k;
  summary.base_statistic = table.base_statistic;
  summary.n = table.n;
  summary.m = table.m;
  for (auto& [key, cell] : cells) {
    SubgroupSummary s;
    s.group = key.first;
    s.subgroup = key.second;
    s.box = box_stats(cell.first, cell.second, whisker_k);
    s.sorted_scores = cell.first;
    std::sort(s.sorted_scores.begin(), s.sorted_scores.end());
    const auto total = static_cast<double>(s.sorted_scores.size());
    for (std::size_t i = 0; i < s.sorted_scores.size(); ++i) {
      const bool last_of_run = i + 1 == s.sorted_scores.size() || s.sorted_scores[i + 1] != s.sorted_scores[i];
      if (last_of_run) s.cdf.push_back({s.sorted_scores[i], static_cast<double>(i + 1) / total});
    }
    summary.subgroups.push_back(std::move(s));
  }
  return summary;
}

void write_influence_csv(const std::filesystem::path& path, const InfluenceTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << "id,group,subgroup,influence\n";
  for (const auto& r : table.rows)
    out << r.id << ',' << group_name(r.group) << ',' << r.subgroup << ','
        << detail::format_double(r.influence) << '\n';
}

InfluenceTable read_influence_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(kModule, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_csv_line(line) != std::vector<std::string>{"id", "group", "subgroup", "influence"})
    throw FormatError(kModule, "influence header must be id,group,subgroup,influence");
  InfluenceTable table;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw FormatError(kModule, "influence row has wrong arity: " + line);
    const Group g = parse_group(f[1]);
    table.rows.push_back({f[0], g, f[2], detail::parse_double(f[3], path.string())});
    (g == Group::X ? table.n : table.m) += 1;
  }
  return table;
}

void write_ablation_csv(const std::filesystem::path& path, const AblationCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << "fraction,removed,statistic,p_value\n";
  for (const auto& p : curve.points)
    out << detail::format_double(p.fraction) << ',' << p.removed << ','
        << detail::format_double(p.statistic) << ',' << detail::format_double(p.p_value) << '\n';
}

AblationCurve read_ablation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(kModule, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      detail::split_csv_line(line) != std::vector<std::string>{"fraction", "removed", "statistic", "p_value"})
    throw FormatError(kModule, "ablation header must be fraction,removed,statistic,p_value");
  AblationCurve curve;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 4) throw FormatError(kModule, "ablation row has wrong arity: " + line);
    curve.points.push_back({detail::parse_double(f[0], path.string()),
                            static_cast<Index>(detail::parse_double(f[1], path.string())),
                            detail::parse_double(f[2], path.string()),
                            detail::parse_double(f[3], path.string())});
  }
  return curve;
}

std::string summary_to_json(const DistributionSummary& summary) {
  nlohmann::ordered_json j;
  j["base_statistic"] = summary.base_statistic;
  j["n"] = summary.n;
  j["m"] = summary.m;
  j["whisker_k"] = summary.whisker_k;
  j["quartile_method"] = "type7";
  auto groups = nlohmann::ordered_json::array();
  for (const auto& s : summary.subgroups) {
    nlohmann::ordered_json g;
    g["group"] = std::string(group_name(s.group));
    g["subgroup"] = s.subgroup;
    g["count"] = s.box.count;
    g["min"] = s.box.min;
    g["q1"] = s.box.q1;
    g["median"] = s.box.median;
    g["q3"] = s.box.q3;
    g["max"] = s.box.max;
    g["lower_fence"] = s.box.lower_fence;
    g["upper_fence"] = s.box.upper_fence;
    g["outliers"] = s.box.outliers;
    groups.push_back(std::move(g));
  }
  j["subgroups"] = std::move(groups);
  return j.dump(2);
}

void write_cdf_csv(const std::filesystem::path& path, const DistributionSummary& summary) {
  std::ofstream out(path);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out << "subgroup,score,cdf\n";
  for (const auto& s : summary.subgroups)
    for (const auto& p : s.cdf)
      out << group_name(s.group) << ':' << s.subgroup << ',' << detail::format_double(p.score) << ','
          << detail::format_double(p.cdf) << '\n';
}

}  // namespace dxt::influence
