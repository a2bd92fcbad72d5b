#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dxt/attribution.hpp"
#include "dxt/dmmd.hpp"
#include "dxt/influence.hpp"
#include "dxt/synthgen.hpp"

namespace dxt::repro {

/// Spearman rank correlation with average ranks for ties; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct DspritesConfig {
  std::uint64_t seed = 42;
  synthgen::GeneratorConfig generator;
  int num_permutations = 999;
  unsigned threads = 1;
  std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double low_removal_fraction = 0.2;
  double min_coverage = 0.5;
  int min_attributed = 20;
  /// When set, every intermediate artifact is written below this directory.
  std::optional<std::filesystem::path> out_dir;
  /// Number of samples per subgroup whose maps are written as images.
  int maps_to_write = 4;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DspritesRun {
  EmbeddingSet embeddings;
  dmmd::TestResult base;
  influence::InfluenceTable influence;
  influence::DistributionSummary summary;
  influence::AblationCurve remove_highest;
  influence::AblationCurve remove_lowest;
  std::vector<attribution::CoverageRow> coverage;
  double mean_ellipse_coverage = 0.0;
  std::vector<Check> checks;

  bool all_passed() const;
};

/**
 * Synthetic-shape replication: X = 200 squares, Y = 40 squares + 160 ellipses,
 * embedded by the seeded random-feature encoder. Runs the permutation test,
 * influence scores, both ablation directions and penultimate-layer attribution
 * of every ellipse in Y, then evaluates the trend checks.
 */
DspritesRun run_dsprites(const DspritesConfig& config);

}  // namespace dxt::repro
