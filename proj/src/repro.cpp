#include "dxt/repro.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "csv.hpp"
#include "dxt/encoder.hpp"
#include "dxt/error.hpp"
#include "dxt/image_io.hpp"
#include "dxt/parallel.hpp"
#include "dxt/report.hpp"
#include "dxt/rng.hpp"
#include "dxt/synthgen.hpp"

namespace dxt::repro {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("repro", "spearman needs two equal-length samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

bool DspritesRun::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

DspritesRun run_dsprites(const DspritesConfig& config) {
  namespace fs = std::filesystem;
  const synthgen::GeneratedGroup gx =
      synthgen::generate_group(200, {{"square", 200}}, derive_seed(config.seed, 1), Group::X, config.generator, config.threads);
  const synthgen::GeneratedGroup gy = synthgen::generate_group(
      200, {{"square", 40}, {"ellipse", 160}}, derive_seed(config.seed, 2), Group::Y, config.generator, config.threads);

  std::vector<synthgen::SampleImage> images = gx.images;
  images.insert(images.end(), gy.images.begin(), gy.images.end());
  synthgen::GroupManifest manifest;
  manifest.seed = config.seed;
  manifest.entries = gx.manifest.entries;
  manifest.entries.insert(manifest.entries.end(), gy.manifest.entries.begin(), gy.manifest.entries.end());

  const encoder::EncoderModel model = encoder::build_random(config.seed);

  DspritesRun run;
  run.embeddings = encoder::embed_images(model, images, manifest, config.threads);

  dmmd::PermutationOptions perm;
  perm.num_permutations = config.num_permutations;
  perm.seed = config.seed;
  perm.threads = config.threads;
  run.base = dmmd::permutation_pvalue(run.embeddings, perm);

  run.influence = influence::influence_scores(run.embeddings, config.threads);
  run.summary = influence::summarize(run.influence);

  influence::AblationOptions ablate;
  ablate.fractions = config.fractions;
  ablate.direction = influence::Direction::RemoveHighest;
  ablate.num_permutations = config.num_permutations;
  ablate.seed = config.seed;
  ablate.threads = config.threads;
  run.remove_highest = influence::ablation_curve(run.embeddings, run.influence, ablate);
  ablate.fractions = {0.0, config.low_removal_fraction};
  ablate.direction = influence::Direction::RemoveLowest;
  run.remove_lowest = influence::ablation_curve(run.embeddings, run.influence, ablate);

  // Feature-level: every ellipse in Y at the penultimate conv layer.
  const attribution::Attributor attributor(model, run.embeddings);
  const int layer = model.penultimate_conv();
  std::vector<std::size_t> ellipses;
  for (std::size_t k = 0; k < images.size(); ++k)
    if (manifest.entries[k].group == Group::Y && manifest.entries[k].subgroup == "ellipse") ellipses.push_back(k);
  std::vector<attribution::AttributionMap> maps(ellipses.size());
  parallel_for(ellipses.size(), config.threads, [&](std::size_t i) {
    maps[i] = attributor(images[ellipses[i]], layer, attribution::Variant::GradientWeighted);
  });
  double coverage_sum = 0.0;
  for (std::size_t i = 0; i < ellipses.size(); ++i) {
    const double c = attribution::coverage(maps[i], images[ellipses[i]].mask);
    coverage_sum += c;
    run.coverage.push_back({maps[i].sample_id, "ellipse", attribution::Variant::GradientWeighted, c});
  }
  run.mean_ellipse_coverage = ellipses.empty() ? 0.0 : coverage_sum / static_cast<double>(ellipses.size());

  // Checks.
  {
    std::vector<double> fr, pv;
    for (const auto& p : run.remove_highest.points) {
      fr.push_back(p.fraction);
      pv.push_back(p.p_value);
    }
    const double rho = spearman(fr, pv);
    const double last = pv.back();
    run.checks.push_back({"significance: base p-value <= 0.01", run.base.p_value <= 0.01,
                          "p=" + fmt(run.base.p_value) + " S=" + fmt(run.base.statistic)});
    run.checks.push_back({"removing high-influence samples raises p", rho > 0.0 && last > run.base.p_value,
                          "spearman=" + fmt(rho) + " final p=" + fmt(last)});
  }
  {
    const auto* ell = run.summary.find(Group::Y, "ellipse");
    const auto* sq = run.summary.find(Group::Y, "square");
    const bool have = ell != nullptr && sq != nullptr;
    const double med_e = have ? ell->box.median : 0.0;
    const double med_s = have ? sq->box.median : 0.0;
    run.checks.push_back({"subgroup medians: ellipses > 0 > group-Y squares", have && med_e > 0.0 && med_s < 0.0,
                          "median ellipse=" + fmt(med_e) + " median Y square=" + fmt(med_s)});
    double fe = 1.0, fs_ = 0.0;
    if (have) {
      std::vector<double> pooled = ell->sorted_scores;
      pooled.insert(pooled.end(), sq->sorted_scores.begin(), sq->sorted_scores.end());
      std::sort(pooled.begin(), pooled.end());
      const double t = influence::quantile(pooled, 0.5);
      fe = influence::empirical_cdf(ell->sorted_scores, t);
      fs_ = influence::empirical_cdf(sq->sorted_scores, t);
    }
    run.checks.push_back({"ellipse CDF right-shifted at the pooled median", have && fe < fs_,
                          "F_ellipse=" + fmt(fe) + " F_Ysquare=" + fmt(fs_)});
  }
  {
    const double p_low = run.remove_lowest.points.back().p_value;
    run.checks.push_back({"removing low-influence samples does not raise p", p_low <= run.base.p_value,
                          "p(" + fmt(config.low_removal_fraction) + ")=" + fmt(p_low) +
                              " base p=" + fmt(run.base.p_value)});
  }
  run.checks.push_back(
      {"ellipse attribution mask coverage >= " + fmt(config.min_coverage),
       static_cast<int>(ellipses.size()) >= config.min_attributed && run.mean_ellipse_coverage >= config.min_coverage,
       "mean coverage=" + fmt(run.mean_ellipse_coverage) + " over " + std::to_string(ellipses.size()) +
           " ellipses"});

  if (config.out_dir) {
    const fs::path& dir = *config.out_dir;
    fs::create_directories(dir / "maps");
    synthgen::write_dataset(dir / "data", images, manifest);
    encoder::save_model(dir / "model.dmex", model);
    write_embeddings_csv(dir / "embeddings.csv", run.embeddings);
    {
      std::ofstream out(dir / "test.json");
      out << dmmd::to_json(run.base) << '\n';
    }
    influence::write_influence_csv(dir / "influence.csv", run.influence);
    {
      std::ofstream out(dir / "summary.json");
      out << influence::summary_to_json(run.summary) << '\n';
    }
    influence::write_cdf_csv(dir / "cdf.csv", run.summary);
    influence::write_ablation_csv(dir / "ablation_highest.csv", run.remove_highest);
    influence::write_ablation_csv(dir / "ablation_lowest.csv", run.remove_lowest);
    attribution::write_coverage_csv(dir / "coverage.csv", run.coverage);
    report::write_svg(dir / "ablation.svg",
                      report::plot(report::ablation_plot({{"remove highest", run.remove_highest}})));
    report::write_svg(dir / "influence_box.svg", report::plot(report::influence_box_plot(run.summary)));
    report::write_svg(dir / "influence_cdf.svg", report::plot(report::influence_cdf_plot(run.summary)));

    // A few example maps per subgroup of Y.
    int written_sq = 0, written_el = 0;
    for (std::size_t k = 0; k < images.size(); ++k) {
      const auto& e = manifest.entries[k];
      if (e.group != Group::Y) continue;
      int& counter = e.subgroup == "ellipse" ? written_el : written_sq;
      if (counter >= config.maps_to_write) continue;
      ++counter;
      const auto map = attributor(images[k], layer, attribution::Variant::GradientWeighted);
      write_pgm(dir / "maps" / (e.id + "_raw.pgm"), attribution::max_normalize(map.raw));
      write_pgm(dir / "maps" / (e.id + "_up.pgm"), map.upsampled);
      write_ppm(dir / "maps" / (e.id + "_overlay.ppm"), attribution::render_overlay(images[k].pixels, map.upsampled));
    }
    std::ofstream out(dir / "acceptance.txt");
    for (const auto& c : run.checks) out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
  }
  return run;
}

}  // namespace dxt::repro
