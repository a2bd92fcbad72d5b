#include "dxt/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "csv.hpp"
#include "dxt/attribution.hpp"
#include "dxt/dmmd.hpp"
#include "dxt/encoder.hpp"
#include "dxt/error.hpp"
#include "dxt/image_io.hpp"
#include "dxt/influence.hpp"
#include "dxt/parallel.hpp"
#include "dxt/report.hpp"
#include "dxt/repro.hpp"
#include "dxt/rng.hpp"
#include "dxt/synthgen.hpp"

namespace dxt::cli {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : detail::split_csv_line(text)) out.push_back(detail::parse_double(item, "--fractions"));
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  if (text.empty()) return {};
  return detail::split_csv_line(text);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cli", "cannot write " + path.string());
  out << text;
}

fs::path parent_or_dot(const fs::path& p) {
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

encoder::EncoderModel load_or_build(const std::string& model_path, std::uint64_t model_seed) {
  if (!model_path.empty()) return encoder::load_model(model_path);
  return encoder::build_random(model_seed);
}

int resolve_layer(const encoder::EncoderModel& model, const std::string& selector) {
  if (selector == "final") return model.final_conv();
  if (selector == "penultimate") return model.penultimate_conv();
  int index = 0;
  try {
    std::size_t used = 0;
    index = std::stoi(selector, &used);
    if (used != selector.size()) throw std::invalid_argument(selector);
  } catch (const std::exception&) {
    throw ConfigError("cli", "--layer must be final, penultimate or a layer index, got '" + selector + "'");
  }
  model.activation_layer(index);
  return index;
}

struct Options {
  // shared
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  // gen
  std::string compose_x = "square:200";
  std::string compose_y = "square:40,ellipse:160";
  int size = 64;
  // embed / attribute
  std::string manifest;
  std::string model;
  std::uint64_t model_seed = 42;
  std::string save_model;
  // test / influence / ablate
  std::string emb;
  int B = 1000;
  std::string dump_perms;
  std::string summary;
  std::string cdf;
  double whisker_k = 1.5;
  std::string fractions = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5";
  std::string direction = "highest";
  std::string scope = "global";
  // attribute
  std::string layer = "final";
  std::string variant = "gradient";
  std::string ids;
  std::string subgroup;
  // report
  std::string ablation;
  std::string influence;
};

void cmd_gen(const Options& o, std::ostream& out) {
  const fs::path dir = o.out;
  synthgen::GeneratorConfig config;
  config.height = config.width = o.size;
  const auto cx = synthgen::parse_composition(o.compose_x);
  const auto cy = synthgen::parse_composition(o.compose_y);
  auto total = [](const synthgen::Composition& c) {
    int n = 0;
    for (const auto& [label, k] : c) n += k;
    return n;
  };
  const auto gx = synthgen::generate_group(total(cx), cx, derive_seed(o.seed, 1), Group::X, config, o.threads);
  const auto gy = synthgen::generate_group(total(cy), cy, derive_seed(o.seed, 2), Group::Y, config, o.threads);
  std::vector<synthgen::SampleImage> images = gx.images;
  images.insert(images.end(), gy.images.begin(), gy.images.end());
  synthgen::GroupManifest manifest;
  manifest.seed = o.seed;
  manifest.entries = gx.manifest.entries;
  manifest.entries.insert(manifest.entries.end(), gy.manifest.entries.begin(), gy.manifest.entries.end());
  synthgen::write_dataset(dir, images, manifest);
  out << "wrote " << images.size() << " images and " << (dir / "manifest.csv").string() << '\n';
}

void cmd_embed(const Options& o, std::ostream& out) {
  const encoder::EncoderModel model = load_or_build(o.model, o.model_seed);
  const auto manifest = synthgen::read_manifest(o.manifest);
  const EmbeddingSet emb = encoder::embed_dataset(model, manifest, parent_or_dot(o.manifest), o.threads);
  write_embeddings_csv(o.out, emb);
  if (!o.save_model.empty()) encoder::save_model(o.save_model, model);
  out << "wrote " << emb.size() << "x" << emb.dim() << " embeddings to " << o.out << '\n';
}

void cmd_test(const Options& o, std::ostream& out) {
  const EmbeddingSet emb = read_embeddings_csv(o.emb);
  dmmd::PermutationOptions perm;
  perm.num_permutations = o.B;
  perm.seed = o.seed;
  perm.threads = o.threads;
  perm.keep_statistics = !o.dump_perms.empty();
  const dmmd::TestResult result = dmmd::permutation_pvalue(emb, perm);
  const std::string json = dmmd::to_json(result) + "\n";
  if (o.out.empty()) {
    out << json;
  } else {
    write_text(o.out, json);
  }
  if (!o.dump_perms.empty()) dmmd::write_permutation_csv(o.dump_perms, result);
}

void cmd_influence(const Options& o, std::ostream&) {
  const EmbeddingSet emb = read_embeddings_csv(o.emb);
  const auto table = influence::influence_scores(emb, o.threads);
  influence::write_influence_csv(o.out, table);
  const auto summary = influence::summarize(table, o.whisker_k);
  if (!o.summary.empty()) write_text(o.summary, influence::summary_to_json(summary) + "\n");
  if (!o.cdf.empty()) influence::write_cdf_csv(o.cdf, summary);
}

influence::Direction parse_direction(const std::string& s) {
  if (s == "highest") return influence::Direction::RemoveHighest;
  if (s == "lowest") return influence::Direction::RemoveLowest;
  throw ConfigError("cli", "--direction must be highest or lowest");
}

influence::Scope parse_scope(const std::string& s) {
  if (s == "global") return influence::Scope::Global;
  if (s == "X") return influence::Scope::GroupX;
  if (s == "Y") return influence::Scope::GroupY;
  throw ConfigError("cli", "--scope must be global, X or Y");
}

void cmd_ablate(const Options& o, std::ostream&) {
  const EmbeddingSet emb = read_embeddings_csv(o.emb);
  const auto table = influence::influence_scores(emb, o.threads);
  influence::AblationOptions a;
  a.fractions = parse_fractions(o.fractions);
  a.direction = parse_direction(o.direction);
  a.scope = parse_scope(o.scope);
  a.num_permutations = o.B;
  a.seed = o.seed;
  a.threads = o.threads;
  influence::write_ablation_csv(o.out, influence::ablation_curve(emb, table, a));
}

void cmd_attribute(const Options& o, std::ostream& out) {
  const encoder::EncoderModel model = load_or_build(o.model, o.model_seed);
  const EmbeddingSet emb = read_embeddings_csv(o.emb);
  auto manifest = synthgen::read_manifest(o.manifest);
  const auto wanted = split_list(o.ids);
  for (const auto& id : wanted)
    if (std::none_of(manifest.entries.begin(), manifest.entries.end(),
                     [&](const synthgen::ManifestEntry& e) { return e.id == id; }))
      throw NotFoundError("cli", "id " + id + " is not in the manifest");
  std::erase_if(manifest.entries, [&](const synthgen::ManifestEntry& e) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), e.id) == wanted.end()) return true;
    return !o.subgroup.empty() && e.subgroup != o.subgroup;
  });
  const auto images = synthgen::load_images(manifest, parent_or_dot(o.manifest));
  const int layer = resolve_layer(model, o.layer);
  std::vector<attribution::Variant> variants;
  if (o.variant == "all") {
    variants = {attribution::Variant::GradientWeighted, attribution::Variant::SecondOrder,
                attribution::Variant::LayerWiseSpatial};
  } else {
    variants = {attribution::parse_variant(o.variant)};
  }

  const fs::path dir = o.out;
  fs::create_directories(dir);
  const attribution::Attributor attributor(model, emb);
  std::vector<attribution::CoverageRow> rows(images.size() * variants.size());
  parallel_for(rows.size(), o.threads, [&](std::size_t k) {
    const auto& image = images[k / variants.size()];
    const auto variant = variants[k % variants.size()];
    const auto map = attributor(image, layer, variant);
    const std::string stem = image.id + "_" + std::string(attribution::variant_name(variant));
    write_pgm(dir / (stem + "_raw.pgm"), attribution::max_normalize(map.raw));
    write_pgm(dir / (stem + "_up.pgm"), map.upsampled);
    write_ppm(dir / (stem + "_overlay.ppm"), attribution::render_overlay(image.pixels, map.upsampled));
    rows[k] = {image.id, manifest.entries[k / variants.size()].subgroup, variant,
               attribution::coverage(map, image.mask)};
  });
  attribution::write_coverage_csv(dir / "coverage.csv", rows);
  out << "wrote " << rows.size() << " attribution maps to " << dir.string() << '\n';
}

void cmd_report(const Options& o, std::ostream& out) {
  if (o.ablation.empty() && o.influence.empty())
    throw ConfigError("cli", "report needs --ablation and/or --influence");
  const fs::path dir = o.out;
  fs::create_directories(dir);
  if (!o.ablation.empty()) {
    const auto curve = influence::read_ablation_csv(o.ablation);
    report::write_svg(dir / "ablation.svg", report::plot(report::ablation_plot({{"p-value", curve}})));
  }
  if (!o.influence.empty()) {
    const auto summary = influence::summarize(influence::read_influence_csv(o.influence), o.whisker_k);
    report::write_svg(dir / "influence_box.svg", report::plot(report::influence_box_plot(summary)));
    report::write_svg(dir / "influence_cdf.svg", report::plot(report::influence_cdf_plot(summary)));
  }
  out << "wrote plots to " << dir.string() << '\n';
}

int cmd_repro(const Options& o, std::ostream& out) {
  repro::DspritesConfig config;
  config.seed = o.seed;
  config.num_permutations = o.B;
  config.threads = o.threads;
  if (!o.out.empty()) config.out_dir = fs::path(o.out);
  const repro::DspritesRun run = repro::run_dsprites(config);
  for (const auto& c : run.checks)
    out << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << "  (" << c.detail << ")\n";
  out << (run.all_passed() ? "all checks passed" : "some checks FAILED") << '\n';
  return run.all_passed() ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable deep two-sample testing: DMMD permutation tests, influence scores and "
               "attribution maps",
               "dxt"};
  app.require_subcommand(1);
  Options o;

  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "worker threads (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--seed", o.seed, "random seed");
    if (required) {
      opt->required();
    } else {
      opt->capture_default_str();
    }
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--model", o.model, "encoder model file (DMEX); overrides --model-seed");
    c->add_option("--model-seed", o.model_seed, "seed of the random-feature encoder")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "generate a synthetic square/ellipse dataset");
  gen->add_option("--out", o.out, "output directory")->required();
  add_seed(gen, true);
  gen->add_option("--x", o.compose_x, "composition of group X")->capture_default_str();
  gen->add_option("--y", o.compose_y, "composition of group Y")->capture_default_str();
  gen->add_option("--size", o.size, "image side length")->capture_default_str()->check(CLI::Range(16, 4096));
  add_threads(gen);

  auto* embed = app.add_subcommand("embed", "embed a manifest's images with the encoder");
  embed->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", o.out, "embeddings CSV")->required();
  embed->add_option("--save-model", o.save_model, "also write the encoder to this file");
  add_model(embed);
  add_threads(embed);

  auto* test = app.add_subcommand("test", "DMMD permutation test");
  test->add_option("--emb", o.emb, "embeddings CSV")->required()->check(CLI::ExistingFile);
  test->add_option("--B", o.B, "number of permutations")->capture_default_str();
  add_seed(test, true);
  test->add_option("--out", o.out, "result JSON (stdout when omitted)");
  test->add_option("--dump-perms", o.dump_perms, "write permutation statistics CSV");
  add_threads(test);

  auto* infl = app.add_subcommand("influence", "leave-one-out influence scores");
  infl->add_option("--emb", o.emb, "embeddings CSV")->required()->check(CLI::ExistingFile);
  infl->add_option("--out", o.out, "influence CSV")->required();
  infl->add_option("--summary", o.summary, "summary JSON");
  infl->add_option("--cdf", o.cdf, "CDF CSV");
  infl->add_option("--whisker-k", o.whisker_k, "Tukey outlier multiplier")->capture_default_str();
  add_threads(infl);

  auto* abl = app.add_subcommand("ablate", "p-value while removing ranked samples");
  abl->add_option("--emb", o.emb, "embeddings CSV")->required()->check(CLI::ExistingFile);
  abl->add_option("--out", o.out, "ablation CSV")->required();
  abl->add_option("--fractions", o.fractions, "comma-separated removal fractions")->capture_default_str();
  abl->add_option("--direction", o.direction, "highest or lowest")->capture_default_str();
  abl->add_option("--scope", o.scope, "global, X or Y")->capture_default_str();
  abl->add_option("--B", o.B, "permutations per point")->capture_default_str();
  add_seed(abl, true);
  add_threads(abl);

  auto* attr = app.add_subcommand("attribute", "attribution maps and mask coverage");
  attr->add_option("--manifest", o.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
  attr->add_option("--emb", o.emb, "embeddings CSV")->required()->check(CLI::ExistingFile);
  attr->add_option("--out", o.out, "output directory")->required();
  attr->add_option("--layer", o.layer, "final, penultimate or a layer index")->capture_default_str();
  attr->add_option("--variant", o.variant, "gradient, second-order, layer-wise or all")->capture_default_str();
  attr->add_option("--ids", o.ids, "comma-separated sample ids (default: all)");
  attr->add_option("--subgroup", o.subgroup, "only samples of this subgroup");
  add_model(attr);
  add_threads(attr);

  auto* rep = app.add_subcommand("report", "SVG plots from ablation/influence CSVs");
  rep->add_option("--ablation", o.ablation, "ablation CSV")->check(CLI::ExistingFile);
  rep->add_option("--influence", o.influence, "influence CSV")->check(CLI::ExistingFile);
  rep->add_option("--out", o.out, "output directory")->required();
  rep->add_option("--whisker-k", o.whisker_k, "Tukey whisker multiplier")->capture_default_str();

  auto* repro_cmd = app.add_subcommand("repro-dsprites", "end-to-end synthetic-shape experiment");
  o.seed = 42;
  repro_cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  repro_cmd->add_option("--out", o.out, "output directory (nothing written when omitted)");
  repro_cmd->add_option("--B", o.B, "permutations per test (default 999)");
  add_threads(repro_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "dxt: " << e.what() << "\n";
    err << "run 'dxt --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*gen) cmd_gen(o, out);
    if (*embed) {
      cmd_embed(o, out);
    }
    if (*test) cmd_test(o, out);
    if (*infl) cmd_influence(o, out);
    if (*abl) cmd_ablate(o, out);
    if (*attr) cmd_attribute(o, out);
    if (*rep) cmd_report(o, out);
    if (*repro_cmd) {
      if (repro_cmd->count("--B") == 0) o.B = 999;
      return cmd_repro(o, out);
    }
  } catch (const Error& e) {
    err << "dxt: " << e.module() << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "dxt: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dxt::cli
