// xdesc: generate synthetic descriptor data, train translation models, and
// run cross-descriptor matching pipelines over XDSC/XMLP/XBNK files.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xdesc/bank.hpp"
#include "xdesc/io.hpp"
#include "xdesc/matching.hpp"
#include "xdesc/metrics.hpp"
#include "xdesc/pair.hpp"
#include "xdesc/rng.hpp"
#include "xdesc/scenarios.hpp"
#include "xdesc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ReportWriter {
  std::string path;
  json body;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit ReportWriter(std::string subcommand) {
    body["schema_version"] = 1;
    body["subcommand"] = std::move(subcommand);
    body["config"] = json::object();
    body["metrics"] = json::object();
  }

  void write() {
    if (path.empty()) return;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    body["timings"] = {{"seconds", seconds}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw xdesc::IoError("cannot open report path '" + path + "'");
    out << body.dump(2) << '\n';
  }
};

std::vector<xdesc::SyntheticFamilyConfig> load_family_configs(const std::string& path) {
  if (path.empty()) return xdesc::default_family_configs();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xdesc::IoError("cannot open families config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw xdesc::ParseError("families config: invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_array() || j.empty())
    throw xdesc::ParseError("families config: expected a non-empty array");

  std::vector<xdesc::SyntheticFamilyConfig> cfgs;
  std::uint64_t fallback_seed = 1;
  for (const auto& e : j) {
    xdesc::SyntheticFamilyConfig cfg;
    if (!e.contains("name")) throw xdesc::ParseError("families config: missing field 'name'");
    if (!e.contains("dim")) throw xdesc::ParseError("families config: missing field 'dim'");
    cfg.info.spec.name = e.at("name").get<std::string>();
    cfg.info.spec.dim = e.at("dim").get<int>();
    const std::string domain = e.value("domain", std::string("real"));
    cfg.info.spec.domain = xdesc::domain_from_string(domain);
    if (cfg.info.spec.domain == xdesc::Domain::binary) {
      cfg.info.spec.metric = xdesc::Metric::hamming;
      cfg.info.spec.output_norm = xdesc::OutputNorm::none;
    } else {
      cfg.info.spec.metric = xdesc::Metric::l2;
      cfg.info.spec.output_norm =
          xdesc::norm_from_string(e.value("norm", std::string("unit_l2")));
    }
    cfg.info.head = e.contains("head")
                        ? xdesc::head_from_string(e.at("head").get<std::string>())
                        : xdesc::default_head(cfg.info.spec);
    cfg.info.hidden = e.value("hidden", std::vector<int>{256, 256});
    cfg.noise_sigma = e.value("noise_sigma", 0.1f);
    cfg.map_hidden = e.value("map_hidden", 128);
    cfg.map_seed = e.value("map_seed", fallback_seed * 1000 + 7);
    cfg.info.spec.validate();
    cfgs.push_back(std::move(cfg));
    ++fallback_seed;
  }
  return cfgs;
}

xdesc::XdscFormat format_from_string(const std::string& s) {
  if (s == "text") return xdesc::XdscFormat::text;
  if (s == "binary") return xdesc::XdscFormat::binary;
  throw xdesc::ConfigError("unknown xdsc format '" + s + "'");
}

json quality_to_json(const xdesc::MatchQuality& q) {
  return {{"precision", q.precision},
          {"recall", q.recall},
          {"count", q.count},
          {"correct", q.correct}};
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& families_path, int n, int n_test, int latent_dim,
            std::uint64_t seed, int views, float visibility, const std::string& out_dir,
            const std::string& format_str, ReportWriter& report) {
  const auto cfgs = load_family_configs(families_path);
  const xdesc::XdscFormat format = format_from_string(format_str);
  fs::create_directories(out_dir);

  std::vector<xdesc::SyntheticFamily> families;
  for (const auto& cfg : cfgs) families.push_back(xdesc::make_family(cfg, latent_dim));

  const xdesc::MatrixF all_latents = xdesc::gen_latents(n + n_test, latent_dim, seed);
  const xdesc::MatrixF train_latents = all_latents.topRows(n);
  const xdesc::MatrixF test_latents = all_latents.bottomRows(n_test);

  xdesc::DatasetManifest manifest;
  manifest.seed = seed;
  manifest.latent_dim = latent_dim;
  manifest.n_train = n;
  manifest.n_test = n_test;

  std::vector<std::int64_t> train_ids(static_cast<std::size_t>(n));
  std::vector<std::int64_t> test_ids(static_cast<std::size_t>(n_test));
  for (int k = 0; k < n; ++k) train_ids[static_cast<std::size_t>(k)] = k;
  for (int k = 0; k < n_test; ++k) test_ids[static_cast<std::size_t>(k)] = n + k;

  for (std::size_t k = 0; k < families.size(); ++k) {
    const auto& fam = families[k];
    xdesc::FamilyManifestEntry entry;
    entry.family = fam.cfg.info;
    entry.noise_sigma = fam.cfg.noise_sigma;
    entry.map_hidden = fam.cfg.map_hidden;
    entry.map_seed = fam.cfg.map_seed;
    entry.train_file = fam.cfg.info.spec.name + ".train.xdsc";
    entry.test_file = fam.cfg.info.spec.name + ".test.xdsc";

    const auto train = xdesc::describe(fam, train_latents, train_ids,
                                       xdesc::mix_seed(seed, 0x7311 + k));
    const auto test = xdesc::describe(fam, test_latents, test_ids,
                                      xdesc::mix_seed(seed, 0x7e57 + k));
    xdesc::save_xdsc(fs::path(out_dir) / entry.train_file, train, format);
    xdesc::save_xdsc(fs::path(out_dir) / entry.test_file, test, format);
    manifest.families.push_back(std::move(entry));
  }

  if (views > 0) {
    const xdesc::ImageSet set =
        xdesc::gen_multiview(test_latents, views, families, visibility,
                             xdesc::mix_seed(seed, 0x41e45));
    xdesc::ImageSetManifest image_manifest;
    image_manifest.patch_ids_are_ground_truth = true;
    for (const auto& img : set.images) {
      xdesc::DescriptorMatrix with_ids = img.descs;
      // map row ids into the held-out id range so views align with test files
      for (auto& id : with_ids.patch_ids) id += n;
      char name[64];
      std::snprintf(name, sizeof(name), "view_%03lld.xdsc",
                    static_cast<long long>(img.image_id));
      xdesc::save_xdsc(fs::path(out_dir) / name, with_ids, format);
      image_manifest.images.push_back({img.image_id, img.algo, name});
    }
    manifest.views_file = "images.json";
    xdesc::save_image_manifest(fs::path(out_dir) / manifest.views_file, image_manifest);
  }

  xdesc::save_manifest(fs::path(out_dir) / "manifest.json", manifest);

  report.body["config"] = {{"n", n},
                           {"n_test", n_test},
                           {"latent_dim", latent_dim},
                           {"seed", seed},
                           {"views", views},
                           {"visibility", visibility},
                           {"format", format_str},
                           {"out", out_dir}};
  report.body["metrics"]["families"] = families.size();
  std::cout << "generated " << families.size() << " famil"
            << (families.size() == 1 ? "y" : "ies") << " under " << out_dir << '\n';
  return 0;
}

int cmd_train_pair(const std::string& data, const std::string& src, const std::string& dst,
                   const std::string& out, xdesc::TrainConfig cfg, ReportWriter& report) {
  const auto manifest = xdesc::load_manifest(data);
  const auto dataset = xdesc::load_train_dataset(manifest, data);
  const xdesc::PairModel model = xdesc::train_pair(dataset, src, dst, cfg);
  xdesc::save_pair(out, model);

  report.body["config"] = {{"data", data},       {"src", src},
                           {"dst", dst},         {"seed", cfg.seed},
                           {"epochs", cfg.epochs}, {"batch", model.trained_with.batch},
                           {"lr", cfg.lr},       {"out", out}};
  report.body["metrics"] = {{"final_train_loss", model.final_train_loss},
                            {"patches", dataset.size()}};
  std::cout << "trained " << src << " -> " << dst << ", final loss "
            << model.final_train_loss << '\n';
  return 0;
}

int cmd_train_bank(const std::string& data, std::vector<std::string> algos,
                   const std::string& variant, float alpha, float margin, int embed_dim,
                   bool no_diagonal, const std::string& out, xdesc::TrainConfig base_cfg,
                   ReportWriter& report) {
  const auto manifest = xdesc::load_manifest(data);
  auto dataset = xdesc::load_train_dataset(manifest, data);
  if (!algos.empty()) {
    xdesc::CorrespondenceDataset filtered;
    filtered.patch_ids = dataset.patch_ids;
    for (const auto& name : algos) filtered.entries.push_back(dataset.at(name));
    dataset = std::move(filtered);
  }

  xdesc::LossConfig loss_cfg;
  loss_cfg.alpha = alpha;
  loss_cfg.margin = margin;
  loss_cfg.variant = xdesc::variant_from_string(variant);
  loss_cfg.diagonal_matching = !no_diagonal;

  xdesc::BankTrainConfig cfg;
  static_cast<xdesc::TrainConfig&>(cfg) = base_cfg;
  cfg.embed_dim = embed_dim;

  xdesc::BankTrainLog log;
  const xdesc::ModelBank bank = xdesc::train_bank(dataset, loss_cfg, cfg, &log);
  xdesc::save_bank(out, bank);

  report.body["config"] = {{"data", data},
                           {"algos", algos},
                           {"variant", variant},
                           {"alpha", alpha},
                           {"margin", margin},
                           {"embed_dim", embed_dim},
                           {"diagonal_matching", !no_diagonal},
                           {"seed", cfg.seed},
                           {"epochs", cfg.epochs},
                           {"batch", bank.trained_with.batch},
                           {"lr", cfg.lr},
                           {"out", out}};
  report.body["metrics"] = {{"initial_objective", log.initial_objective},
                            {"final_objective", log.final_objective},
                            {"steps", log.objective_per_step.size()}};
  std::cout << "trained bank over " << bank.families.size() << " algorithms, objective "
            << log.initial_objective << " -> " << log.final_objective << '\n';
  return 0;
}

int cmd_translate(const std::string& model_path, const std::string& in_path,
                  const std::string& out_path, const std::string& format_str,
                  ReportWriter& report) {
  const xdesc::PairModel model = xdesc::load_pair(model_path);
  const xdesc::DescriptorMatrix in = xdesc::load_xdsc(in_path);
  const xdesc::DescriptorMatrix out = xdesc::translate(model, in);
  xdesc::save_xdsc(out_path, out, format_from_string(format_str));
  report.body["config"] = {{"model", model_path}, {"in", in_path}, {"out", out_path}};
  report.body["metrics"] = {{"rows", out.rows()}};
  std::cout << "translated " << out.rows() << " descriptors " << model.src.spec.name
            << " -> " << model.dst.spec.name << '\n';
  return 0;
}

int cmd_encode(const std::string& bank_path, const std::string& algo,
               const std::string& in_path, const std::string& out_path,
               const std::string& format_str, ReportWriter& report) {
  const xdesc::ModelBank bank = xdesc::load_bank(bank_path);
  const xdesc::DescriptorMatrix in = xdesc::load_xdsc(in_path);
  const xdesc::DescriptorMatrix out = xdesc::encode(bank, algo, in);
  xdesc::save_xdsc(out_path, out, format_from_string(format_str));
  report.body["config"] = {{"bank", bank_path}, {"algo", algo}, {"in", in_path},
                           {"out", out_path}};
  report.body["metrics"] = {{"rows", out.rows()}, {"embed_dim", bank.embed_dim}};
  std::cout << "encoded " << out.rows() << " descriptors into the joint space\n";
  return 0;
}

int cmd_match(const std::string& a_path, const std::string& b_path,
              const std::string& bank_path, const std::string& model_path,
              const std::string& mode, float ratio, int threads,
              const std::string& out_path, ReportWriter& report) {
  const xdesc::DescriptorMatrix a = xdesc::load_xdsc(a_path);
  const xdesc::DescriptorMatrix b = xdesc::load_xdsc(b_path);

  xdesc::MatchSet matches;
  if (mode == "naive") {
    if (a.spec.dim != b.spec.dim)
      throw xdesc::SpecError("incompatible descriptor dimensions");
    const xdesc::Metric metric = (a.spec.domain == xdesc::Domain::binary &&
                                  b.spec.domain == xdesc::Domain::binary)
                                     ? xdesc::Metric::hamming
                                     : xdesc::Metric::l2;
    matches = xdesc::match_mutual_ratio(a.values, b.values, metric, ratio, threads);
  } else if (mode == "translate") {
    xdesc::DescriptorMatrix translated;
    if (!model_path.empty()) {
      const xdesc::PairModel model = xdesc::load_pair(model_path);
      translated = xdesc::translate(model, a);
    } else if (!bank_path.empty()) {
      const xdesc::ModelBank bank = xdesc::load_bank(bank_path);
      translated = xdesc::translate_via_bank(bank, a.spec.name, b.spec.name, a);
    } else {
      throw xdesc::ConfigError("mode translate needs --model or --bank");
    }
    if (translated.spec != b.spec)
      throw xdesc::SpecError("translated spec does not match --b file");
    matches = xdesc::match_mutual_ratio(translated.values, b.values, b.spec.metric, ratio,
                                        threads);
  } else if (mode == "embed") {
    if (bank_path.empty()) throw xdesc::ConfigError("mode embed needs --bank");
    const xdesc::ModelBank bank = xdesc::load_bank(bank_path);
    const auto emb_a = xdesc::encode(bank, a.spec.name, a);
    const auto emb_b = xdesc::encode(bank, b.spec.name, b);
    matches = xdesc::match_mutual_ratio(emb_a.values, emb_b.values, xdesc::Metric::l2,
                                        ratio, threads);
  } else {
    throw xdesc::ConfigError("unknown match mode '" + mode + "'");
  }

  xdesc::save_matches(out_path, matches);

  // score against shared-patch-id ground truth when both sides carry it
  std::vector<std::pair<std::int64_t, std::int64_t>> gt;
  {
    std::unordered_set<std::int64_t> ids_b(b.patch_ids.begin(), b.patch_ids.end());
    for (std::int64_t id : a.patch_ids)
      if (ids_b.count(id)) gt.emplace_back(id, id);
  }
  report.body["config"] = {{"a", a_path}, {"b", b_path},       {"mode", mode},
                           {"ratio", ratio}, {"bank", bank_path}, {"model", model_path}};
  report.body["metrics"] = {{"matches", matches.pairs.size()}};
  if (!gt.empty()) {
    const auto q = xdesc::match_metrics(matches, a.patch_ids, b.patch_ids, gt);
    report.body["metrics"]["quality"] = quality_to_json(q);
  }
  std::cout << "matched " << matches.pairs.size() << " pairs\n";
  return 0;
}

int cmd_scenario(const std::string& manifest_path, const std::string& strategy_str,
                 const std::string& bank_path, std::vector<std::string> model_paths,
                 float ratio, std::vector<std::string> hierarchy, int threads,
                 const std::string& stats_out, ReportWriter& report) {
  const xdesc::ImageSet set = xdesc::load_image_set(manifest_path);

  xdesc::ModelBank bank;
  std::vector<xdesc::PairModel> pair_models;
  xdesc::Translators models;
  if (!bank_path.empty()) {
    bank = xdesc::load_bank(bank_path);
    models.bank = &bank;
  }
  for (const auto& p : model_paths) pair_models.push_back(xdesc::load_pair(p));
  for (const auto& p : pair_models) models.pairs.push_back(&p);

  xdesc::MatchGraphConfig cfg;
  cfg.strategy = xdesc::strategy_from_string(strategy_str);
  cfg.ratio = ratio;
  cfg.threads = threads;
  if (hierarchy.empty()) {
    // shipped default ordering, weakest first; applies when the named
    // algorithms are present, otherwise image order is used
    const std::vector<std::string> paper_order = {"BRIEF", "SIFT", "HardNet", "SOSNet"};
    bool all_known = !set.images.empty();
    for (const auto& img : set.images)
      if (std::find(paper_order.begin(), paper_order.end(), img.algo) == paper_order.end())
        all_known = false;
    if (all_known) cfg.hierarchy = paper_order;
  } else {
    cfg.hierarchy = std::move(hierarchy);
  }

  const auto graph = xdesc::build_match_graph(set, cfg, models);
  const xdesc::TrackSet tracks = xdesc::build_tracks(set, graph);

  std::vector<std::string> algos;
  for (const auto& img : set.images)
    if (std::find(algos.begin(), algos.end(), img.algo) == algos.end())
      algos.push_back(img.algo);

  std::size_t total_matches = 0;
  for (const auto& g : graph) total_matches += g.matches.pairs.size();

  json stats;
  stats["schema_version"] = 1;
  stats["strategy"] = strategy_str;
  stats["algos"] = algos;
  stats["track_count"] = tracks.tracks.size();
  stats["total_matches"] = total_matches;
  if (set.patch_ids_are_ground_truth)
    stats["correct_matches"] = xdesc::count_correct_matches(set, graph);

  if (!tracks.tracks.empty()) {
    const xdesc::CovisibilityStats cov = xdesc::covisibility_stats(tracks, algos);
    json hist = json::object();
    for (std::size_t k = 0; k < cov.histogram.size(); ++k)
      hist[std::to_string(k + 1)] = cov.histogram[k];
    stats["histogram"] = hist;
    json matrix = json::array();
    for (Eigen::Index i = 0; i < cov.co_occurrence.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < cov.co_occurrence.cols(); ++j)
        row.push_back(cov.co_occurrence(i, j));
      matrix.push_back(row);
    }
    stats["co_occurrence"] = matrix;
  }

  {
    std::ofstream out(stats_out, std::ios::binary);
    if (!out) throw xdesc::IoError("cannot open stats path '" + stats_out + "'");
    out << stats.dump(2) << '\n';
  }

  report.body["config"] = {{"manifest", manifest_path}, {"strategy", strategy_str},
                           {"bank", bank_path},        {"ratio", ratio},
                           {"hierarchy", cfg.hierarchy}, {"stats_out", stats_out}};
  report.body["metrics"] = {{"images", set.images.size()},
                            {"image_pairs", graph.size()},
                            {"total_matches", total_matches},
                            {"tracks", tracks.tracks.size()}};
  std::cout << "scenario " << strategy_str << ": " << total_matches << " matches, "
            << tracks.tracks.size() << " tracks\n";
  return 0;
}

int cmd_eval(const std::string& a_path, const std::string& b_path,
             const std::string& matches_path, ReportWriter& report) {
  const xdesc::DescriptorMatrix a = xdesc::load_xdsc(a_path);
  const xdesc::DescriptorMatrix b = xdesc::load_xdsc(b_path);
  const xdesc::MatchSet matches = xdesc::load_matches(matches_path);

  std::vector<std::pair<std::int64_t, std::int64_t>> gt;
  std::unordered_set<std::int64_t> ids_b(b.patch_ids.begin(), b.patch_ids.end());
  for (std::int64_t id : a.patch_ids)
    if (ids_b.count(id)) gt.emplace_back(id, id);

  const auto q = xdesc::match_metrics(matches, a.patch_ids, b.patch_ids, gt);
  report.body["config"] = {{"a", a_path}, {"b", b_path}, {"matches", matches_path}};
  report.body["metrics"] = {{"quality", quality_to_json(q)},
                            {"ground_truth", gt.size()}};
  std::cout << "precision " << q.precision << " recall " << q.recall << " (" << q.correct
            << '/' << q.count << " correct)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-descriptor translation, embedding, and matching toolkit"};
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate synthetic descriptor families");
  std::string gen_families, gen_out = "data", gen_format = "text", gen_report;
  int gen_n = 5000, gen_n_test = 1000, gen_latent = 64, gen_views = 0;
  std::uint64_t gen_seed = 7;
  float gen_visibility = 1.0f;
  gen->add_option("--families", gen_families, "families config JSON (default: built-ins)");
  gen->add_option("--n", gen_n, "training patches")->check(CLI::PositiveNumber);
  gen->add_option("--n-test", gen_n_test, "held-out patches")->check(CLI::PositiveNumber);
  gen->add_option("--latent-dim", gen_latent, "latent dimension")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--views", gen_views, "also emit a multi-view image set");
  gen->add_option("--visibility", gen_visibility, "fraction of patches visible per view");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--format", gen_format, "xdsc format: text|binary");
  gen->add_option("--report", gen_report, "write a JSON report here");

  // train-pair ----------------------------------------------------------
  auto* tp = app.add_subcommand("train-pair", "train one directional translation network");
  std::string tp_data, tp_src, tp_dst, tp_out, tp_report;
  xdesc::TrainConfig tp_cfg;
  tp->add_option("--data", tp_data, "dataset manifest JSON")->required();
  tp->add_option("--src", tp_src, "source algorithm")->required();
  tp->add_option("--dst", tp_dst, "target algorithm")->required();
  tp->add_option("--out", tp_out, "output model path")->required();
  tp->add_option("--seed", tp_cfg.seed, "rng seed");
  tp->add_option("--epochs", tp_cfg.epochs, "training epochs");
  tp->add_option("--batch", tp_cfg.batch, "batch size (0 = auto)");
  tp->add_option("--lr", tp_cfg.lr, "Adam learning rate");
  tp->add_option("--report", tp_report, "write a JSON report here");

  // train-bank ----------------------------------------------------------
  auto* tb = app.add_subcommand("train-bank", "train the encoder-decoder bank");
  std::string tb_data, tb_out, tb_report, tb_variant = "quadratic";
  std::vector<std::string> tb_algos;
  float tb_alpha = 0.1f, tb_margin = 1.0f;
  int tb_embed = 128;
  bool tb_no_diag = false;
  xdesc::TrainConfig tb_cfg;
  tb->add_option("--data", tb_data, "dataset manifest JSON")->required();
  tb->add_option("--algos", tb_algos, "algorithms to include (default: all)")->delimiter(',');
  tb->add_option("--variant", tb_variant, "loss variant: quadratic|linear|auto-encoder");
  tb->add_option("--alpha", tb_alpha, "matching loss weight");
  tb->add_option("--margin", tb_margin, "triplet margin");
  tb->add_option("--embed-dim", tb_embed, "joint embedding dimension");
  tb->add_flag("--no-diagonal-matching", tb_no_diag, "drop i=i matching terms (ablation)");
  tb->add_option("--out", tb_out, "output bank path")->required();
  tb->add_option("--seed", tb_cfg.seed, "rng seed");
  tb->add_option("--epochs", tb_cfg.epochs, "training epochs");
  tb->add_option("--batch", tb_cfg.batch, "batch size (0 = auto)");
  tb->add_option("--lr", tb_cfg.lr, "Adam learning rate");
  tb->add_option("--report", tb_report, "write a JSON report here");

  // translate -----------------------------------------------------------
  auto* tr = app.add_subcommand("translate", "apply a pair model to an XDSC file");
  std::string tr_model, tr_in, tr_out, tr_format = "text", tr_report;
  tr->add_option("--model", tr_model, "pair model (.xmlp)")->required();
  tr->add_option("--in", tr_in, "input XDSC")->required();
  tr->add_option("--out", tr_out, "output XDSC")->required();
  tr->add_option("--format", tr_format, "output format: text|binary");
  tr->add_option("--report", tr_report, "write a JSON report here");

  // encode ---------------------------------------------------------------
  auto* en = app.add_subcommand("encode", "map descriptors into the joint space");
  std::string en_bank, en_algo, en_in, en_out, en_format = "text", en_report;
  en->add_option("--bank", en_bank, "bank file (.xbnk)")->required();
  en->add_option("--algo", en_algo, "algorithm name")->required();
  en->add_option("--in", en_in, "input XDSC")->required();
  en->add_option("--out", en_out, "output XDSC")->required();
  en->add_option("--format", en_format, "output format: text|binary");
  en->add_option("--report", en_report, "write a JSON report here");

  // match ----------------------------------------------------------------
  auto* ma = app.add_subcommand("match", "match two descriptor files");
  std::string ma_a, ma_b, ma_bank, ma_model, ma_mode = "naive", ma_out, ma_report;
  float ma_ratio = 0.9f;
  int ma_threads = 0;
  ma->add_option("--a", ma_a, "first XDSC")->required();
  ma->add_option("--b", ma_b, "second XDSC")->required();
  ma->add_option("--bank", ma_bank, "bank for translate/embed modes");
  ma->add_option("--model", ma_model, "pair model for translate mode");
  ma->add_option("--mode", ma_mode, "naive|translate|embed");
  ma->add_option("--ratio", ma_ratio, "second-NN ratio threshold");
  ma->add_option("--threads", ma_threads, "worker threads (0 = XDESC_THREADS or 1)");
  ma->add_option("--out", ma_out, "output matches TSV")->required();
  ma->add_option("--report", ma_report, "write a JSON report here");

  // scenario ---------------------------------------------------------------
  auto* sc = app.add_subcommand("scenario", "multi-image collaborative matching");
  std::string sc_manifest, sc_strategy = "embed", sc_bank, sc_stats, sc_report;
  std::vector<std::string> sc_models, sc_hierarchy;
  float sc_ratio = 0.9f;
  int sc_threads = 0;
  sc->add_option("--manifest", sc_manifest, "images manifest JSON")->required();
  sc->add_option("--strategy", sc_strategy, "embed|progressive|naive");
  sc->add_option("--bank", sc_bank, "bank file (.xbnk)");
  sc->add_option("--model", sc_models, "pair model(s) for progressive translation");
  sc->add_option("--ratio", sc_ratio, "second-NN ratio threshold");
  sc->add_option("--hierarchy", sc_hierarchy, "progressive ranking, weakest first")
      ->delimiter(',');
  sc->add_option("--threads", sc_threads, "worker threads (0 = XDESC_THREADS or 1)");
  sc->add_option("--stats-out", sc_stats, "co-visibility stats JSON")->required();
  sc->add_option("--report", sc_report, "write a JSON report here");

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score a matches file against patch-id ground truth");
  std::string ev_a, ev_b, ev_matches, ev_report;
  ev->add_option("--a", ev_a, "first XDSC")->required();
  ev->add_option("--b", ev_b, "second XDSC")->required();
  ev->add_option("--matches", ev_matches, "matches TSV")->required();
  ev->add_option("--report", ev_report, "write a JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      ReportWriter report("gen");
      report.path = gen_report;
      const int rc = cmd_gen(gen_families, gen_n, gen_n_test, gen_latent, gen_seed,
                             gen_views, gen_visibility, gen_out, gen_format, report);
      report.write();
      return rc;
    }
    if (tp->parsed()) {
      ReportWriter report("train-pair");
      report.path = tp_report;
      const int rc = cmd_train_pair(tp_data, tp_src, tp_dst, tp_out, tp_cfg, report);
      report.write();
      return rc;
    }
    if (tb->parsed()) {
      ReportWriter report("train-bank");
      report.path = tb_report;
      const int rc = cmd_train_bank(tb_data, tb_algos, tb_variant, tb_alpha, tb_margin,
                                    tb_embed, tb_no_diag, tb_out, tb_cfg, report);
      report.write();
      return rc;
    }
    if (tr->parsed()) {
      ReportWriter report("translate");
      report.path = tr_report;
      const int rc = cmd_translate(tr_model, tr_in, tr_out, tr_format, report);
      report.write();
      return rc;
    }
    if (en->parsed()) {
      ReportWriter report("encode");
      report.path = en_report;
      const int rc = cmd_encode(en_bank, en_algo, en_in, en_out, en_format, report);
      report.write();
      return rc;
    }
    if (ma->parsed()) {
      ReportWriter report("match");
      report.path = ma_report;
      const int rc = cmd_match(ma_a, ma_b, ma_bank, ma_model, ma_mode, ma_ratio,
                               ma_threads, ma_out, report);
      report.write();
      return rc;
    }
    if (sc->parsed()) {
      ReportWriter report("scenario");
      report.path = sc_report;
      const int rc = cmd_scenario(sc_manifest, sc_strategy, sc_bank, sc_models, sc_ratio,
                                  sc_hierarchy, sc_threads, sc_stats, report);
      report.write();
      return rc;
    }
    if (ev->parsed()) {
      ReportWriter report("eval");
      report.path = ev_report;
      const int rc = cmd_eval(ev_a, ev_b, ev_matches, report);
      report.write();
      return rc;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
