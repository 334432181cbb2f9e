#include "date_ad/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "date_ad/train.hpp"

namespace date_ad {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::vector<TokenSequence> encode_docs(const std::vector<const Document*>& docs,
                                       const Vocab& vocab, int t_max) {
  std::vector<TokenSequence> out;
  out.reserve(docs.size());
  for (const auto* d : docs) {
    if (d->tokens.empty()) continue;  // empty after preprocessing: nothing to learn from
    TokenSequence seq = encode(d->tokens, vocab, t_max);
    seq.label = d->label;
    seq.doc_id = d->id;
    out.push_back(std::move(seq));
  }
  return out;
}

nlohmann::json breakdown_to_json(const LossBreakdown& b) {
  nlohmann::json j;
  j["step"] = b.step;
  j["l_rmd"] = b.l_rmd;
  j["l_rtd"] = b.l_rtd;
  j["l_mlm"] = b.l_mlm;
  j["l_total"] = b.l_total;
  j["lr"] = b.lr;
  j["grad_norm"] = b.grad_norm;
  if (b.val_auroc) j["val_auroc"] = *b.val_auroc;
  return j;
}

}  // namespace

std::vector<int> binarize_labels(const std::vector<ScoreReport>& reports,
                                 const std::string& inlier_class) {
  std::vector<int> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(r.label == inlier_class ? 1 : 0);
  return out;
}

std::vector<double> extract_scores(const std::vector<ScoreReport>& reports) {
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(r.score);
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg, const Dataset* preloaded) {
  cfg.validate();
  if (preloaded == nullptr && cfg.dataset.format == "synth") {
    throw InvalidArgument("dataset.format 'synth' requires an in-process dataset");
  }

  ExperimentResult res;
  res.config_hash = cfg.hash_hex();

  Dataset loaded;
  const Dataset* ds = preloaded;
  if (ds == nullptr) {
    loaded = load_dataset(cfg.dataset.format, cfg.dataset.train_path, cfg.dataset.test_path,
                          cfg.preprocess);
    ds = &loaded;
  }

  // Vocabulary over the whole corpus (train and held-out parts), as in the
  // comparison setup this pipeline mirrors; labels are never consulted.
  std::vector<Document> all_docs;
  all_docs.reserve(ds->train_docs.size() + ds->test_docs.size());
  for (const auto& d : ds->train_docs) all_docs.push_back(d);
  for (const auto& d : ds->test_docs) all_docs.push_back(d);
  Vocab vocab = build_vocab(all_docs, cfg.vocab.min_freq, cfg.vocab.max_size);

  SplitSpec split_spec{cfg.inlier_class, cfg.contamination, cfg.seed};
  Split split = make_split(*ds, split_spec);

  res.vocab = vocab;
  res.train_seqs = encode_docs(split.train, vocab, cfg.t_max);
  {
    std::vector<const Document*> test_docs;
    test_docs.reserve(split.test.size());
    for (const auto& ld : split.test) test_docs.push_back(ld.doc);
    res.test_seqs = encode_docs(test_docs, vocab, cfg.t_max);
  }
  if (res.train_seqs.empty()) throw InvalidArgument("experiment: train split is empty");

  res.patterns = gen_patterns(cfg.t_max, cfg.patterns.mask_fraction, cfg.patterns.k, cfg.seed);

  EncoderConfig model_cfg = cfg.model;
  model_cfg.vocab_size = vocab.size();
  model_cfg.max_positions = cfg.t_max;
  res.model = std::make_unique<Discriminator<float>>(model_cfg, cfg.patterns.k, cfg.seed);
  if (cfg.train.generator != GeneratorMode::kRandom) {
    res.generator = std::make_unique<Generator<float>>(
        model_cfg, cfg.train.generator, res.model->token_embeddings(),
        res.model->position_embeddings(), cfg.seed);
  }

  fs::create_directories(cfg.output_dir);
  const fs::path out_dir(cfg.output_dir);
  write_file(out_dir / "config.json", cfg.to_json());
  write_file(out_dir / "manifest.json", split_manifest_json(split, split_spec, cfg.hash()));

  const int threads = cfg.train.threads;
  auto initial_reports = score_all(res.test_seqs, *res.model, res.patterns, vocab,
                                   cfg.score_kind, cfg.seed, threads);
  write_file(out_dir / "scores_initial.csv", scores_to_csv(initial_reports));

  res.log_path = (out_dir / "train_log.jsonl").string();
  {
    std::ofstream log(res.log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw DataError("cannot write " + res.log_path);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = cfg.seed;
    Trainer<float> trainer(*res.model, res.generator.get(), res.patterns, train_cfg);
    auto eval_hook = [&]() -> double {
      auto reports = score_all(res.test_seqs, *res.model, res.patterns, vocab,
                               ScoreKind::kPlRtd, cfg.seed, threads);
      auto labels = binarize_labels(reports, cfg.inlier_class);
      auto scores = extract_scores(reports);
      return auroc(scores, labels);
    };
    trainer.fit(
        res.train_seqs,
        [&](const LossBreakdown& b) { log << breakdown_to_json(b).dump() << '\n'; },
        eval_hook);
  }

  res.checkpoint_path = (out_dir / "model.ckpt").string();
  CheckpointMeta meta;
  meta.config_hash = res.config_hash;
  meta.stopword_hash = to_hex(cfg.preprocess.stopword_hash());
  meta.generator = cfg.train.generator;
  save_checkpoint(res.checkpoint_path, *res.model, res.generator.get(), res.patterns, vocab,
                  meta);

  res.final_reports = score_all(res.test_seqs, *res.model, res.patterns, vocab, cfg.score_kind,
                                cfg.seed, threads);
  write_file(out_dir / "scores.csv", scores_to_csv(res.final_reports));
  if (cfg.score_kind == ScoreKind::kPlRtd) {
    write_file(out_dir / "scores_tokens.json", per_token_json(res.final_reports));
  }

  auto labels = binarize_labels(res.final_reports, cfg.inlier_class);
  auto scores = extract_scores(res.final_reports);
  res.metrics = compute_metrics(scores, labels);
  res.metrics.split_id = cfg.inlier_class;
  res.metrics.config_hash = res.config_hash;

  // Score histograms before and after training (the separation picture).
  auto split_by_class = [&](const std::vector<ScoreReport>& reports) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& r : reports) {
      if (r.label == cfg.inlier_class) {
        out.first.push_back(r.score);
      } else {
        out.second.push_back(r.score);
      }
    }
    return out;
  };
  auto [in0, out0] = split_by_class(initial_reports);
  auto [in1, out1] = split_by_class(res.final_reports);
  if (!in0.empty() && !out0.empty()) {
    HistogramTable h0 = histogram(in0, out0, cfg.histogram_bins);
    HistogramTable h1 = histogram(in1, out1, cfg.histogram_bins);
    res.overlap_initial = overlap_coefficient(h0);
    res.overlap_final = overlap_coefficient(h1);
    write_file(out_dir / "hist_initial.csv", histogram_to_csv(h0));
    write_file(out_dir / "hist_final.csv", histogram_to_csv(h1));
    write_file(out_dir / "hist_initial.svg", histogram_to_svg(h0, "anomaly score, step 0"));
    write_file(out_dir / "hist_final.svg", histogram_to_svg(h1, "anomaly score, final"));
  }

  nlohmann::json mj;
  mj["auroc"] = res.metrics.auroc;
  mj["aupr_in"] = res.metrics.aupr_in;
  mj["aupr_out"] = res.metrics.aupr_out;
  mj["n_in"] = res.metrics.n_in;
  mj["n_out"] = res.metrics.n_out;
  mj["split_id"] = res.metrics.split_id;
  mj["config_hash"] = res.config_hash;
  mj["score_kind"] = to_string(cfg.score_kind);
  mj["overlap_initial"] = res.overlap_initial;
  mj["overlap_final"] = res.overlap_final;
  mj["stopword_hash"] = to_hex(cfg.preprocess.stopword_hash());
  mj["vocab_size"] = vocab.size();
  mj["train_size"] = res.train_seqs.size();
  write_file(out_dir / "metrics.json", mj.dump(2));

  return res;
}

std::vector<MetricReport> contamination_sweep(const RunConfig& base,
                                              const std::vector<double>& fractions,
                                              const Dataset* preloaded,
                                              const std::string& csv_path) {
  if (fractions.empty()) throw InvalidArgument("sweep: empty fraction list");
  for (double f : fractions) {
    if (f < 0.0 || f > 0.15) throw InvalidArgument("sweep: fractions must lie in [0, 0.15]");
  }
  std::vector<MetricReport> out;
  for (double f : fractions) {
    RunConfig cfg = base;
    cfg.contamination = f;
    std::ostringstream dir;
    dir << base.output_dir << "/contamination_" << std::setprecision(3) << f;
    cfg.output_dir = dir.str();
    ExperimentResult res = run_experiment(cfg, preloaded);
    MetricReport m = res.metrics;
    std::ostringstream sid;
    sid << base.inlier_class << "@" << f;
    m.split_id = sid.str();
    out.push_back(m);
  }
  if (!csv_path.empty()) {
    std::ostringstream csv;
    csv.precision(12);
    csv << "contamination,auroc,aupr_in,aupr_out,n_in,n_out\n";
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      csv << fractions[i] << ',' << out[i].auroc << ',' << out[i].aupr_in << ','
          << out[i].aupr_out << ',' << out[i].n_in << ',' << out[i].n_out << '\n';
    }
    write_file(csv_path, csv.str());
  }
  return out;
}

AblationGrid AblationGrid::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("grid is not valid JSON: ") + e.what());
  }
  AblationGrid g;
  for (const auto& s : j.value("score_kinds", std::vector<std::string>{})) {
    g.score_kinds.push_back(score_kind_from_string(s));
  }
  for (const auto& s : j.value("generators", std::vector<std::string>{})) {
    g.generators.push_back(generator_mode_from_string(s));
  }
  g.loss_modes = j.value("loss_modes", std::vector<std::string>{});
  for (const auto& m : g.loss_modes) {
    if (m != "both" && m != "rtd_only" && m != "rmd_only") {
      throw InvalidArgument("grid loss_modes must be both|rtd_only|rmd_only");
    }
  }
  g.k_values = j.value("k", std::vector<int>{});
  g.mask_fractions = j.value("mask_fractions", std::vector<double>{});
  return g;
}

AblationGrid AblationGrid::single_cell(const RunConfig& base) {
  AblationGrid g;
  g.score_kinds = {base.score_kind};
  g.generators = {base.train.generator};
  g.loss_modes = {"both"};
  g.k_values = {base.patterns.k};
  g.mask_fractions = {base.patterns.mask_fraction};
  return g;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const AblationGrid& grid_in,
                                      const Dataset* preloaded, const std::string& csv_path) {
  AblationGrid grid = grid_in;
  const AblationGrid defaults = AblationGrid::single_cell(base);
  if (grid.score_kinds.empty()) grid.score_kinds = defaults.score_kinds;
  if (grid.generators.empty()) grid.generators = defaults.generators;
  if (grid.loss_modes.empty()) grid.loss_modes = defaults.loss_modes;
  if (grid.k_values.empty()) grid.k_values = defaults.k_values;
  if (grid.mask_fractions.empty()) grid.mask_fractions = defaults.mask_fractions;

  std::vector<AblationRow> rows;
  int cell = 0;
  for (GeneratorMode gen : grid.generators) {
    for (const std::string& loss_mode : grid.loss_modes) {
      for (int k : grid.k_values) {
        for (double mf : grid.mask_fractions) {
          RunConfig cfg = base;
          cfg.train.generator = gen;
          cfg.patterns.k = k;
          cfg.patterns.mask_fraction = mf;
          if (loss_mode == "rtd_only") cfg.train.mu_rmd = 0.0;
          if (loss_mode == "rmd_only") cfg.train.lambda_rtd = 0.0;
          cfg.output_dir = base.output_dir + "/cell_" + std::to_string(cell++);
          ExperimentResult res = run_experiment(cfg, preloaded);

          for (ScoreKind kind : grid.score_kinds) {
            std::vector<ScoreReport> reports;
            if (kind == cfg.score_kind) {
              reports = res.final_reports;
            } else {
              reports = score_all(res.test_seqs, *res.model, res.patterns, res.vocab, kind,
                                  cfg.seed, cfg.train.threads);
            }
            AblationRow row;
            row.score_kind = kind;
            row.generator = gen;
            row.loss_mode = loss_mode;
            row.k = k;
            row.mask_fraction = mf;
            auto labels = binarize_labels(reports, cfg.inlier_class);
            auto scores = extract_scores(reports);
            row.metrics = compute_metrics(scores, labels);
            row.metrics.split_id = cfg.inlier_class;
            row.metrics.config_hash = res.config_hash;
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  if (!csv_path.empty()) write_file(csv_path, ablation_to_csv(rows));
  return rows;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream csv;
  csv.precision(12);
  csv << "score_kind,generator,loss_mode,k,mask_fraction,auroc,aupr_in,aupr_out\n";
  for (const auto& r : rows) {
    csv << to_string(r.score_kind) << ',' << to_string(r.generator) << ',' << r.loss_mode << ','
        << r.k << ',' << r.mask_fraction << ',' << r.metrics.auroc << ',' << r.metrics.aupr_in
        << ',' << r.metrics.aupr_out << '\n';
  }
  return csv.str();
}

}  // namespace date_ad
