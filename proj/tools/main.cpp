#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "date_ad/checkpoint.hpp"
#include "date_ad/config.hpp"
#include "date_ad/experiment.hpp"
#include "date_ad/mask.hpp"
#include "date_ad/metrics.hpp"
#include "date_ad/score.hpp"
#include "date_ad/synth.hpp"

namespace fs = std::filesystem;
using namespace date_ad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

RunConfig load_config(const std::string& path, const std::string& output_override) {
  RunConfig cfg = RunConfig::from_file(path);
  if (!output_override.empty()) {
    cfg.output_dir = output_override;
  } else if (const char* env = std::getenv("DATE_AD_OUTPUT_DIR"); env != nullptr && *env) {
    cfg.output_dir = env;
  }
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config_path, const std::string& output_override) {
  RunConfig cfg = load_config(config_path, output_override);
  ExperimentResult res = run_experiment(cfg);
  std::cout << "checkpoint: " << res.checkpoint_path << "\n"
            << "log: " << res.log_path << "\n"
            << "auroc: " << res.metrics.auroc << "\n"
            << "aupr_in: " << res.metrics.aupr_in << "\n"
            << "aupr_out: " << res.metrics.aupr_out << "\n"
            << "config_hash: " << res.config_hash << "\n";
  return kExitOk;
}

int cmd_score(const std::string& checkpoint_path, const std::string& input_path,
              const std::string& kind_str, const std::string& out_path,
              const std::string& tokens_path, const std::string& expect_config,
              std::uint64_t seed, int threads) {
  ScoreKind kind = score_kind_from_string(kind_str);
  LoadedModel<float> model = load_checkpoint(checkpoint_path);

  if (!expect_config.empty()) {
    RunConfig cfg = RunConfig::from_file(expect_config);
    if (cfg.hash_hex() != model.meta.config_hash) {
      std::cerr << "config hash mismatch: checkpoint was produced by " << model.meta.config_hash
                << ", supplied config hashes to " << cfg.hash_hex() << "\n";
      return kExitUsage;
    }
  }

  PreprocessRules rules;  // scoring input is preprocessed with the default rules
  std::vector<Document> docs = load_csv(input_path, rules, "doc:");
  std::vector<TokenSequence> seqs;
  for (const auto& d : docs) {
    if (d.tokens.empty()) {
      std::cerr << "skipping empty document " << d.id << "\n";
      continue;
    }
    TokenSequence seq = encode(d.tokens, model.vocab, model.patterns.t_max);
    seq.label = d.label;
    seq.doc_id = d.id;
    seqs.push_back(std::move(seq));
  }

  auto reports = score_all(seqs, *model.disc, model.patterns, model.vocab, kind, seed, threads);
  const std::string csv = scores_to_csv(reports);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_file(out_path, csv);
  }
  if (!tokens_path.empty()) {
    if (kind != ScoreKind::kPlRtd) {
      std::cerr << "per-token output requires --kind pl_rtd\n";
      return kExitUsage;
    }
    write_file(tokens_path, per_token_json(reports));
  }
  return kExitOk;
}

int cmd_eval(const std::string& scores_path, const std::string& inlier_class,
             const std::string& out_path, const std::string& hist_path, int bins) {
  auto rows = parse_csv(read_file(scores_path));
  if (!rows.empty() && !rows[0].empty() && rows[0][0] == "doc_id") rows.erase(rows.begin());
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& row : rows) {
    if (row.size() < 3) throw DataError("scores CSV rows must be doc_id,label,score");
    int label;
    if (inlier_class.empty()) {
      if (row[1] != "0" && row[1] != "1") {
        throw InvalidArgument("labels must be binary 0/1 unless --inlier-class is given");
      }
      label = row[1] == "1" ? 1 : 0;
    } else {
      label = row[1] == inlier_class ? 1 : 0;
    }
    labels.push_back(label);
    scores.push_back(std::stod(row[2]));
  }
  MetricReport m = compute_metrics(scores, labels);

  nlohmann::json j;
  j["auroc"] = m.auroc;
  j["aupr_in"] = m.aupr_in;
  j["aupr_out"] = m.aupr_out;
  j["n_in"] = m.n_in;
  j["n_out"] = m.n_out;
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
    std::cout << text;
  }

  if (!hist_path.empty()) {
    std::vector<double> in_scores, out_scores;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      (labels[i] == 1 ? in_scores : out_scores).push_back(scores[i]);
    }
    write_file(hist_path, histogram_to_csv(histogram(in_scores, out_scores, bins)));
  }
  return kExitOk;
}

int cmd_bound(int s, int m, int p, int n, long mc_trials, std::uint64_t mc_seed) {
  BoundQuery q{s, m, p, n};
  mpq_class ub = collision_bound(q);
  std::cout << "S=" << s << " M=" << m << " p=" << p << " N=" << n << "\n";
  std::cout << "r = " << rational_to_string(r_ratio(s, m, p)) << "\n";
  std::cout << "UB_N exact = " << rational_to_string(ub) << "\n";
  std::cout.precision(12);
  std::cout << "UB_N float = " << rational_to_double(ub) << "\n";
  if (mc_trials > 0) {
    const double rate = empirical_collision_rate(s, m, p, n, mc_trials, mc_seed);
    const double sigma = std::sqrt(std::max(rate * (1.0 - rate), 0.0) /
                                   static_cast<double>(mc_trials));
    std::cout << "monte_carlo rate = " << rate << " (trials=" << mc_trials
              << ", sigma=" << sigma << ")\n";
    std::cout << "within_bound = "
              << (rate <= rational_to_double(ub) + 3.0 * sigma ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& fractions_str,
              const std::string& out_path, const std::string& output_override) {
  RunConfig cfg = load_config(config_path, output_override);
  std::vector<double> fractions;
  std::stringstream ss(fractions_str);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) fractions.push_back(std::stod(item));
  }
  auto reports = contamination_sweep(cfg, fractions, nullptr,
                                     out_path.empty() ? cfg.output_dir + "/sweep.csv" : out_path);
  std::cout << "contamination,auroc\n";
  std::cout.precision(6);
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    std::cout << fractions[i] << ',' << reports[i].auroc << "\n";
  }
  return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::string& grid_path,
               const std::string& out_path, const std::string& output_override) {
  RunConfig cfg = load_config(config_path, output_override);
  AblationGrid grid = grid_path.empty() ? AblationGrid::single_cell(cfg)
                                        : AblationGrid::from_json(read_file(grid_path));
  auto rows = run_ablation(cfg, grid, nullptr,
                           out_path.empty() ? cfg.output_dir + "/ablation.csv" : out_path);
  std::cout << ablation_to_csv(rows);
  return kExitOk;
}

int cmd_synth(const std::string& out_dir, int topics, int docs_per_topic, int words_per_topic,
              int background_words, double background_mix, int len_min, int len_max,
              double train_fraction, std::uint64_t seed) {
  SynthSpec spec;
  spec.topics = topics;
  spec.docs_per_topic = docs_per_topic;
  spec.words_per_topic = words_per_topic;
  spec.background_words = background_words;
  spec.background_mix = background_mix;
  spec.len_min = len_min;
  spec.len_max = len_max;
  spec.train_fraction = train_fraction;
  spec.seed = seed;
  auto [train_csv, test_csv] = write_synth_csv(spec, out_dir);
  std::cout << "train: " << train_csv << "\ntest: " << test_csv << "\n";
  return kExitOk;
}

int cmd_heatmap(const std::string& tokens_path, const std::string& out_path, bool ansi) {
  nlohmann::json j = nlohmann::json::parse(read_file(tokens_path));
  std::vector<ScoreReport> reports;
  for (const auto& doc : j) {
    ScoreReport r;
    r.doc_id = doc.value("doc_id", "");
    r.label = doc.value("label", "");
    r.score = doc.value("score", 0.0);
    for (const auto& t : doc.value("tokens", nlohmann::json::array())) {
      r.per_token.push_back({t.at("token").get<std::string>(), t.at("p_original").get<double>()});
    }
    reports.push_back(std::move(r));
  }
  if (ansi) {
    for (const auto& r : reports) std::cout << heatmap_ansi(r);
    return kExitOk;
  }
  const std::string html = heatmap_html(reports);
  if (out_path.empty()) {
    std::cout << html;
  } else {
    write_file(out_path, html);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DATE text anomaly detection: training, scoring and evaluation"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  auto* train = app.add_subcommand("train", "Train a model from a run config");
  train->add_option("--config", config_path, "run config JSON")->required();
  train->add_option("--output-dir", output_override, "override the config output_dir");

  std::string ckpt_path, input_path, kind_str = "pl_rtd", scores_out, tokens_out, expect_config;
  std::uint64_t score_seed = 0;
  int score_threads = 0;
  auto* score = app.add_subcommand("score", "Score documents with a trained checkpoint");
  score->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  score->add_option("--input", input_path, "CSV of documents (class,title,description)")
      ->required();
  score->add_option("--kind", kind_str, "pl_rtd|pl_rmd|mp|ne");
  score->add_option("--out", scores_out, "scores CSV output (stdout when omitted)");
  score->add_option("--tokens-out", tokens_out, "per-token JSON output (pl_rtd only)");
  score->add_option("--expect-config", expect_config,
                    "refuse to score if this config's hash mismatches the checkpoint");
  score->add_option("--seed", score_seed, "seed for corrupted-pass score kinds");
  score->add_option("--threads", score_threads, "scoring threads (0 = auto)");

  std::string eval_scores, eval_inlier, eval_out, eval_hist;
  int eval_bins = 20;
  auto* eval = app.add_subcommand("eval", "Compute AUROC/AUPR from a labeled scores CSV");
  eval->add_option("--scores", eval_scores, "CSV doc_id,label,score")->required();
  eval->add_option("--inlier-class", eval_inlier,
                   "class treated as inlier (default: labels are binary 0/1)");
  eval->add_option("--out", eval_out, "metrics JSON output");
  eval->add_option("--hist", eval_hist, "histogram CSV output");
  eval->add_option("--bins", eval_bins, "histogram bins");

  int b_s = 128, b_m = 19, b_p = 12, b_n = 100;
  long mc_trials = 0;
  std::uint64_t mc_seed = 0;
  auto* bound = app.add_subcommand("bound", "Exact mask-pattern collision upper bound");
  bound->add_option("--s", b_s, "sequence length S");
  bound->add_option("--m", b_m, "masked count M");
  bound->add_option("--p", b_p, "overlap threshold p");
  bound->add_option("--n", b_n, "sampled pattern count N");
  bound->add_option("--mc-trials", mc_trials, "Monte-Carlo cross-check trials (0 = off)");
  bound->add_option("--mc-seed", mc_seed, "Monte-Carlo seed");

  std::string sweep_fractions = "0,0.05,0.1,0.15", sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Contamination sweep (one run per fraction)");
  sweep->add_option("--config", config_path, "run config JSON")->required();
  sweep->add_option("--fractions", sweep_fractions, "comma-separated fractions in [0,0.15]");
  sweep->add_option("--out", sweep_out, "sweep CSV output");
  sweep->add_option("--output-dir", output_override, "override the config output_dir");

  std::string grid_path, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Ablation grid over score/generator/loss/masking");
  ablate->add_option("--config", config_path, "base run config JSON")->required();
  ablate->add_option("--grid", grid_path, "grid JSON (defaults to the config's single cell)");
  ablate->add_option("--out", ablate_out, "results CSV output");
  ablate->add_option("--output-dir", output_override, "override the config output_dir");

  std::string synth_dir = "synth_data";
  int sy_topics = 2, sy_docs = 500, sy_words = 300, sy_bg_words = 150;
  int sy_len_min = 20, sy_len_max = 60;
  double sy_bg_mix = 0.2, sy_train_frac = 0.8;
  std::uint64_t sy_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic topic corpus as CSV");
  synth->add_option("--out-dir", synth_dir, "output directory");
  synth->add_option("--topics", sy_topics, "number of topics");
  synth->add_option("--docs-per-topic", sy_docs, "documents per topic");
  synth->add_option("--words-per-topic", sy_words, "topic vocabulary size");
  synth->add_option("--background-words", sy_bg_words, "shared background vocabulary size");
  synth->add_option("--background-mix", sy_bg_mix, "background mixing fraction");
  synth->add_option("--len-min", sy_len_min, "min document length");
  synth->add_option("--len-max", sy_len_max, "max document length");
  synth->add_option("--train-fraction", sy_train_frac, "per-topic train fraction");
  synth->add_option("--seed", sy_seed, "corpus seed");

  std::string hm_tokens, hm_out;
  bool hm_ansi = false;
  auto* heatmap = app.add_subcommand("heatmap", "Render token heatmaps from per-token JSON");
  heatmap->add_option("--tokens", hm_tokens, "per-token JSON from `score --tokens-out`")
      ->required();
  heatmap->add_option("--out", hm_out, "HTML output (stdout when omitted)");
  heatmap->add_flag("--ansi", hm_ansi, "render to the terminal instead of HTML");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(config_path, output_override);
    if (app.got_subcommand(score)) {
      return cmd_score(ckpt_path, input_path, kind_str, scores_out, tokens_out, expect_config,
                       score_seed, score_threads);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(eval_scores, eval_inlier, eval_out, eval_hist, eval_bins);
    }
    if (app.got_subcommand(bound)) return cmd_bound(b_s, b_m, b_p, b_n, mc_trials, mc_seed);
    if (app.got_subcommand(sweep)) {
      return cmd_sweep(config_path, sweep_fractions, sweep_out, output_override);
    }
    if (app.got_subcommand(ablate)) {
      return cmd_ablate(config_path, grid_path, ablate_out, output_override);
    }
    if (app.got_subcommand(synth)) {
      return cmd_synth(synth_dir, sy_topics, sy_docs, sy_words, sy_bg_words, sy_bg_mix,
                       sy_len_min, sy_len_max, sy_train_frac, sy_seed);
    }
    if (app.got_subcommand(heatmap)) return cmd_heatmap(hm_tokens, hm_out, hm_ansi);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
