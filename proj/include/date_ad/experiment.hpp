#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "date_ad/checkpoint.hpp"
#include "date_ad/config.hpp"
#include "date_ad/metrics.hpp"
#include "date_ad/score.hpp"
#include "date_ad/synth.hpp"

namespace date_ad {

// A finished training run plus in-memory handles for further analysis
// (ablation scoring, sweep aggregation, acceptance checks).
struct ExperimentResult {
  MetricReport metrics;
  double overlap_initial = 0.0;  // histogram overlap before training
  double overlap_final = 0.0;
  std::string config_hash;
  std::string checkpoint_path;
  std::string log_path;

  std::unique_ptr<Discriminator<float>> model;
  std::unique_ptr<Generator<float>> generator;
  PatternSet patterns;
  Vocab vocab;
  std::vector<TokenSequence> train_seqs;
  std::vector<TokenSequence> test_seqs;
  std::vector<ScoreReport> final_reports;
};

// Binary in/out labels for a set of reports given the inlier class.
std::vector<int> binarize_labels(const std::vector<ScoreReport>& reports,
                                 const std::string& inlier_class);
std::vector<double> extract_scores(const std::vector<ScoreReport>& reports);

// Runs the full pipeline: load (or take) the dataset, build the vocabulary
// over the whole corpus, split, train, score, evaluate, and write artifacts
// under cfg.output_dir. `preloaded` bypasses file loading (synthetic runs).
ExperimentResult run_experiment(const RunConfig& cfg, const Dataset* preloaded = nullptr);

// One full train+eval per contamination fraction; shared seeds except for
// split composition. Writes a CSV table when csv_path is non-empty.
std::vector<MetricReport> contamination_sweep(const RunConfig& base,
                                              const std::vector<double>& fractions,
                                              const Dataset* preloaded = nullptr,
                                              const std::string& csv_path = "");

// Ablation grid over score kind, generator mode, loss combination, pattern
// count and mask fraction. Cells that share training parameters reuse one
// trained model and differ only in scoring.
struct AblationGrid {
  std::vector<ScoreKind> score_kinds;
  std::vector<GeneratorMode> generators;
  std::vector<std::string> loss_modes;  // both | rtd_only | rmd_only
  std::vector<int> k_values;
  std::vector<double> mask_fractions;

  static AblationGrid from_json(const std::string& json_text);
  static AblationGrid single_cell(const RunConfig& base);
};

struct AblationRow {
  ScoreKind score_kind;
  GeneratorMode generator;
  std::string loss_mode;
  int k = 0;
  double mask_fraction = 0.0;
  MetricReport metrics;
};

std::vector<AblationRow> run_ablation(const RunConfig& base, const AblationGrid& grid,
                                      const Dataset* preloaded = nullptr,
                                      const std::string& csv_path = "");

std::string ablation_to_csv(const std::vector<AblationRow>& rows);

}  // namespace date_ad
