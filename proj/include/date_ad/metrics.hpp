#pragma once

#include <span>
#include <string>
#include <vector>

#include "date_ad/score.hpp"

namespace date_ad {

// Labels are binary: 1 = inlier, 0 = outlier. Scores are normality scores,
// so inliers are the positive class for AUROC.
struct MetricReport {
  double auroc = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;
  int n_in = 0;
  int n_out = 0;
  std::string split_id;
  std::string config_hash;
};

// Mann-Whitney formulation: probability that a random inlier outscores a
// random outlier, ties counted 0.5.
double auroc(std::span<const double> scores, std::span<const int> labels);

enum class PositiveClass { kInlier, kOutlier };

// Area under precision-recall with step-wise interpolation over score-sorted
// thresholds. Outlier-positive mode ranks by negated scores.
double aupr(std::span<const double> scores, std::span<const int> labels, PositiveClass positive);

MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels);

// Normalized per-class histograms over shared bin edges spanning the combined
// score range. Each class's densities sum to 1.
struct HistogramTable {
  std::vector<double> edges;       // bins+1 entries
  std::vector<double> in_density;  // bins entries
  std::vector<double> out_density;
};

HistogramTable histogram(std::span<const double> in_scores, std::span<const double> out_scores,
                         int bins);

// Overlap coefficient between the two normalized histograms, in [0, 1].
double overlap_coefficient(const HistogramTable& h);

std::string histogram_to_csv(const HistogramTable& h);
// Small standalone SVG chart of the two distributions.
std::string histogram_to_svg(const HistogramTable& h, const std::string& title);

// Token heatmaps: each token on a white->red ramp by 1 - P_D(original).
std::string heatmap_html(const std::vector<ScoreReport>& reports);
std::string heatmap_ansi(const ScoreReport& report);

}  // namespace date_ad
