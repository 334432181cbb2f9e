#include "date_ad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace date_ad {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("metrics: size mismatch");
  if (scores.empty()) throw InvalidArgument("metrics: empty input");
  for (int l : labels) {
    if (l != 0 && l != 1) throw InvalidArgument("metrics: labels must be 0 or 1");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::size_t n_in = 0;
  for (int l : labels) n_in += l;
  const std::size_t n_out = n - n_in;
  if (n_in == 0 || n_out == 0) throw InvalidArgument("auroc: single-class input");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; rank sums stay exact in double at these sizes.
  double rank_sum_in = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_in += midrank;
    }
    i = j;
  }
  const double u = rank_sum_in - 0.5 * static_cast<double>(n_in) * (n_in + 1);
  return u / (static_cast<double>(n_in) * static_cast<double>(n_out));
}

double aupr(std::span<const double> scores, std::span<const int> labels, PositiveClass positive) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();

  std::vector<double> s(scores.begin(), scores.end());
  std::vector<int> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (positive == PositiveClass::kInlier) {
      pos[i] = labels[i];
    } else {
      pos[i] = 1 - labels[i];
      s[i] = -s[i];
    }
  }
  std::size_t total_pos = 0;
  for (int p : pos) total_pos += p;
  if (total_pos == 0 || total_pos == n) throw InvalidArgument("aupr: single-class input");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  // Walk thresholds from the highest score down; samples with equal scores
  // enter together. Step-wise area: sum of (delta recall) * precision.
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && s[order[j]] == s[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      tp += pos[order[k]];
      fp += 1 - pos[order[k]];
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

MetricReport compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  MetricReport r;
  r.auroc = auroc(scores, labels);
  r.aupr_in = aupr(scores, labels, PositiveClass::kInlier);
  r.aupr_out = aupr(scores, labels, PositiveClass::kOutlier);
  for (int l : labels) {
    if (l == 1) ++r.n_in;
    else ++r.n_out;
  }
  return r;
}

HistogramTable histogram(std::span<const double> in_scores, std::span<const double> out_scores,
                         int bins) {
  if (bins < 2) throw InvalidArgument("histogram: bins must be >= 2");
  if (in_scores.empty() || out_scores.empty()) throw InvalidArgument("histogram: empty class");

  double lo = in_scores[0], hi = in_scores[0];
  for (double v : in_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : out_scores) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {  // degenerate range: widen so everything lands in one bin
    lo -= 0.5;
    hi += 0.5;
  }

  HistogramTable h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  }
  h.in_density.assign(bins, 0.0);
  h.out_density.assign(bins, 0.0);

  auto fill = [&](std::span<const double> scores, std::vector<double>& dens) {
    for (double v : scores) {
      int b = static_cast<int>(static_cast<double>(bins) * (v - lo) / (hi - lo));
      b = std::clamp(b, 0, bins - 1);
      dens[b] += 1.0;
    }
    for (double& d : dens) d /= static_cast<double>(scores.size());
  };
  fill(in_scores, h.in_density);
  fill(out_scores, h.out_density);
  return h;
}

double overlap_coefficient(const HistogramTable& h) {
  double acc = 0.0;
  for (std::size_t b = 0; b < h.in_density.size(); ++b) {
    acc += std::min(h.in_density[b], h.out_density[b]);
  }
  return acc;
}

std::string histogram_to_csv(const HistogramTable& h) {
  std::ostringstream out;
  out.precision(12);
  out << "bin_lo,bin_hi,in_density,out_density\n";
  for (std::size_t b = 0; b < h.in_density.size(); ++b) {
    out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.in_density[b] << ','
        << h.out_density[b] << '\n';
  }
  return out.str();
}

std::string histogram_to_svg(const HistogramTable& h, const std::string& title) {
  const int bins = static_cast<int>(h.in_density.size());
  const int width = 640, height = 360, margin = 40;
  const double plot_w = width - 2.0 * margin;
  const double plot_h = height - 2.0 * margin;
  double dmax = 1e-12;
  for (int b = 0; b < bins; ++b) {
    dmax = std::max({dmax, h.in_density[b], h.out_density[b]});
  }

  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\">\n";
  s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << title << "</text>\n";
  const double bw = plot_w / bins;
  for (int b = 0; b < bins; ++b) {
    const double x = margin + b * bw;
    const double hi_h = plot_h * h.in_density[b] / dmax;
    const double ho_h = plot_h * h.out_density[b] / dmax;
    s << "<rect x=\"" << x << "\" y=\"" << height - margin - hi_h << "\" width=\"" << bw * 0.45
      << "\" height=\"" << hi_h << "\" fill=\"#4477aa\"/>\n";
    s << "<rect x=\"" << x + bw * 0.5 << "\" y=\"" << height - margin - ho_h << "\" width=\""
      << bw * 0.45 << "\" height=\"" << ho_h << "\" fill=\"#cc4444\"/>\n";
  }
  s << "<text x=\"" << margin << "\" y=\"" << height - 8
    << "\" font-size=\"12\" fill=\"#4477aa\">inliers</text>\n";
  s << "<text x=\"" << margin + 70 << "\" y=\"" << height - 8
    << "\" font-size=\"12\" fill=\"#cc4444\">outliers</text>\n";
  s << "</svg>\n";
  return s.str();
}

namespace {

std::string html_escape(const std::string& in) {
  std::string out;
  out.reserve(in.size());
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

int ramp_channel(double p_original) {
  const double p = std::clamp(p_original, 0.0, 1.0);
  return static_cast<int>(std::lround(255.0 * p));
}

}  // namespace

std::string heatmap_html(const std::vector<ScoreReport>& reports) {
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
      << "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
      << ".doc{margin-bottom:1.5em}.tok{padding:1px 2px;border-radius:2px}"
      << ".hdr{color:#555;font-size:0.9em}</style></head><body>\n";
  out.precision(4);
  for (const auto& r : reports) {
    out << "<div class=\"doc\"><div class=\"hdr\">" << html_escape(r.doc_id) << " (label "
        << html_escape(r.label) << ", score " << r.score << ")</div><div>";
    for (const auto& t : r.per_token) {
      const int c = ramp_channel(t.p_original);
      out << "<span class=\"tok\" style=\"background:rgb(255," << c << ',' << c << ")\" title=\""
          << t.p_original << "\">" << html_escape(t.token) << "</span> ";
    }
    out << "</div></div>\n";
  }
  out << "</body></html>\n";
  return out.str();
}

std::string heatmap_ansi(const ScoreReport& report) {
  std::ostringstream out;
  for (const auto& t : report.per_token) {
    const int c = ramp_channel(t.p_original);
    out << "\x1b[48;2;255;" << c << ';' << c << "m\x1b[30m" << t.token << "\x1b[0m ";
  }
  out << '\n';
  return out.str();
}

}  // namespace date_ad
