#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "date_ad/checkpoint.hpp"
#include "date_ad/config.hpp"
#include "date_ad/experiment.hpp"
#include "date_ad/mask.hpp"
#include "date_ad/metrics.hpp"
#include "date_ad/score.hpp"
#include "date_ad/synth.hpp"

namespace py = pybind11;
using namespace date_ad;

namespace {

std::vector<std::string> py_preprocess(const std::string& text, bool lowercase,
                                       bool strip_punctuation, bool strip_numbers,
                                       bool strip_stopwords, int min_word_len) {
  PreprocessRules rules;
  rules.lowercase = lowercase;
  rules.strip_punctuation = strip_punctuation;
  rules.strip_numbers = strip_numbers;
  rules.strip_stopwords = strip_stopwords;
  rules.min_word_len = min_word_len;
  return preprocess(text, rules);
}

std::vector<std::string> py_gen_patterns(int t_max, double mask_fraction, int k,
                                         std::uint64_t seed) {
  PatternSet set = gen_patterns(t_max, mask_fraction, k, seed);
  std::vector<std::string> out;
  for (const auto& p : set.patterns) out.push_back(p.to_bitstring());
  return out;
}

py::tuple py_collision_bound(int s, int m, int p, int n) {
  mpq_class ub = collision_bound(BoundQuery{s, m, p, n});
  return py::make_tuple(rational_to_string(ub), rational_to_double(ub));
}

py::tuple py_r_ratio(int s, int m, int p) {
  mpq_class r = r_ratio(s, m, p);
  return py::make_tuple(rational_to_string(r), rational_to_double(r));
}

py::dict metrics_to_dict(const MetricReport& m) {
  py::dict d;
  d["auroc"] = m.auroc;
  d["aupr_in"] = m.aupr_in;
  d["aupr_out"] = m.aupr_out;
  d["n_in"] = m.n_in;
  d["n_out"] = m.n_out;
  return d;
}

py::dict py_run_experiment(const std::string& config_json) {
  RunConfig cfg = RunConfig::from_json(config_json);
  ExperimentResult res = run_experiment(cfg);
  py::dict d = metrics_to_dict(res.metrics);
  d["config_hash"] = res.config_hash;
  d["checkpoint"] = res.checkpoint_path;
  d["overlap_initial"] = res.overlap_initial;
  d["overlap_final"] = res.overlap_final;
  return d;
}

py::list py_score_file(const std::string& checkpoint_path, const std::string& csv_path,
                       const std::string& kind, std::uint64_t seed) {
  LoadedModel<float> model = load_checkpoint(checkpoint_path);
  PreprocessRules rules;
  std::vector<Document> docs = load_csv(csv_path, rules, "doc:");
  std::vector<TokenSequence> seqs;
  for (const auto& d : docs) {
    if (d.tokens.empty()) continue;
    TokenSequence seq = encode(d.tokens, model.vocab, model.patterns.t_max);
    seq.label = d.label;
    seq.doc_id = d.id;
    seqs.push_back(std::move(seq));
  }
  auto reports = score_all(seqs, *model.disc, model.patterns, model.vocab,
                           score_kind_from_string(kind), seed, 0);
  py::list out;
  for (const auto& r : reports) {
    py::dict d;
    d["doc_id"] = r.doc_id;
    d["label"] = r.label;
    d["score"] = r.score;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-supervised text anomaly detection (RMD/RTD discriminator)";

  m.def("preprocess", &py_preprocess, py::arg("text"), py::arg("lowercase") = true,
        py::arg("strip_punctuation") = true, py::arg("strip_numbers") = true,
        py::arg("strip_stopwords") = true, py::arg("min_word_len") = 3,
        "Word-level preprocessing: returns the kept tokens in order");

  m.def("gen_patterns", &py_gen_patterns, py::arg("t_max"), py::arg("mask_fraction"),
        py::arg("k"), py::arg("seed") = 0,
        "K distinct fixed mask patterns as bitstrings (position 0 never masked)");

  m.def("r_ratio", &py_r_ratio, py::arg("s"), py::arg("m"), py::arg("p"),
        "Exact r = C(S-p, M-p)/C(S, M) as (fraction string, float)");

  m.def("collision_bound", &py_collision_bound, py::arg("s"), py::arg("m"), py::arg("p"),
        py::arg("n"), "Exact UB_N = C(N,2) C(S,p) r^2 as (fraction string, float)");

  m.def("empirical_collision_rate", &empirical_collision_rate, py::arg("s"), py::arg("m"),
        py::arg("p"), py::arg("n"), py::arg("trials"), py::arg("seed") = 0,
        "Monte-Carlo fraction of trials with a >=p overlap among N sampled patterns");

  m.def(
      "auroc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auroc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"),
      "Probability a random inlier (label 1) outscores a random outlier; ties count 0.5");

  m.def(
      "aupr",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::string& positive) {
        PositiveClass pc;
        if (positive == "inlier") {
          pc = PositiveClass::kInlier;
        } else if (positive == "outlier") {
          pc = PositiveClass::kOutlier;
        } else {
          throw InvalidArgument("positive must be 'inlier' or 'outlier'");
        }
        return aupr(scores, labels, pc);
      },
      py::arg("scores"), py::arg("labels"), py::arg("positive") = "inlier",
      "Area under precision-recall with step-wise interpolation");

  m.def(
      "write_synth_corpus",
      [](const std::string& out_dir, int topics, int docs_per_topic, int words_per_topic,
         int background_words, double background_mix, std::uint64_t seed) {
        SynthSpec spec;
        spec.topics = topics;
        spec.docs_per_topic = docs_per_topic;
        spec.words_per_topic = words_per_topic;
        spec.background_words = background_words;
        spec.background_mix = background_mix;
        spec.seed = seed;
        auto [train, test] = write_synth_csv(spec, out_dir);
        return py::make_tuple(train, test);
      },
      py::arg("out_dir"), py::arg("topics") = 2, py::arg("docs_per_topic") = 500,
      py::arg("words_per_topic") = 300, py::arg("background_words") = 150,
      py::arg("background_mix") = 0.2, py::arg("seed") = 0,
      "Write train.csv/test.csv for a synthetic topic corpus; returns the paths");

  m.def("run_experiment", &py_run_experiment, py::arg("config_json"),
        "Run the full train+eval pipeline from a JSON config string; returns metrics");

  m.def("score_file", &py_score_file, py::arg("checkpoint"), py::arg("csv_path"),
        py::arg("kind") = "pl_rtd", py::arg("seed") = 0,
        "Score a CSV of documents with a trained checkpoint");

  m.def("default_config", []() {
    RunConfig cfg;
    cfg.inlier_class = "<set me>";
    return cfg.to_json();
  });
}
