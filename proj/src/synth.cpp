#include "date_ad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace date_ad {

namespace {

// Zipf-skewed sampler over ranks 0..n-1: P(r) proportional to 1/(r+1)^s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cumulative_(n) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
      cumulative_[r] = acc;
    }
    for (double& c : cumulative_) c /= acc;
  }

  std::size_t sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return cumulative_.size() - 1;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

constexpr double kZipfExponent = 1.05;

// Deterministic pseudowords built from consonant-vowel syllables. Words are
// 8 letters, lowercase alphabetic, so they survive the default preprocessing
// rules; collisions with stopwords are filtered out.
std::vector<std::string> make_words(std::size_t count, std::uint64_t seed,
                                    std::unordered_set<std::string>& used) {
  static const char* consonants = "bcdfgklmnprstvz";
  static const char* vowels = "aeiou";
  const std::size_t nc = std::strlen(consonants);
  const std::size_t nv = std::strlen(vowels);
  const auto& stop = PreprocessRules::builtin_stopwords();
  std::unordered_set<std::string> stopset(stop.begin(), stop.end());

  Rng rng = make_rng(seed, fnv1a64("synth-words"));
  std::uniform_int_distribution<std::size_t> pick_c(0, nc - 1);
  std::uniform_int_distribution<std::size_t> pick_v(0, nv - 1);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    for (int syl = 0; syl < 4; ++syl) {
      w += consonants[pick_c(rng)];
      w += vowels[pick_v(rng)];
    }
    if (stopset.count(w) || used.count(w)) continue;
    used.insert(w);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

std::vector<TopicSpec> make_topic_specs(const SynthSpec& spec) {
  if (spec.topics < 2) throw InvalidArgument("synth: need at least 2 topics");
  if (spec.words_per_topic < 1) throw InvalidArgument("synth: empty topic vocabulary");
  std::unordered_set<std::string> used;
  // Background words come first so topic/background sets stay disjoint.
  make_words(static_cast<std::size_t>(spec.background_words), spec.seed, used);
  std::vector<TopicSpec> topics;
  for (int t = 0; t < spec.topics; ++t) {
    TopicSpec ts;
    ts.topic_id = "topic" + std::to_string(t);
    ts.vocabulary = make_words(static_cast<std::size_t>(spec.words_per_topic),
                               mix_seed(spec.seed, 1000 + t), used);
    ts.len_min = spec.len_min;
    ts.len_max = spec.len_max;
    ts.background_mix = spec.background_mix;
    topics.push_back(std::move(ts));
  }
  return topics;
}

std::vector<std::string> make_background_vocab(const SynthSpec& spec) {
  std::unordered_set<std::string> used;
  return make_words(static_cast<std::size_t>(spec.background_words), spec.seed, used);
}

std::vector<Document> gen_corpus(const std::vector<TopicSpec>& topics,
                                 const std::vector<std::string>& background_vocab,
                                 int docs_per_topic, std::uint64_t seed) {
  if (topics.size() < 2) throw InvalidArgument("gen_corpus: need at least 2 topics");
  if (docs_per_topic < 1) throw InvalidArgument("gen_corpus: docs_per_topic must be >= 1");
  for (const auto& t : topics) {
    if (t.vocabulary.empty()) throw InvalidArgument("gen_corpus: empty topic vocabulary");
    if (t.background_mix > 0.0 && background_vocab.empty()) {
      throw InvalidArgument("gen_corpus: background mixing requested with empty background");
    }
    if (t.len_min < 1 || t.len_max < t.len_min) {
      throw InvalidArgument("gen_corpus: bad document length range");
    }
  }

  ZipfSampler bg_sampler(std::max<std::size_t>(background_vocab.size(), 1), kZipfExponent);
  std::vector<Document> docs;
  for (std::size_t ti = 0; ti < topics.size(); ++ti) {
    const TopicSpec& topic = topics[ti];
    ZipfSampler topic_sampler(topic.vocabulary.size(), kZipfExponent);
    for (int d = 0; d < docs_per_topic; ++d) {
      Rng rng = make_rng(seed, fnv1a64("synth-doc"), ti, static_cast<std::uint64_t>(d));
      std::uniform_int_distribution<int> pick_len(topic.len_min, topic.len_max);
      std::bernoulli_distribution from_background(topic.background_mix);
      Document doc;
      doc.id = "synth:" + topic.topic_id + ":" + std::to_string(d);
      doc.label = topic.topic_id;
      const int len = pick_len(rng);
      doc.tokens.reserve(len);
      for (int i = 0; i < len; ++i) {
        if (topic.background_mix > 0.0 && from_background(rng)) {
          doc.tokens.push_back(background_vocab[bg_sampler.sample(rng)]);
        } else {
          doc.tokens.push_back(topic.vocabulary[topic_sampler.sample(rng)]);
        }
      }
      docs.push_back(std::move(doc));
    }
  }
  return docs;
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw InvalidArgument("synth: train_fraction must lie in (0, 1)");
  }
  auto topics = make_topic_specs(spec);
  auto background = make_background_vocab(spec);
  auto docs = gen_corpus(topics, background, spec.docs_per_topic, spec.seed);

  Dataset ds;
  const int train_n = static_cast<int>(std::lround(spec.train_fraction * spec.docs_per_topic));
  for (std::size_t ti = 0; ti < topics.size(); ++ti) {
    for (int d = 0; d < spec.docs_per_topic; ++d) {
      auto& doc = docs[ti * spec.docs_per_topic + d];
      if (d < train_n) {
        ds.train_docs.push_back(std::move(doc));
      } else {
        ds.test_docs.push_back(std::move(doc));
      }
    }
  }
  return ds;
}

std::pair<std::string, std::string> write_synth_csv(const SynthSpec& spec,
                                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  Dataset ds = synth_dataset(spec);
  auto write = [&](const std::string& name, const std::vector<Document>& docs) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& d : docs) {
      std::string text;
      for (const auto& t : d.tokens) {
        if (!text.empty()) text += ' ';
        text += t;
      }
      out << csv_escape(d.label) << ",," << csv_escape(text) << '\n';
    }
    return path;
  };
  return {write("train.csv", ds.train_docs), write("test.csv", ds.test_docs)};
}

}  // namespace date_ad
