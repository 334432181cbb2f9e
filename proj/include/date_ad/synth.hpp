#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "date_ad/text.hpp"

namespace date_ad {

// One synthetic topic. Topic vocabularies are disjoint across topics; the
// shared background vocabulary is mixed in at the given rate.
struct TopicSpec {
  std::string topic_id;
  std::vector<std::string> vocabulary;
  int len_min = 20;
  int len_max = 60;
  double background_mix = 0.2;
};

// Token-wise sampling from topic/background vocabularies with Zipf-skewed
// frequencies, deterministic by seed.
std::vector<Document> gen_corpus(const std::vector<TopicSpec>& topics,
                                 const std::vector<std::string>& background_vocab,
                                 int docs_per_topic, std::uint64_t seed);

// Deterministic pseudoword vocabularies (disjoint across topics and from the
// background set; all words survive the default preprocessing rules).
struct SynthSpec {
  int topics = 2;
  int words_per_topic = 300;
  int background_words = 150;
  int docs_per_topic = 500;
  int len_min = 20;
  int len_max = 60;
  double background_mix = 0.2;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

std::vector<TopicSpec> make_topic_specs(const SynthSpec& spec);
std::vector<std::string> make_background_vocab(const SynthSpec& spec);

// Full dataset with a per-topic train/test division.
Dataset synth_dataset(const SynthSpec& spec);

// Writes train.csv / test.csv in the (class,title,description) layout the
// corpus loaders ingest. Returns the two file paths.
std::pair<std::string, std::string> write_synth_csv(const SynthSpec& spec,
                                                    const std::string& out_dir);

}  // namespace date_ad
