#pragma once

#include <cstdint>
#include <string>

#include "date_ad/model.hpp"
#include "date_ad/score.hpp"
#include "date_ad/text.hpp"
#include "date_ad/train.hpp"

namespace date_ad {

struct DatasetConfig {
  std::string format = "csv";  // csv | dirtree
  std::string train_path;
  std::string test_path;
};

struct PatternConfig {
  int k = 50;
  double mask_fraction = 0.5;
};

struct VocabConfig {
  int max_size = 30000;
  int min_freq = 2;
};

// One experiment, fully serializable; its hash is recorded in every artifact
// it produces.
struct RunConfig {
  DatasetConfig dataset;
  std::string inlier_class;
  double contamination = 0.0;
  std::uint64_t seed = 0;
  PreprocessRules preprocess;
  VocabConfig vocab;
  int t_max = 128;
  PatternConfig patterns;
  EncoderConfig model;
  TrainConfig train;
  ScoreKind score_kind = ScoreKind::kPlRtd;
  int histogram_bins = 20;
  std::string output_dir = "runs/out";

  void validate() const;  // throws InvalidArgument naming the offending field
  std::string to_json(int indent = 2) const;
  static RunConfig from_json(const std::string& json_text);
  static RunConfig from_file(const std::string& path);

  // Stable fingerprint of the canonical serialized form.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

}  // namespace date_ad
