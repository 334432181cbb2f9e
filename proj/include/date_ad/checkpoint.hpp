#pragma once

#include <memory>
#include <string>

#include "date_ad/mask.hpp"
#include "date_ad/model.hpp"
#include "date_ad/text.hpp"

namespace date_ad {

// Self-contained archive: JSON header (encoder config, pattern set, vocab,
// config hash, tensor directory) followed by raw little-endian float32 data.
inline constexpr char kCheckpointMagic[8] = {'D', 'A', 'T', 'E', 'A', 'D', '0', '1'};

struct CheckpointMeta {
  std::string config_hash;     // hex fingerprint of the producing RunConfig
  std::string stopword_hash;   // hex fingerprint of the stopword list
  GeneratorMode generator = GeneratorMode::kRandom;
};

template <typename S>
struct LoadedModel {
  std::unique_ptr<Discriminator<S>> disc;
  std::unique_ptr<Generator<S>> gen;  // present only for learned-generator checkpoints
  PatternSet patterns;
  Vocab vocab;
  CheckpointMeta meta;
};

void save_checkpoint(const std::string& path, const Discriminator<float>& disc,
                     const Generator<float>* gen, const PatternSet& patterns, const Vocab& vocab,
                     const CheckpointMeta& meta);

LoadedModel<float> load_checkpoint(const std::string& path);

}  // namespace date_ad
