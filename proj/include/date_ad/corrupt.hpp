#pragma once

#include <cstdint>
#include <vector>

#include "date_ad/mask.hpp"
#include "date_ad/tape.hpp"
#include "date_ad/text.hpp"

namespace date_ad {

// A mask-pattern corruption of one TokenSequence. RTD labels follow the mask:
// rtd_targets[i] = 1 exactly where the pattern bit is set on a real (non-pad)
// position, even if the replacement happens to equal the original token.
struct CorruptedSequence {
  std::vector<std::int32_t> ids;        // x-tilde, full padded length
  int pattern_index = -1;               // 0-based index into the PatternSet
  std::vector<std::uint8_t> rtd_targets;  // 1 = replaced
  const TokenSequence* source = nullptr;
  std::int32_t attention_len = 0;
};

// x-hat: masked positions hold [MASK]. Mask bits over padding are inert.
TokenSequence apply_mask(const TokenSequence& x, const MaskPattern& m);

// Final-configuration corruption: replacements drawn uniformly from the
// non-special vocabulary entries.
CorruptedSequence random_replace(const TokenSequence& x_hat, const MaskPattern& m,
                                 const TokenSequence& source, std::int32_t vocab_size,
                                 Rng& rng);

// Learned-generator corruption: masked positions sampled from the generator's
// per-position distribution over the vocabulary. `probs` has one row per
// position of the cropped sequence (rows 0..attention_len-1).
template <typename S>
CorruptedSequence mlm_replace(const TokenSequence& x_hat, const MaskPattern& m,
                              const TokenSequence& source, const ad::Mat<S>& probs, Rng& rng) {
  if (m.size() != x_hat.t_max()) throw InvalidArgument("mlm_replace: pattern length mismatch");
  if (probs.rows < x_hat.attention_len) {
    throw InvalidArgument("mlm_replace: probability rows do not cover the sequence");
  }
  CorruptedSequence out;
  out.ids = source.ids;
  out.rtd_targets.assign(x_hat.t_max(), 0);
  out.source = &source;
  out.attention_len = x_hat.attention_len;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::int32_t i = 0; i < x_hat.t_max(); ++i) {
    if (!m.bits[i] || i >= x_hat.attention_len) continue;
    out.rtd_targets[i] = 1;
    const double u = unit(rng);
    double acc = 0.0;
    std::int32_t chosen = probs.cols - 1;
    for (std::int32_t j = 0; j < probs.cols; ++j) {
      acc += probs(i, j);
      if (u < acc) {
        chosen = j;
        break;
      }
    }
    out.ids[i] = chosen;
  }
  return out;
}

}  // namespace date_ad
