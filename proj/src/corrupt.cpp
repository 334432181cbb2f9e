#include "date_ad/corrupt.hpp"

namespace date_ad {

TokenSequence apply_mask(const TokenSequence& x, const MaskPattern& m) {
  if (m.size() != x.t_max()) throw InvalidArgument("apply_mask: pattern length mismatch");
  TokenSequence out = x;
  for (std::int32_t i = 0; i < x.t_max(); ++i) {
    if (m.bits[i] && i < x.attention_len) out.ids[i] = Vocab::kMask;
  }
  return out;
}

CorruptedSequence random_replace(const TokenSequence& x_hat, const MaskPattern& m,
                                 const TokenSequence& source, std::int32_t vocab_size,
                                 Rng& rng) {
  if (m.size() != x_hat.t_max()) throw InvalidArgument("random_replace: pattern length mismatch");
  if (vocab_size <= Vocab::kNumSpecial) {
    throw InvalidArgument("random_replace: vocabulary has no non-special entries");
  }
  CorruptedSequence out;
  out.ids = source.ids;
  out.rtd_targets.assign(x_hat.t_max(), 0);
  out.source = &source;
  out.attention_len = x_hat.attention_len;
  std::uniform_int_distribution<std::int32_t> pick(Vocab::kNumSpecial, vocab_size - 1);
  for (std::int32_t i = 0; i < x_hat.t_max(); ++i) {
    if (!m.bits[i] || i >= x_hat.attention_len) continue;
    out.rtd_targets[i] = 1;
    out.ids[i] = pick(rng);
  }
  return out;
}

}  // namespace date_ad
