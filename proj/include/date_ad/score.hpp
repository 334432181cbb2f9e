#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "date_ad/corrupt.hpp"
#include "date_ad/mask.hpp"
#include "date_ad/model.hpp"
#include "date_ad/text.hpp"

namespace date_ad {

enum class ScoreKind { kPlRtd, kPlRmd, kMp, kNe };

ScoreKind score_kind_from_string(const std::string& s);
std::string to_string(ScoreKind k);

struct TokenScore {
  std::string token;
  double p_original = 0.0;
};

// Higher score means more normal for every kind.
struct ScoreReport {
  std::string doc_id;
  std::string label;
  double score = 0.0;
  ScoreKind kind = ScoreKind::kPlRtd;
  std::vector<TokenScore> per_token;  // populated for pl_rtd
};

// Plain arithmetic core of the PL score: mean of per-token probabilities.
double aggregate_pl(const std::vector<double>& per_token_p_original);

// One uncorrupted forward pass; score is the mean P_D(original) over content
// positions (excluding [CLS] and padding).
template <typename S>
ScoreReport pl_rtd(const TokenSequence& x, const Discriminator<S>& model, const Vocab& vocab) {
  if (x.content_len() < 1) throw InvalidArgument("pl_rtd: zero content tokens");
  ad::Mat<S> probs = model.rtd_probs(x.ids, x.attention_len);
  ScoreReport rep;
  rep.doc_id = x.doc_id;
  rep.label = x.label;
  rep.kind = ScoreKind::kPlRtd;
  std::vector<double> per_token;
  per_token.reserve(x.content_len());
  for (int i = 1; i < x.attention_len; ++i) {
    const double p = probs(i, Discriminator<S>::kOriginalClass);
    per_token.push_back(p);
    rep.per_token.push_back({vocab.token(x.ids[i]), p});
  }
  rep.score = aggregate_pl(per_token);
  return rep;
}

// K corrupted passes through the discriminator; per pass k the probability of
// the k-th pattern is read from the RMD head.
struct RmdPassScores {
  double pl = 0.0;  // mean P_M[k]
  double mp = 0.0;  // mean max_j P_M[j]
  double ne = 0.0;  // mean sum_j P_M[j] log P_M[j]
};

template <typename S>
RmdPassScores rmd_pass_scores(const TokenSequence& x, const Discriminator<S>& model,
                              const PatternSet& patterns, std::int32_t vocab_size, Rng& rng) {
  if (patterns.k() < 1) throw InvalidArgument("rmd scores: empty pattern set");
  RmdPassScores out;
  for (int k = 0; k < patterns.k(); ++k) {
    const MaskPattern& m = patterns.patterns[k];
    CorruptedSequence corr = random_replace(apply_mask(x, m), m, x, vocab_size, rng);
    ad::Mat<S> pm = model.rmd_probs(corr.ids, corr.attention_len);
    double mx = 0.0, neg_ent = 0.0;
    for (int j = 0; j < pm.cols; ++j) {
      const double p = pm(0, j);
      mx = std::max(mx, p);
      if (p > 0.0) neg_ent += p * std::log(p);
    }
    out.pl += pm(0, k);
    out.mp += mx;
    out.ne += neg_ent;
  }
  out.pl /= patterns.k();
  out.mp /= patterns.k();
  out.ne /= patterns.k();
  return out;
}

template <typename S>
double pl_rmd(const TokenSequence& x, const Discriminator<S>& model, const PatternSet& patterns,
              std::int32_t vocab_size, Rng& rng) {
  return rmd_pass_scores(x, model, patterns, vocab_size, rng).pl;
}

template <typename S>
double mp_score(const TokenSequence& x, const Discriminator<S>& model, const PatternSet& patterns,
                std::int32_t vocab_size, Rng& rng) {
  return rmd_pass_scores(x, model, patterns, vocab_size, rng).mp;
}

template <typename S>
double ne_score(const TokenSequence& x, const Discriminator<S>& model, const PatternSet& patterns,
                std::int32_t vocab_size, Rng& rng) {
  return rmd_pass_scores(x, model, patterns, vocab_size, rng).ne;
}

template <typename S>
ScoreReport score_document(const TokenSequence& x, const Discriminator<S>& model,
                           const PatternSet& patterns, const Vocab& vocab, ScoreKind kind,
                           std::uint64_t seed) {
  if (kind == ScoreKind::kPlRtd) return pl_rtd(x, model, vocab);
  Rng rng = make_rng(seed, fnv1a64("score"), fnv1a64(x.doc_id));
  ScoreReport rep;
  rep.doc_id = x.doc_id;
  rep.label = x.label;
  rep.kind = kind;
  RmdPassScores s = rmd_pass_scores(x, model, patterns, vocab.size(), rng);
  switch (kind) {
    case ScoreKind::kPlRmd: rep.score = s.pl; break;
    case ScoreKind::kMp: rep.score = s.mp; break;
    case ScoreKind::kNe: rep.score = s.ne; break;
    default: break;
  }
  return rep;
}

// Scores a set of documents, optionally in parallel (read-only model).
// Documents with no content tokens are skipped.
std::vector<ScoreReport> score_all(const std::vector<TokenSequence>& docs,
                                   const Discriminator<float>& model, const PatternSet& patterns,
                                   const Vocab& vocab, ScoreKind kind, std::uint64_t seed,
                                   int threads);

std::string scores_to_csv(const std::vector<ScoreReport>& reports);
std::string per_token_json(const std::vector<ScoreReport>& reports);

}  // namespace date_ad
