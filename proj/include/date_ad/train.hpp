#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "date_ad/corrupt.hpp"
#include "date_ad/mask.hpp"
#include "date_ad/model.hpp"
#include "date_ad/tape.hpp"
#include "date_ad/text.hpp"

namespace date_ad {

struct TrainConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double lambda_rtd = 50.0;  // RTD loss weight
  double mu_rmd = 100.0;     // RMD loss weight
  int batch_size = 16;
  int max_steps = 5000;
  int warmup_steps = 100;  // linear warmup, then constant lr
  double clip_norm = 1.0;  // <= 0 disables clipping
  GeneratorMode generator = GeneratorMode::kRandom;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  int log_every = 10;
  int eval_every = 0;  // 0 disables periodic validation

  void validate() const {
    if (lr <= 0) throw InvalidArgument("train.lr must be positive");
    if (batch_size < 1) throw InvalidArgument("train.batch_size must be >= 1");
    if (max_steps < 0) throw InvalidArgument("train.max_steps must be >= 0");
    if (warmup_steps < 0) throw InvalidArgument("train.warmup_steps must be >= 0");
    if (lambda_rtd < 0 || mu_rmd < 0) throw InvalidArgument("train loss weights must be >= 0");
    if (log_every < 1) throw InvalidArgument("train.log_every must be >= 1");
  }
};

// Per-step loss values. The identity
//   l_total = mu*l_rmd + l_mlm + lambda*l_rtd
// is maintained in double precision at every logged step.
struct LossBreakdown {
  long step = 0;
  double l_rmd = 0.0;
  double l_rtd = 0.0;
  double l_mlm = 0.0;
  double l_total = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  std::optional<double> val_auroc;
};

// ---- pure loss forms (operate on concrete probabilities) ----

// -log P_M[true_index], log clamped at 1e-12.
double loss_rmd(const ad::Mat<double>& pattern_probs, int true_index);

// Mean over content positions (excluding [CLS] and padding) of -log P_D(target).
// `probs` rows are {original, replaced} pairs over the full padded sequence.
double loss_rtd(const ad::Mat<double>& probs, const std::vector<std::uint8_t>& rtd_targets,
                int attention_len);

// Mean over masked content positions of -log P_G(original token).
double loss_mlm(const ad::Mat<double>& vocab_probs, const std::vector<std::int32_t>& original_ids,
                const std::vector<std::uint8_t>& mask, int attention_len);

// ---- graph building (used by the trainer and the gradient checks) ----

template <typename S>
struct DocGraph {
  ad::VarId l_rmd = ad::kNoVar;
  ad::VarId l_rtd = ad::kNoVar;
  ad::VarId l_mlm = ad::kNoVar;  // kNoVar when no masked content or random mode
  ad::VarId total = ad::kNoVar;  // mu*l_rmd + l_mlm + lambda*l_rtd
};

// Samples a pattern index and produces the corrupted input for one document.
template <typename S>
CorruptedSequence corrupt_for_training(const TokenSequence& x, const PatternSet& patterns,
                                       int pattern_idx, const Generator<S>* gen,
                                       std::int32_t vocab_size, Rng& rng) {
  const MaskPattern& m = patterns.patterns.at(pattern_idx);
  TokenSequence x_hat = apply_mask(x, m);
  CorruptedSequence corr;
  if (gen == nullptr) {
    corr = random_replace(x_hat, m, x, vocab_size, rng);
  } else {
    ad::Mat<S> probs = gen->mlm_probs(x_hat.ids, x_hat.attention_len, false);
    corr = mlm_replace(x_hat, m, x, probs, rng);
  }
  corr.pattern_index = pattern_idx;
  return corr;
}

// Builds the full per-document loss graph on one tape: discriminator RMD+RTD
// on the corrupted input, plus the generator's MLM loss on the masked input
// when a learned generator is used. Replaced tokens enter the discriminator
// as plain ids, so no gradient flows from the discriminator into the
// generator (only the MLM term trains it, as in ELECTRA).
template <typename S>
DocGraph<S> build_doc_graph(ad::Tape<S>& tape, const Discriminator<S>& disc,
                            const Generator<S>* gen, const TokenSequence& x,
                            const PatternSet& patterns, const CorruptedSequence& corr,
                            double mu, double lambda, bool train, Rng& rng) {
  DocGraph<S> g;
  const int len = corr.attention_len;
  if (len < 2) throw InvalidArgument("build_doc_graph: document has no content tokens");

  if (gen != nullptr) {
    const MaskPattern& m = patterns.patterns.at(corr.pattern_index);
    TokenSequence x_hat = apply_mask(x, m);
    bool any_masked = false;
    std::vector<int> targets(len, 0);
    std::vector<S> weights(len, S(0));
    for (int i = 1; i < len; ++i) {
      if (m.bits[i]) {
        targets[i] = x.ids[i];
        weights[i] = S(1);
        any_masked = true;
      }
    }
    if (any_masked) {
      ad::VarId logits = gen->mlm_logits(tape, x_hat.ids, len, train, rng);
      g.l_mlm = tape.nll_rows(logits, std::move(targets), std::move(weights));
    }
  }

  ad::VarId h = disc.encode(tape, corr.ids, len, train, rng);
  ad::VarId rmd = disc.rmd_logits(tape, h);
  g.l_rmd = tape.nll_rows(rmd, {corr.pattern_index}, {S(1)});

  ad::VarId rtd = disc.rtd_logits(tape, h);
  std::vector<int> rtd_cls(len, Discriminator<S>::kOriginalClass);
  std::vector<S> rtd_w(len, S(0));
  for (int i = 1; i < len; ++i) {  // Eq. for RTD excludes the [CLS] position
    rtd_cls[i] = corr.rtd_targets[i] ? Discriminator<S>::kReplacedClass
                                     : Discriminator<S>::kOriginalClass;
    rtd_w[i] = S(1);
  }
  g.l_rtd = tape.nll_rows(rtd, std::move(rtd_cls), std::move(rtd_w));

  g.total = tape.add(tape.scale(g.l_rmd, static_cast<S>(mu)),
                     tape.scale(g.l_rtd, static_cast<S>(lambda)));
  if (g.l_mlm != ad::kNoVar) g.total = tape.add(g.total, g.l_mlm);
  return g;
}

// ---- optimizer ----

// AdamW with the amsgrad variant. Optimizer state is kept in double;
// parameters stay in the model's scalar type.
template <typename S>
class AdamW {
 public:
  AdamW(std::vector<Param<S>*> params, const TrainConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (auto* p : params_) {
      states_.push_back(State{std::vector<double>(p->value.size(), 0.0),
                              std::vector<double>(p->value.size(), 0.0),
                              std::vector<double>(p->value.size(), 0.0)});
    }
  }

  double learning_rate(long step) const {
    if (cfg_.warmup_steps > 0 && step <= cfg_.warmup_steps) {
      return cfg_.lr * static_cast<double>(step) / cfg_.warmup_steps;
    }
    return cfg_.lr;
  }

  // Applies one update from the gradients accumulated in the params.
  void step() {
    ++t_;
    const double lr = learning_rate(t_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      Param<S>* p = params_[pi];
      State& st = states_[pi];
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad.v[i];
        st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
        st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double vhat = st.v[i] / bc2;
        if (vhat > st.vmax[i]) st.vmax[i] = vhat;
        const double update = (st.m[i] / bc1) / (std::sqrt(st.vmax[i]) + cfg_.adam_eps) +
                              cfg_.weight_decay * static_cast<double>(p->value.v[i]);
        p->value.v[i] = static_cast<S>(p->value.v[i] - lr * update);
      }
    }
  }

  long steps_taken() const { return t_; }

 private:
  struct State {
    std::vector<double> m, v, vmax;
  };
  std::vector<Param<S>*> params_;
  TrainConfig cfg_;
  std::vector<State> states_;
  long t_ = 0;
};

// ---- trainer ----

template <typename S>
class Trainer {
 public:
  Trainer(Discriminator<S>& disc, Generator<S>* gen, const PatternSet& patterns,
          const TrainConfig& cfg)
      : disc_(disc),
        gen_(gen),
        patterns_(patterns),
        cfg_(cfg),
        optimizer_(collect_params(disc, gen), cfg) {
    cfg_.validate();
    if (patterns_.k() < 1) throw InvalidArgument("trainer: empty pattern set");
  }

  // One optimization step over a sampled batch. Deterministic given
  // (config seed, step number) and the current parameters.
  LossBreakdown train_step(const std::vector<TokenSequence>& train_set);

  using LogHook = std::function<void(const LossBreakdown&)>;
  using EvalHook = std::function<double()>;  // e.g. validation AUROC

  // Runs max_steps updates; invokes on_log every log_every steps (and at the
  // final step). eval() is attached to the breakdown when eval_every hits.
  void fit(const std::vector<TokenSequence>& train_set, const LogHook& on_log = nullptr,
           const EvalHook& eval = nullptr);

  long step() const { return step_; }

 private:
  static std::vector<Param<S>*> collect_params(Discriminator<S>& disc, Generator<S>* gen) {
    auto params = disc.store().all();
    if (gen != nullptr) {
      auto g = gen->store().all();
      params.insert(params.end(), g.begin(), g.end());
    }
    return params;
  }

  Discriminator<S>& disc_;
  Generator<S>* gen_;
  PatternSet patterns_;
  TrainConfig cfg_;
  AdamW<S> optimizer_;
  long step_ = 0;
};

extern template class Trainer<float>;
extern template class AdamW<float>;
extern template class Trainer<double>;
extern template class AdamW<double>;

}  // namespace date_ad
