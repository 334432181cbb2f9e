#include "date_ad/train.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace date_ad {

double loss_rmd(const ad::Mat<double>& pattern_probs, int true_index) {
  if (pattern_probs.rows != 1 || pattern_probs.cols < 1) {
    throw InvalidArgument("loss_rmd: expected a 1xK probability row");
  }
  if (true_index < 0 || true_index >= pattern_probs.cols) {
    throw InvalidArgument("loss_rmd: pattern index out of range");
  }
  return -std::log(std::max(pattern_probs(0, true_index), 1e-12));
}

double loss_rtd(const ad::Mat<double>& probs, const std::vector<std::uint8_t>& rtd_targets,
                int attention_len) {
  if (probs.cols != 2) throw InvalidArgument("loss_rtd: expected Nx2 probabilities");
  if (static_cast<int>(rtd_targets.size()) < attention_len) {
    throw InvalidArgument("loss_rtd: targets shorter than sequence");
  }
  if (attention_len < 2) throw InvalidArgument("loss_rtd: zero content positions");
  double acc = 0.0;
  int count = 0;
  for (int i = 1; i < attention_len; ++i) {
    const double p = rtd_targets[i] ? probs(i, 1) : probs(i, 0);
    acc += -std::log(std::max(p, 1e-12));
    ++count;
  }
  return acc / count;
}

double loss_mlm(const ad::Mat<double>& vocab_probs, const std::vector<std::int32_t>& original_ids,
                const std::vector<std::uint8_t>& mask, int attention_len) {
  if (static_cast<int>(original_ids.size()) < attention_len ||
      static_cast<int>(mask.size()) < attention_len) {
    throw InvalidArgument("loss_mlm: ids/mask shorter than sequence");
  }
  double acc = 0.0;
  int count = 0;
  for (int i = 1; i < attention_len; ++i) {
    if (!mask[i]) continue;
    acc += -std::log(std::max(vocab_probs(i, original_ids[i]), 1e-12));
    ++count;
  }
  if (count == 0) throw InvalidArgument("loss_mlm: empty mask");
  return acc / count;
}

namespace {

template <typename S>
struct DocResult {
  double l_rmd = 0.0;
  double l_rtd = 0.0;
  double l_mlm = 0.0;
  bool has_mlm = false;
  std::vector<std::pair<Param<S>*, ad::Mat<S>>> grads;
  std::string error;
};

}  // namespace

template <typename S>
LossBreakdown Trainer<S>::train_step(const std::vector<TokenSequence>& train_set) {
  if (train_set.empty()) throw InvalidArgument("train_step: empty train set");
  const long step = step_ + 1;
  const int batch = cfg_.batch_size;

  // Batch composition and per-document pattern choices come from a
  // step-scoped stream so the step is a pure function of (params, seed, step).
  Rng step_rng = make_rng(cfg_.seed, fnv1a64("batch"), static_cast<std::uint64_t>(step));
  std::vector<const TokenSequence*> docs(batch);
  std::vector<int> pattern_choice(batch);
  std::uniform_int_distribution<std::size_t> pick_doc(0, train_set.size() - 1);
  std::uniform_int_distribution<int> pick_pattern(0, patterns_.k() - 1);
  for (int b = 0; b < batch; ++b) {
    docs[b] = &train_set[pick_doc(step_rng)];
    pattern_choice[b] = pick_pattern(step_rng);
  }

  std::vector<DocResult<S>> results(batch);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int b = next.fetch_add(1); b < batch; b = next.fetch_add(1)) {
      DocResult<S>& res = results[b];
      try {
        Rng doc_rng = make_rng(cfg_.seed, fnv1a64("doc"), static_cast<std::uint64_t>(step),
                               static_cast<std::uint64_t>(b));
        CorruptedSequence corr =
            corrupt_for_training(*docs[b], patterns_, pattern_choice[b], gen_,
                                 disc_.config().vocab_size, doc_rng);
        ad::Tape<S> tape;
        DocGraph<S> g = build_doc_graph(tape, disc_, gen_, *docs[b], patterns_, corr,
                                        cfg_.mu_rmd, cfg_.lambda_rtd, /*train=*/true, doc_rng);
        tape.backward(g.total);
        res.l_rmd = tape.scalar(g.l_rmd);
        res.l_rtd = tape.scalar(g.l_rtd);
        if (g.l_mlm != ad::kNoVar) {
          res.l_mlm = tape.scalar(g.l_mlm);
          res.has_mlm = true;
        }
        res.grads = tape.take_param_grads();
      } catch (const std::exception& e) {
        res.error = e.what();
      }
    }
  };

  int n_threads = cfg_.threads > 0 ? cfg_.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, batch));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& res : results) {
    if (!res.error.empty()) throw NumericError("train_step: " + res.error);
  }

  // Deterministic reduce: document order, then registration order.
  for (auto* p : disc_.store().all()) p->zero_grad();
  if (gen_ != nullptr) {
    for (auto* p : gen_->store().all()) p->zero_grad();
  }
  double sum_rmd = 0.0, sum_rtd = 0.0, sum_mlm = 0.0;
  for (auto& res : results) {
    sum_rmd += res.l_rmd;
    sum_rtd += res.l_rtd;
    sum_mlm += res.l_mlm;
    for (auto& [p, gm] : res.grads) p->grad.map() += gm.map();
    res.grads.clear();
  }
  const double inv_batch = 1.0 / batch;

  double sq_norm = 0.0;
  auto all_params = collect_params(disc_, gen_);
  for (auto* p : all_params) {
    for (auto& g : p->grad.v) {
      g = static_cast<S>(g * inv_batch);
      sq_norm += static_cast<double>(g) * g;
    }
  }
  const double grad_norm = std::sqrt(sq_norm);
  if (!std::isfinite(grad_norm)) {
    std::ostringstream msg;
    msg << "train_step " << step << ": non-finite gradients (l_rmd=" << sum_rmd * inv_batch
        << " l_rtd=" << sum_rtd * inv_batch << " l_mlm=" << sum_mlm * inv_batch << ")";
    throw NumericError(msg.str());
  }
  if (cfg_.clip_norm > 0.0 && grad_norm > cfg_.clip_norm) {
    const S scale = static_cast<S>(cfg_.clip_norm / grad_norm);
    for (auto* p : all_params) {
      for (auto& g : p->grad.v) g *= scale;
    }
  }

  optimizer_.step();
  step_ = step;

  LossBreakdown out;
  out.step = step;
  out.l_rmd = sum_rmd * inv_batch;
  out.l_rtd = sum_rtd * inv_batch;
  out.l_mlm = sum_mlm * inv_batch;
  out.l_total = cfg_.mu_rmd * out.l_rmd + out.l_mlm + cfg_.lambda_rtd * out.l_rtd;
  out.lr = optimizer_.learning_rate(step);
  out.grad_norm = grad_norm;
  if (!std::isfinite(out.l_total)) {
    std::ostringstream msg;
    msg << "train_step " << step << ": non-finite loss (l_rmd=" << out.l_rmd
        << " l_rtd=" << out.l_rtd << " l_mlm=" << out.l_mlm << ")";
    throw NumericError(msg.str());
  }
  return out;
}

template <typename S>
void Trainer<S>::fit(const std::vector<TokenSequence>& train_set, const LogHook& on_log,
                     const EvalHook& eval) {
  if (train_set.empty()) throw InvalidArgument("fit: empty train set");
  for (long s = 1; s <= cfg_.max_steps; ++s) {
    LossBreakdown b = train_step(train_set);
    const bool last = s == cfg_.max_steps;
    if (eval && cfg_.eval_every > 0 && (s % cfg_.eval_every == 0 || last)) {
      b.val_auroc = eval();
    }
    if (on_log && (s % cfg_.log_every == 0 || s == 1 || last)) {
      on_log(b);
    }
  }
}

template class Trainer<float>;
template class AdamW<float>;
template class Trainer<double>;
template class AdamW<double>;

}  // namespace date_ad
