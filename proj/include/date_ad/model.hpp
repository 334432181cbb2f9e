#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "date_ad/tape.hpp"
#include "date_ad/text.hpp"

namespace date_ad {

struct EncoderConfig {
  int layers = 4;
  int heads = 4;
  int hidden = 256;
  int feedforward = 1024;
  int embed_dim = 128;
  int max_positions = 128;
  int vocab_size = 0;
  double dropout = 0.1;

  void validate() const {
    if (layers < 1 || heads < 1 || hidden < 1 || feedforward < 1 || embed_dim < 1) {
      throw InvalidArgument("encoder config: dimensions must be positive");
    }
    if (hidden % heads != 0) throw InvalidArgument("encoder config: hidden % heads != 0");
    if (max_positions < 2) throw InvalidArgument("encoder config: max_positions < 2");
    if (vocab_size < Vocab::kNumSpecial) throw InvalidArgument("encoder config: bad vocab size");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidArgument("encoder config: bad dropout");
  }
};

enum class GeneratorMode { kRandom, kSmall, kLarge };

GeneratorMode generator_mode_from_string(const std::string& s);
std::string to_string(GeneratorMode m);

// Generator hidden sizes from the model-implementation appendix.
inline int generator_hidden(GeneratorMode m) { return m == GeneratorMode::kLarge ? 64 : 16; }

namespace ad {

template <typename S>
class ParamStore {
 public:
  Param<S>* add(const std::string& name, int rows, int cols) {
    items_.push_back(std::make_unique<Param<S>>());
    Param<S>* p = items_.back().get();
    p->name = name;
    p->value = Mat<S>::zeros(rows, cols);
    p->grad = Mat<S>::zeros(rows, cols);
    return p;
  }

  Param<S>* find(const std::string& name) const {
    for (const auto& p : items_) {
      if (p->name == name) return p.get();
    }
    return nullptr;
  }

  std::vector<Param<S>*> all() const {
    std::vector<Param<S>*> out;
    out.reserve(items_.size());
    for (const auto& p : items_) out.push_back(p.get());
    return out;
  }

  std::size_t total_coords() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p->value.size();
    return n;
  }

 private:
  std::vector<std::unique_ptr<Param<S>>> items_;
};

template <typename S>
void init_truncated_normal(Mat<S>& m, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : m.v) {
    double x;
    do {
      x = dist(rng);
    } while (std::abs(x) > 2.0 * stddev);
    v = static_cast<S>(x);
  }
}

template <typename S>
void init_ones(Mat<S>& m) {
  std::fill(m.v.begin(), m.v.end(), S(1));
}

template <typename S>
struct EncoderLayerParams {
  Param<S>*wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
  Param<S>*ln1_g, *ln1_b;
  Param<S>*w1, *b1, *w2, *b2;
  Param<S>*ln2_g, *ln2_b;
};

// Shared BERT-style encoder plumbing: embedding sum -> LN -> projection ->
// stacked post-LN transformer blocks. Sequences are cropped to their
// attention length before graph construction; padding positions therefore
// never influence content positions or gradients.
template <typename S>
struct EncoderStack {
  int heads = 0;
  int hidden = 0;
  double dropout = 0.0;
  Param<S>* tok_emb = nullptr;  // possibly shared (tied) storage
  Param<S>* pos_emb = nullptr;
  Param<S>*emb_ln_g = nullptr, *emb_ln_b = nullptr;
  Param<S>*proj_w = nullptr, *proj_b = nullptr;
  std::vector<EncoderLayerParams<S>> layers;

  void build(ParamStore<S>& store, const std::string& prefix, int n_layers, int embed_dim,
             int hidden_size, int ff, int n_heads, double drop, Rng& rng) {
    heads = n_heads;
    hidden = hidden_size;
    dropout = drop;
    auto dense = [&](const std::string& name, int r, int c) {
      Param<S>* p = store.add(name, r, c);
      init_truncated_normal(p->value, 0.02, rng);
      return p;
    };
    auto zeros = [&](const std::string& name, int r, int c) { return store.add(name, r, c); };
    auto ln_pair = [&](const std::string& name, int n, Param<S>** g, Param<S>** b) {
      *g = store.add(name + ".gain", 1, n);
      init_ones((*g)->value);
      *b = store.add(name + ".bias", 1, n);
    };

    ln_pair(prefix + "emb_ln", embed_dim, &emb_ln_g, &emb_ln_b);
    proj_w = dense(prefix + "proj.w", embed_dim, hidden_size);
    proj_b = zeros(prefix + "proj.b", 1, hidden_size);
    for (int l = 0; l < n_layers; ++l) {
      std::string lp = prefix + "layer" + std::to_string(l) + ".";
      EncoderLayerParams<S> lay;
      lay.wq = dense(lp + "attn.wq", hidden_size, hidden_size);
      lay.bq = zeros(lp + "attn.bq", 1, hidden_size);
      lay.wk = dense(lp + "attn.wk", hidden_size, hidden_size);
      lay.bk = zeros(lp + "attn.bk", 1, hidden_size);
      lay.wv = dense(lp + "attn.wv", hidden_size, hidden_size);
      lay.bv = zeros(lp + "attn.bv", 1, hidden_size);
      lay.wo = dense(lp + "attn.wo", hidden_size, hidden_size);
      lay.bo = zeros(lp + "attn.bo", 1, hidden_size);
      ln_pair(lp + "ln1", hidden_size, &lay.ln1_g, &lay.ln1_b);
      lay.w1 = dense(lp + "ff.w1", hidden_size, ff);
      lay.b1 = zeros(lp + "ff.b1", 1, ff);
      lay.w2 = dense(lp + "ff.w2", ff, hidden_size);
      lay.b2 = zeros(lp + "ff.b2", 1, hidden_size);
      ln_pair(lp + "ln2", hidden_size, &lay.ln2_g, &lay.ln2_b);
      layers.push_back(lay);
    }
  }

  // h over rows 0..attention_len-1. `rng` is only consumed when train=true.
  VarId forward(Tape<S>& tape, std::span<const std::int32_t> ids, int attention_len,
                bool train, Rng& rng) const {
    if (attention_len < 1 || attention_len > static_cast<int>(ids.size())) {
      throw InvalidArgument("encoder: bad attention length");
    }
    if (attention_len > pos_emb->value.rows) {
      throw InvalidArgument("encoder: position index >= max_positions");
    }
    const int L = attention_len;
    std::vector<int> tok_ids(L), pos_ids(L);
    for (int i = 0; i < L; ++i) {
      tok_ids[i] = ids[i];
      pos_ids[i] = i;
    }

    VarId e = tape.add(tape.emb_rows(tape.param(tok_emb), std::move(tok_ids)),
                       tape.emb_rows(tape.param(pos_emb), std::move(pos_ids)));
    e = tape.layernorm(e, tape.param(emb_ln_g), tape.param(emb_ln_b));
    e = tape.dropout(e, dropout, rng, train);
    VarId x = tape.linear(e, tape.param(proj_w), tape.param(proj_b));

    const int dh = hidden / heads;
    const S inv_sqrt_dh = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
    for (const auto& lay : layers) {
      VarId q = tape.linear(x, tape.param(lay.wq), tape.param(lay.bq));
      VarId k = tape.linear(x, tape.param(lay.wk), tape.param(lay.bk));
      VarId v = tape.linear(x, tape.param(lay.wv), tape.param(lay.bv));
      std::vector<VarId> ctx;
      ctx.reserve(heads);
      for (int h = 0; h < heads; ++h) {
        VarId qh = tape.col_slice(q, h * dh, dh);
        VarId kh = tape.col_slice(k, h * dh, dh);
        VarId vh = tape.col_slice(v, h * dh, dh);
        VarId scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
        VarId probs = tape.softmax_rows(scores);
        probs = tape.dropout(probs, dropout, rng, train);
        ctx.push_back(tape.matmul(probs, vh));
      }
      VarId attn = tape.linear(tape.concat_cols(ctx), tape.param(lay.wo), tape.param(lay.bo));
      attn = tape.dropout(attn, dropout, rng, train);
      x = tape.layernorm(tape.add(x, attn), tape.param(lay.ln1_g), tape.param(lay.ln1_b));

      VarId ff = tape.gelu(tape.linear(x, tape.param(lay.w1), tape.param(lay.b1)));
      ff = tape.linear(ff, tape.param(lay.w2), tape.param(lay.b2));
      ff = tape.dropout(ff, dropout, rng, train);
      x = tape.layernorm(tape.add(x, ff), tape.param(lay.ln2_g), tape.param(lay.ln2_b));
    }
    return x;
  }
};

}  // namespace ad

// The DATE discriminator: BERT-style encoder with a sequence-level RMD head
// (K-way, reads h_[CLS]) and a position-wise RTD head (2-way, shared weights).
// RTD class 0 is "original", class 1 is "replaced".
template <typename S>
class Discriminator {
 public:
  static constexpr int kOriginalClass = 0;
  static constexpr int kReplacedClass = 1;

  Discriminator(const EncoderConfig& cfg, int k_patterns, std::uint64_t seed)
      : cfg_(cfg), k_(k_patterns) {
    cfg_.validate();
    if (k_ < 1) throw InvalidArgument("discriminator: K must be >= 1");
    Rng rng = make_rng(seed, fnv1a64("disc-init"));
    tok_emb_ = store_.add("disc.tok_emb", cfg_.vocab_size, cfg_.embed_dim);
    ad::init_truncated_normal(tok_emb_->value, 0.02, rng);
    pos_emb_ = store_.add("disc.pos_emb", cfg_.max_positions, cfg_.embed_dim);
    ad::init_truncated_normal(pos_emb_->value, 0.02, rng);
    enc_.tok_emb = tok_emb_;
    enc_.pos_emb = pos_emb_;
    enc_.build(store_, "disc.", cfg_.layers, cfg_.embed_dim, cfg_.hidden, cfg_.feedforward,
               cfg_.heads, cfg_.dropout, rng);

    auto head = [&](const std::string& name, int out_dim, Param<S>** w1, Param<S>** b1,
                    Param<S>** w2, Param<S>** b2) {
      *w1 = store_.add(name + ".w1", cfg_.hidden, cfg_.hidden);
      ad::init_truncated_normal((*w1)->value, 0.02, rng);
      *b1 = store_.add(name + ".b1", 1, cfg_.hidden);
      *w2 = store_.add(name + ".w2", cfg_.hidden, out_dim);
      ad::init_truncated_normal((*w2)->value, 0.02, rng);
      *b2 = store_.add(name + ".b2", 1, out_dim);
    };
    head("disc.rmd", k_, &rmd_w1_, &rmd_b1_, &rmd_w2_, &rmd_b2_);
    head("disc.rtd", 2, &rtd_w1_, &rtd_b1_, &rtd_w2_, &rtd_b2_);
  }

  // Contextual embeddings for rows 0..attention_len-1.
  ad::VarId encode(ad::Tape<S>& tape, std::span<const std::int32_t> ids, int attention_len,
                   bool train, Rng& rng) const {
    ++forwards_;
    return enc_.forward(tape, ids, attention_len, train, rng);
  }

  ad::VarId rmd_logits(ad::Tape<S>& tape, ad::VarId h) const {
    ad::VarId cls = tape.row_slice(h, 0, 1);
    ad::VarId z = tape.gelu(tape.linear(cls, tape.param(rmd_w1_), tape.param(rmd_b1_)));
    return tape.linear(z, tape.param(rmd_w2_), tape.param(rmd_b2_));
  }

  ad::VarId rtd_logits(ad::Tape<S>& tape, ad::VarId h) const {
    ad::VarId z = tape.gelu(tape.linear(h, tape.param(rtd_w1_), tape.param(rtd_b1_)));
    return tape.linear(z, tape.param(rtd_w2_), tape.param(rtd_b2_));
  }

  // P_M over the K patterns for a (possibly corrupted) sequence.
  ad::Mat<S> rmd_probs(std::span<const std::int32_t> ids, int attention_len) const {
    ad::Tape<S> tape;
    Rng rng;  // dropout off
    ad::VarId h = encode(tape, ids, attention_len, false, rng);
    ad::Mat<S> p = tape.value(rmd_logits(tape, h));
    ad::softmax_rows_inplace(p);
    return p;
  }

  // Per-position {original, replaced} distribution, one row per position of
  // the full padded sequence. Padding rows carry no signal and are reported
  // as exactly (0.5, 0.5).
  ad::Mat<S> rtd_probs(std::span<const std::int32_t> ids, int attention_len) const {
    ad::Tape<S> tape;
    Rng rng;
    ad::VarId h = encode(tape, ids, attention_len, false, rng);
    ad::Mat<S> active = tape.value(rtd_logits(tape, h));
    ad::softmax_rows_inplace(active);
    ad::Mat<S> out(static_cast<int>(ids.size()), 2);
    for (int i = 0; i < out.rows; ++i) {
      if (i < attention_len) {
        out(i, 0) = active(i, 0);
        out(i, 1) = active(i, 1);
      } else {
        out(i, 0) = S(0.5);
        out(i, 1) = S(0.5);
      }
    }
    return out;
  }

  const EncoderConfig& config() const { return cfg_; }
  int k_patterns() const { return k_; }
  ad::ParamStore<S>& store() { return store_; }
  const ad::ParamStore<S>& store() const { return store_; }
  Param<S>* token_embeddings() const { return tok_emb_; }
  Param<S>* position_embeddings() const { return pos_emb_; }

  long forward_count() const { return forwards_.load(); }
  void reset_forward_count() const { forwards_.store(0); }

 private:
  EncoderConfig cfg_;
  int k_;
  ad::ParamStore<S> store_;
  ad::EncoderStack<S> enc_;
  Param<S>*tok_emb_, *pos_emb_;
  Param<S>*rmd_w1_, *rmd_b1_, *rmd_w2_, *rmd_b2_;
  Param<S>*rtd_w1_, *rtd_b1_, *rtd_w2_, *rtd_b2_;
  mutable std::atomic<long> forwards_{0};
};

// Optional learned MLM generator: one transformer layer with a small hidden
// size; token and positional embeddings are the discriminator's tensors
// (tied storage), and the output projection is tied to the token table.
template <typename S>
class Generator {
 public:
  Generator(const EncoderConfig& disc_cfg, GeneratorMode mode, Param<S>* tok_emb,
            Param<S>* pos_emb, std::uint64_t seed)
      : mode_(mode), vocab_size_(disc_cfg.vocab_size) {
    if (mode == GeneratorMode::kRandom) {
      throw InvalidArgument("generator: random mode has no learned generator");
    }
    const int g = generator_hidden(mode);
    Rng rng = make_rng(seed, fnv1a64("gen-init"));
    enc_.tok_emb = tok_emb;
    enc_.pos_emb = pos_emb;
    enc_.build(store_, "gen.", /*n_layers=*/1, disc_cfg.embed_dim, g, /*ff=*/1024,
               /*n_heads=*/4, disc_cfg.dropout, rng);
    out_w_ = store_.add("gen.out.w", g, disc_cfg.embed_dim);
    ad::init_truncated_normal(out_w_->value, 0.02, rng);
    out_b_ = store_.add("gen.out.b", 1, disc_cfg.embed_dim);
    out_ln_g_ = store_.add("gen.out_ln.gain", 1, disc_cfg.embed_dim);
    ad::init_ones(out_ln_g_->value);
    out_ln_b_ = store_.add("gen.out_ln.bias", 1, disc_cfg.embed_dim);
    vocab_b_ = store_.add("gen.vocab_bias", 1, disc_cfg.vocab_size);
  }

  // Per-position vocabulary logits [attention_len, V] for a masked sequence.
  ad::VarId mlm_logits(ad::Tape<S>& tape, std::span<const std::int32_t> ids, int attention_len,
                       bool train, Rng& rng) const {
    ad::VarId h = enc_.forward(tape, ids, attention_len, train, rng);
    ad::VarId t = tape.gelu(tape.linear(h, tape.param(out_w_), tape.param(out_b_)));
    t = tape.layernorm(t, tape.param(out_ln_g_), tape.param(out_ln_b_));
    return tape.add_rowvec(tape.matmul_nt(t, tape.param(enc_.tok_emb)), tape.param(vocab_b_));
  }

  // Concrete per-position distributions P_G. When exclude_specials is set the
  // special-token columns are zeroed and rows renormalized.
  ad::Mat<S> mlm_probs(std::span<const std::int32_t> ids, int attention_len,
                       bool exclude_specials) const {
    ad::Tape<S> tape;
    Rng rng;
    ad::Mat<S> p = tape.value(mlm_logits(tape, ids, attention_len, false, rng));
    ad::softmax_rows_inplace(p);
    if (exclude_specials) {
      for (int i = 0; i < p.rows; ++i) {
        double kept = 0.0;
        for (int j = 0; j < Vocab::kNumSpecial; ++j) p(i, j) = S(0);
        for (int j = Vocab::kNumSpecial; j < p.cols; ++j) kept += p(i, j);
        if (kept > 0.0) {
          for (int j = Vocab::kNumSpecial; j < p.cols; ++j) {
            p(i, j) = static_cast<S>(p(i, j) / kept);
          }
        }
      }
    }
    return p;
  }

  GeneratorMode mode() const { return mode_; }
  int vocab_size() const { return vocab_size_; }
  ad::ParamStore<S>& store() { return store_; }
  const ad::ParamStore<S>& store() const { return store_; }

 private:
  GeneratorMode mode_;
  int vocab_size_;
  ad::ParamStore<S> store_;
  ad::EncoderStack<S> enc_;
  Param<S>*out_w_, *out_b_, *out_ln_g_, *out_ln_b_, *vocab_b_;
};

using DiscriminatorF = Discriminator<float>;
using DiscriminatorD = Discriminator<double>;

}  // namespace date_ad
