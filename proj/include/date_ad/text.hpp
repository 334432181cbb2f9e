#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "date_ad/common.hpp"

namespace date_ad {

// Word-level preprocessing rules. All rules are independent switches so
// ablations can turn individual ones off.
struct PreprocessRules {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool strip_numbers = true;    // drops tokens containing any digit
  bool strip_stopwords = true;
  int min_word_len = 3;         // tokens shorter than this are dropped
  std::vector<std::string> stopwords;  // empty -> builtin English list

  static const std::vector<std::string>& builtin_stopwords();
  // Fingerprint of the active stopword list, recorded in reports.
  std::uint64_t stopword_hash() const;
};

std::vector<std::string> preprocess(const std::string& raw, const PreprocessRules& rules);

struct Document {
  std::string id;
  std::string label;
  std::vector<std::string> tokens;
};

// Special token ids are fixed: [CLS]=0, [MASK]=1, [PAD]=2, [UNK]=3.
struct Vocab {
  static constexpr std::int32_t kCls = 0;
  static constexpr std::int32_t kMask = 1;
  static constexpr std::int32_t kPad = 2;
  static constexpr std::int32_t kUnk = 3;
  static constexpr std::int32_t kNumSpecial = 4;

  std::unordered_map<std::string, std::int32_t> token_to_id;
  std::vector<std::string> id_to_token;  // includes the 4 specials

  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token.size()); }
  std::int32_t lookup(const std::string& tok) const;
  const std::string& token(std::int32_t id) const { return id_to_token.at(id); }
  bool is_special(std::int32_t id) const { return id >= 0 && id < kNumSpecial; }
  std::uint64_t content_hash() const;
};

Vocab build_vocab(const std::vector<Document>& docs, int min_freq, int max_size);

struct TokenSequence {
  std::vector<std::int32_t> ids;  // length T_max, ids[0] = [CLS]
  std::int32_t attention_len = 0;  // real tokens including [CLS]
  std::string label;
  std::string doc_id;

  std::int32_t t_max() const { return static_cast<std::int32_t>(ids.size()); }
  std::int32_t content_len() const { return attention_len - 1; }
};

TokenSequence encode(const std::vector<std::string>& tokens, const Vocab& vocab, int t_max);

// Inverse of encode over content positions: in-vocabulary words in order,
// specials rendered by name.
std::vector<std::string> decode(const TokenSequence& seq, const Vocab& vocab);

// A labeled dataset with its published train/test division.
struct Dataset {
  std::vector<Document> train_docs;
  std::vector<Document> test_docs;
  std::vector<std::string> labels() const;
};

struct SplitSpec {
  std::string inlier_class;
  double contamination = 0.0;  // fraction of the final train set, in [0, 0.15]
  std::uint64_t seed = 0;
};

struct LabeledDoc {
  const Document* doc;
  int inlier = 1;  // 1 = inlier, 0 = outlier
};

struct Split {
  std::vector<const Document*> train;     // inliers plus sampled contamination
  std::vector<LabeledDoc> test;           // held-out inliers and all held-out outliers
  int train_outliers = 0;
};

Split make_split(const Dataset& ds, const SplitSpec& spec);

// JSON manifest (doc ids per train/test with binary labels) for auditability.
std::string split_manifest_json(const Split& split, const SplitSpec& spec,
                                std::uint64_t config_hash);

// Loaders. CSV rows are (class,title,description); the text fields are
// concatenated. Directory trees hold one document per file under
// root/<class>/<file>, with RFC822-style headers stripped.
std::vector<Document> load_csv(const std::string& path, const PreprocessRules& rules,
                               const std::string& id_prefix);
std::vector<Document> load_dirtree(const std::string& root, const PreprocessRules& rules,
                                   const std::string& id_prefix);

Dataset load_dataset(const std::string& format, const std::string& train_path,
                     const std::string& test_path, const PreprocessRules& rules);

// Minimal CSV support used by the loaders and artifact writers: handles
// quoted fields, embedded commas/newlines and "" escapes.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);
std::string csv_escape(const std::string& field);

}  // namespace date_ad
