#include "date_ad/text.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace date_ad {

namespace {

// Classic English stopword list (the one shipped with NLTK).
const char* kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
    "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom",
    "this", "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a",
    "an", "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at",
    "by", "for", "with", "about", "against", "between", "into", "through", "during",
    "before", "after", "above", "below", "to", "from", "up", "down", "in", "out", "on",
    "off", "over", "under", "again", "further", "then", "once", "here", "there", "when",
    "where", "why", "how", "all", "any", "both", "each", "few", "more", "most", "other",
    "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than", "too",
    "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've",
    "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't",
    "haven", "haven't", "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't",
    "needn", "needn't", "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't",
    "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};

bool is_ascii_punct(unsigned char c) {
  return std::ispunct(c) != 0;
}

}  // namespace

const std::vector<std::string>& PreprocessRules::builtin_stopwords() {
  static const std::vector<std::string> list(std::begin(kStopwords), std::end(kStopwords));
  return list;
}

std::uint64_t PreprocessRules::stopword_hash() const {
  const auto& words = stopwords.empty() ? builtin_stopwords() : stopwords;
  std::string joined;
  for (const auto& w : words) {
    joined += w;
    joined += '\n';
  }
  return fnv1a64(joined);
}

std::vector<std::string> preprocess(const std::string& raw, const PreprocessRules& rules) {
  std::string text = raw;
  if (rules.lowercase) {
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (rules.strip_punctuation) {
    for (char& c : text) {
      if (is_ascii_punct(static_cast<unsigned char>(c))) c = ' ';
    }
  }

  const auto& stop_src = rules.stopwords.empty() ? PreprocessRules::builtin_stopwords()
                                                 : rules.stopwords;
  std::unordered_set<std::string> stop;
  if (rules.strip_stopwords) stop.insert(stop_src.begin(), stop_src.end());

  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (rules.strip_numbers &&
        std::any_of(tok.begin(), tok.end(),
                    [](unsigned char c) { return std::isdigit(c) != 0; })) {
      continue;
    }
    if (static_cast<int>(tok.size()) < rules.min_word_len) continue;
    if (rules.strip_stopwords && stop.count(tok)) continue;
    out.push_back(tok);
  }
  return out;
}

std::int32_t Vocab::lookup(const std::string& tok) const {
  auto it = token_to_id.find(tok);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::uint64_t Vocab::content_hash() const {
  std::string joined;
  for (const auto& t : id_to_token) {
    joined += t;
    joined += '\n';
  }
  return fnv1a64(joined);
}

Vocab build_vocab(const std::vector<Document>& docs, int min_freq, int max_size) {
  if (docs.empty()) throw InvalidArgument("build_vocab: no documents");

  std::unordered_map<std::string, std::int64_t> freq;
  std::size_t total_tokens = 0;
  for (const auto& d : docs) {
    total_tokens += d.tokens.size();
    for (const auto& t : d.tokens) ++freq[t];
  }
  if (total_tokens == 0) {
    throw InvalidArgument("build_vocab: all documents are empty after preprocessing");
  }

  std::vector<std::pair<std::string, std::int64_t>> entries(freq.begin(), freq.end());
  // Most frequent first; lexicographic order breaks ties.
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.id_to_token = {"[CLS]", "[MASK]", "[PAD]", "[UNK]"};
  for (const auto& [tok, n] : entries) {
    if (n < min_freq) break;
    if (static_cast<int>(v.id_to_token.size()) - Vocab::kNumSpecial >= max_size) break;
    v.id_to_token.push_back(tok);
  }
  for (std::int32_t i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[i]] = i;
  return v;
}

TokenSequence encode(const std::vector<std::string>& tokens, const Vocab& vocab, int t_max) {
  if (t_max < 2) throw InvalidArgument("encode: t_max must be >= 2");
  TokenSequence seq;
  seq.ids.assign(t_max, Vocab::kPad);
  seq.ids[0] = Vocab::kCls;
  const int keep = std::min<int>(static_cast<int>(tokens.size()), t_max - 1);
  for (int i = 0; i < keep; ++i) seq.ids[1 + i] = vocab.lookup(tokens[i]);
  seq.attention_len = 1 + keep;
  return seq;
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocab& vocab) {
  std::vector<std::string> out;
  for (std::int32_t i = 1; i < seq.attention_len; ++i) out.push_back(vocab.token(seq.ids[i]));
  return out;
}

std::vector<std::string> Dataset::labels() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto* docs : {&train_docs, &test_docs}) {
    for (const auto& d : *docs) {
      if (seen.insert(d.label).second) out.push_back(d.label);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Split make_split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.contamination < 0.0 || spec.contamination > 0.15) {
    throw InvalidArgument("make_split: contamination must be within [0, 0.15]");
  }
  auto labels = ds.labels();
  if (labels.size() < 2) throw InvalidArgument("make_split: dataset needs >= 2 classes");
  if (std::find(labels.begin(), labels.end(), spec.inlier_class) == labels.end()) {
    throw InvalidArgument("make_split: inlier class '" + spec.inlier_class + "' not present");
  }

  Split split;
  std::vector<const Document*> train_outlier_pool;
  for (const auto& d : ds.train_docs) {
    if (d.label == spec.inlier_class) {
      split.train.push_back(&d);
    } else {
      train_outlier_pool.push_back(&d);
    }
  }
  const std::size_t n_in = split.train.size();
  if (n_in == 0) throw InvalidArgument("make_split: no training inliers");

  // n outliers such that n / (n_in + n) = contamination.
  const auto n_out = static_cast<std::size_t>(
      spec.contamination / (1.0 - spec.contamination) * static_cast<double>(n_in));
  if (n_out > train_outlier_pool.size()) {
    throw InvalidArgument("make_split: requested contamination exceeds available outliers");
  }
  if (n_out > 0) {
    Rng rng = make_rng(spec.seed, fnv1a64("split"));
    std::vector<std::size_t> idx(train_outlier_pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: first n_out entries are a uniform sample.
    for (std::size_t i = 0; i < n_out; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    for (std::size_t i = 0; i < n_out; ++i) split.train.push_back(train_outlier_pool[idx[i]]);
    split.train_outliers = static_cast<int>(n_out);
  }

  for (const auto& d : ds.test_docs) {
    split.test.push_back({&d, d.label == spec.inlier_class ? 1 : 0});
  }
  return split;
}

std::string split_manifest_json(const Split& split, const SplitSpec& spec,
                                std::uint64_t config_hash) {
  nlohmann::json j;
  j["inlier_class"] = spec.inlier_class;
  j["contamination"] = spec.contamination;
  j["seed"] = spec.seed;
  j["config_hash"] = to_hex(config_hash);
  j["train_outliers"] = split.train_outliers;
  auto& train = j["train_ids"] = nlohmann::json::array();
  for (const auto* d : split.train) train.push_back(d->id);
  auto& test = j["test"] = nlohmann::json::array();
  for (const auto& ld : split.test) {
    test.push_back({{"id", ld.doc->id}, {"label", ld.inlier}});
  }
  return j.dump(2);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_data = false;

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_data = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_data || !field.empty()) {
          row.push_back(std::move(field));
          field.clear();
          rows.push_back(std::move(row));
          row.clear();
          row_has_data = false;
        }
        break;
      default:
        field += c;
        row_has_data = true;
        break;
    }
  }
  if (row_has_data || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<Document> load_csv(const std::string& path, const PreprocessRules& rules,
                               const std::string& id_prefix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto rows = parse_csv(buf.str());

  std::vector<Document> docs;
  docs.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.empty()) continue;
    Document d;
    d.id = id_prefix + std::to_string(r);
    d.label = row[0];
    std::string text;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (!text.empty()) text += ' ';
      text += row[c];
    }
    d.tokens = preprocess(text, rules);
    docs.push_back(std::move(d));
  }
  return docs;
}

namespace {

// Strips RFC822-style headers: leading "Key: value" lines up to the first
// blank line. Files without a header block are returned unchanged.
std::string strip_headers(const std::string& content) {
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string_view line(content.data() + pos, eol - pos);
    if (line.empty() || line == "\r") {
      return saw_header ? content.substr(std::min(eol + 1, content.size())) : content;
    }
    std::size_t colon = line.find(':');
    bool header_like = colon != std::string_view::npos && colon > 0 &&
                       line.substr(0, colon).find(' ') == std::string_view::npos;
    if (!header_like && !saw_header) return content;
    if (!header_like) {
      // continuation lines are allowed inside a header block
      if (!(line[0] == ' ' || line[0] == '\t')) return content.substr(pos);
    }
    saw_header = true;
    pos = eol + 1;
  }
  return content;
}

}  // namespace

std::vector<Document> load_dirtree(const std::string& root, const PreprocessRules& rules,
                                   const std::string& id_prefix) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root);

  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  std::vector<Document> docs;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      Document d;
      d.id = id_prefix + fs::relative(f, root).string();
      d.label = dir.filename().string();
      d.tokens = preprocess(strip_headers(buf.str()), rules);
      docs.push_back(std::move(d));
    }
  }
  return docs;
}

Dataset load_dataset(const std::string& format, const std::string& train_path,
                     const std::string& test_path, const PreprocessRules& rules) {
  Dataset ds;
  if (format == "csv") {
    ds.train_docs = load_csv(train_path, rules, "train:");
    ds.test_docs = load_csv(test_path, rules, "test:");
  } else if (format == "dirtree") {
    ds.train_docs = load_dirtree(train_path, rules, "train:");
    ds.test_docs = load_dirtree(test_path, rules, "test:");
  } else {
    throw InvalidArgument("unknown dataset format: " + format);
  }
  return ds;
}

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace date_ad
