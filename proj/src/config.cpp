#include "date_ad/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace date_ad {

namespace {

using nlohmann::json;

json preprocess_to_json(const PreprocessRules& p) {
  json j;
  j["lowercase"] = p.lowercase;
  j["strip_punctuation"] = p.strip_punctuation;
  j["strip_numbers"] = p.strip_numbers;
  j["strip_stopwords"] = p.strip_stopwords;
  j["min_word_len"] = p.min_word_len;
  if (!p.stopwords.empty()) j["stopwords"] = p.stopwords;
  return j;
}

PreprocessRules preprocess_from_json(const json& j) {
  PreprocessRules p;
  p.lowercase = j.value("lowercase", p.lowercase);
  p.strip_punctuation = j.value("strip_punctuation", p.strip_punctuation);
  p.strip_numbers = j.value("strip_numbers", p.strip_numbers);
  p.strip_stopwords = j.value("strip_stopwords", p.strip_stopwords);
  p.min_word_len = j.value("min_word_len", p.min_word_len);
  if (j.contains("stopwords")) p.stopwords = j.at("stopwords").get<std::vector<std::string>>();
  return p;
}

json run_config_to_json(const RunConfig& c, bool canonical) {
  json j;
  j["dataset"] = {{"format", c.dataset.format},
                  {"train_path", c.dataset.train_path},
                  {"test_path", c.dataset.test_path}};
  j["inlier_class"] = c.inlier_class;
  j["contamination"] = c.contamination;
  j["seed"] = c.seed;
  j["preprocess"] = preprocess_to_json(c.preprocess);
  j["vocab"] = {{"max_size", c.vocab.max_size}, {"min_freq", c.vocab.min_freq}};
  j["t_max"] = c.t_max;
  j["patterns"] = {{"k", c.patterns.k}, {"mask_fraction", c.patterns.mask_fraction}};
  j["model"] = {{"layers", c.model.layers},
                {"heads", c.model.heads},
                {"hidden", c.model.hidden},
                {"feedforward", c.model.feedforward},
                {"embed_dim", c.model.embed_dim},
                {"dropout", c.model.dropout}};
  j["train"] = {{"lr", c.train.lr},
                {"weight_decay", c.train.weight_decay},
                {"lambda_rtd", c.train.lambda_rtd},
                {"mu_rmd", c.train.mu_rmd},
                {"batch_size", c.train.batch_size},
                {"max_steps", c.train.max_steps},
                {"warmup_steps", c.train.warmup_steps},
                {"clip_norm", c.train.clip_norm},
                {"generator", to_string(c.train.generator)}};
  j["score_kind"] = to_string(c.score_kind);
  j["histogram_bins"] = c.histogram_bins;
  if (!canonical) {
    // Execution-only fields; they do not change results so they stay out of
    // the canonical (hashed) form.
    j["train"]["threads"] = c.train.threads;
    j["train"]["log_every"] = c.train.log_every;
    j["train"]["eval_every"] = c.train.eval_every;
    j["output_dir"] = c.output_dir;
  }
  return j;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.format != "csv" && dataset.format != "dirtree" && dataset.format != "synth") {
    throw InvalidArgument("dataset.format must be csv, dirtree or synth");
  }
  if (dataset.format != "synth") {
    if (dataset.train_path.empty()) throw InvalidArgument("dataset.train_path is required");
    if (dataset.test_path.empty()) throw InvalidArgument("dataset.test_path is required");
  }
  if (inlier_class.empty()) throw InvalidArgument("inlier_class is required");
  if (contamination < 0.0 || contamination > 0.15) {
    throw InvalidArgument("contamination must lie in [0, 0.15]");
  }
  if (vocab.max_size < 1) throw InvalidArgument("vocab.max_size must be >= 1");
  if (vocab.min_freq < 1) throw InvalidArgument("vocab.min_freq must be >= 1");
  if (t_max < 2) throw InvalidArgument("t_max must be >= 2");
  if (patterns.k < 1) throw InvalidArgument("patterns.k must be >= 1");
  if (patterns.mask_fraction <= 0.0 || patterns.mask_fraction > 1.0) {
    throw InvalidArgument("patterns.mask_fraction must lie in (0, 1]");
  }
  if (preprocess.min_word_len < 0) throw InvalidArgument("preprocess.min_word_len must be >= 0");
  {
    EncoderConfig m = model;
    m.vocab_size = Vocab::kNumSpecial;  // filled in after vocabulary build
    m.max_positions = t_max;
    m.validate();
  }
  train.validate();
  if (histogram_bins < 2) throw InvalidArgument("histogram_bins must be >= 2");
  if (output_dir.empty()) throw InvalidArgument("output_dir is required");
}

std::string RunConfig::to_json(int indent) const {
  return run_config_to_json(*this, /*canonical=*/false).dump(indent);
}

RunConfig RunConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.dataset.format = d.value("format", c.dataset.format);
      c.dataset.train_path = d.value("train_path", std::string());
      c.dataset.test_path = d.value("test_path", std::string());
    }
    c.inlier_class = j.value("inlier_class", std::string());
    c.contamination = j.value("contamination", 0.0);
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("preprocess")) c.preprocess = preprocess_from_json(j.at("preprocess"));
    if (j.contains("vocab")) {
      c.vocab.max_size = j.at("vocab").value("max_size", c.vocab.max_size);
      c.vocab.min_freq = j.at("vocab").value("min_freq", c.vocab.min_freq);
    }
    c.t_max = j.value("t_max", c.t_max);
    if (j.contains("patterns")) {
      c.patterns.k = j.at("patterns").value("k", c.patterns.k);
      c.patterns.mask_fraction = j.at("patterns").value("mask_fraction", c.patterns.mask_fraction);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.layers = m.value("layers", c.model.layers);
      c.model.heads = m.value("heads", c.model.heads);
      c.model.hidden = m.value("hidden", c.model.hidden);
      c.model.feedforward = m.value("feedforward", c.model.feedforward);
      c.model.embed_dim = m.value("embed_dim", c.model.embed_dim);
      c.model.dropout = m.value("dropout", c.model.dropout);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.lr = t.value("lr", c.train.lr);
      c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
      c.train.lambda_rtd = t.value("lambda_rtd", c.train.lambda_rtd);
      c.train.mu_rmd = t.value("mu_rmd", c.train.mu_rmd);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.max_steps = t.value("max_steps", c.train.max_steps);
      c.train.warmup_steps = t.value("warmup_steps", c.train.warmup_steps);
      c.train.clip_norm = t.value("clip_norm", c.train.clip_norm);
      if (t.contains("generator")) {
        c.train.generator = generator_mode_from_string(t.at("generator").get<std::string>());
      }
      c.train.threads = t.value("threads", c.train.threads);
      c.train.log_every = t.value("log_every", c.train.log_every);
      c.train.eval_every = t.value("eval_every", c.train.eval_every);
    }
    if (j.contains("score_kind")) {
      c.score_kind = score_kind_from_string(j.at("score_kind").get<std::string>());
    }
    c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  c.train.seed = c.seed;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::uint64_t RunConfig::hash() const {
  return fnv1a64(run_config_to_json(*this, /*canonical=*/true).dump());
}

std::string RunConfig::hash_hex() const { return to_hex(hash()); }

}  // namespace date_ad
