#include "date_ad/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace date_ad {

namespace {

nlohmann::json encoder_to_json(const EncoderConfig& c) {
  return {{"layers", c.layers},           {"heads", c.heads},
          {"hidden", c.hidden},           {"feedforward", c.feedforward},
          {"embed_dim", c.embed_dim},     {"max_positions", c.max_positions},
          {"vocab_size", c.vocab_size},   {"dropout", c.dropout}};
}

EncoderConfig encoder_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.feedforward = j.at("feedforward").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Discriminator<float>& disc,
                     const Generator<float>* gen, const PatternSet& patterns, const Vocab& vocab,
                     const CheckpointMeta& meta) {
  nlohmann::json header;
  header["encoder"] = encoder_to_json(disc.config());
  header["k"] = disc.k_patterns();
  header["generator"] = to_string(meta.generator);
  header["config_hash"] = meta.config_hash;
  header["stopword_hash"] = meta.stopword_hash;

  nlohmann::json pat;
  pat["t_max"] = patterns.t_max;
  pat["masked_count"] = patterns.masked_count;
  pat["seed"] = patterns.seed;
  auto& bits = pat["bits"] = nlohmann::json::array();
  for (const auto& p : patterns.patterns) bits.push_back(p.to_bitstring());
  header["patterns"] = std::move(pat);

  header["vocab"] = vocab.id_to_token;

  std::vector<std::pair<std::string, const ad::Mat<float>*>> tensors;
  for (const auto* p : disc.store().all()) tensors.emplace_back(p->name, &p->value);
  if (gen != nullptr) {
    for (const auto* p : gen->store().all()) tensors.emplace_back(p->name, &p->value);
  }
  auto& dir = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, mat] : tensors) {
    dir.push_back({{"name", name},
                   {"rows", mat->rows},
                   {"cols", mat->cols},
                   {"offset", offset}});
    offset += mat->size();
  }

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, mat] : tensors) {
    out.write(reinterpret_cast<const char*>(mat->v.data()),
              static_cast<std::streamsize>(mat->size() * sizeof(float)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

LoadedModel<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header: " + path);

  nlohmann::json header = nlohmann::json::parse(header_str);
  LoadedModel<float> out;
  out.meta.config_hash = header.at("config_hash").get<std::string>();
  out.meta.stopword_hash = header.value("stopword_hash", "");
  out.meta.generator = generator_mode_from_string(header.at("generator").get<std::string>());

  const auto& pat = header.at("patterns");
  out.patterns.t_max = pat.at("t_max").get<int>();
  out.patterns.masked_count = pat.at("masked_count").get<int>();
  out.patterns.seed = pat.at("seed").get<std::uint64_t>();
  for (const auto& b : pat.at("bits")) {
    out.patterns.patterns.push_back(MaskPattern::from_bitstring(b.get<std::string>()));
  }

  out.vocab.id_to_token = header.at("vocab").get<std::vector<std::string>>();
  for (std::int32_t i = 0; i < out.vocab.size(); ++i) {
    out.vocab.token_to_id[out.vocab.id_to_token[i]] = i;
  }

  EncoderConfig cfg = encoder_from_json(header.at("encoder"));
  const int k = header.at("k").get<int>();
  // Seed irrelevant: every tensor is overwritten below.
  out.disc = std::make_unique<Discriminator<float>>(cfg, k, 0);
  if (out.meta.generator != GeneratorMode::kRandom) {
    out.gen = std::make_unique<Generator<float>>(cfg, out.meta.generator,
                                                 out.disc->token_embeddings(),
                                                 out.disc->position_embeddings(), 0);
  }

  const std::uint64_t data_start = sizeof(kCheckpointMagic) + sizeof(len) + len;
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const int rows = t.at("rows").get<int>();
    const int cols = t.at("cols").get<int>();
    const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
    Param<float>* p = out.disc->store().find(name);
    if (p == nullptr && out.gen != nullptr) p = out.gen->store().find(name);
    if (p == nullptr) continue;  // unknown tensors are skipped
    if (p->value.rows != rows || p->value.cols != cols) {
      throw DataError("checkpoint tensor shape mismatch for " + name);
    }
    in.seekg(static_cast<std::streamoff>(data_start + offset * sizeof(float)));
    in.read(reinterpret_cast<char*>(p->value.v.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint tensor " + name);
  }
  return out;
}

}  // namespace date_ad
