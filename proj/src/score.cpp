#include "date_ad/score.hpp"

#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace date_ad {

ScoreKind score_kind_from_string(const std::string& s) {
  if (s == "pl_rtd") return ScoreKind::kPlRtd;
  if (s == "pl_rmd") return ScoreKind::kPlRmd;
  if (s == "mp") return ScoreKind::kMp;
  if (s == "ne") return ScoreKind::kNe;
  throw InvalidArgument("unknown score kind: '" + s + "' (expected pl_rtd|pl_rmd|mp|ne)");
}

std::string to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::kPlRtd: return "pl_rtd";
    case ScoreKind::kPlRmd: return "pl_rmd";
    case ScoreKind::kMp: return "mp";
    case ScoreKind::kNe: return "ne";
  }
  return "pl_rtd";
}

double aggregate_pl(const std::vector<double>& per_token_p_original) {
  if (per_token_p_original.empty()) throw InvalidArgument("aggregate_pl: no tokens");
  double acc = 0.0;
  for (double p : per_token_p_original) acc += p;
  return acc / static_cast<double>(per_token_p_original.size());
}

std::vector<ScoreReport> score_all(const std::vector<TokenSequence>& docs,
                                   const Discriminator<float>& model, const PatternSet& patterns,
                                   const Vocab& vocab, ScoreKind kind, std::uint64_t seed,
                                   int threads) {
  std::vector<ScoreReport> out(docs.size());
  std::vector<std::uint8_t> keep(docs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < docs.size(); i = next.fetch_add(1)) {
      if (failed.load()) return;
      if (docs[i].content_len() < 1) continue;  // nothing to score
      try {
        out[i] = score_document(docs[i], model, patterns, vocab, kind, seed);
        keep[i] = 1;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        error = e.what();
        failed.store(true);
      }
    }
  };

  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, std::min<int>(n, static_cast<int>(docs.size())));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw NumericError("score_all: " + error);

  std::vector<ScoreReport> kept;
  kept.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(out[i]));
  }
  return kept;
}

std::string scores_to_csv(const std::vector<ScoreReport>& reports) {
  std::ostringstream out;
  out << "doc_id,label,score\n";
  out.precision(12);
  for (const auto& r : reports) {
    out << csv_escape(r.doc_id) << ',' << csv_escape(r.label) << ',' << r.score << '\n';
  }
  return out.str();
}

std::string per_token_json(const std::vector<ScoreReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json doc;
    doc["doc_id"] = r.doc_id;
    doc["label"] = r.label;
    doc["score"] = r.score;
    doc["kind"] = to_string(r.kind);
    auto& toks = doc["tokens"] = nlohmann::json::array();
    for (const auto& t : r.per_token) {
      toks.push_back({{"token", t.token}, {"p_original", t.p_original}});
    }
    j.push_back(std::move(doc));
  }
  return j.dump(2);
}

}  // namespace date_ad
