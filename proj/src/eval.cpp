#include "morphdis/eval.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "morphdis/errors.hpp"

namespace morphdis {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

const MorphAnalysis& gold_of(const Sentence& s, const Token& tok) {
  if (!tok.gold)
    throw MissingGold("sentence " + s.id + ": token '" + tok.surface +
                      "' has no gold analysis");
  return tok.candidates.at(*tok.gold);
}

void score_token(Metrics& m, const Token& tok, const MorphAnalysis& gold,
                 const MorphAnalysis& pred, const TagsetConfig& cfg) {
  ++m.tokens;
  const bool exact = gold.raw == pred.raw;
  if (tok.ambiguous()) {
    ++m.ambiguous;
    if (exact) ++m.ambiguous_correct;
  }
  if (exact) {
    ++m.pos_correct;
    ++m.lemma_correct;
    return;
  }
  const FeatureBundle g = extract_features(gold, cfg);
  const FeatureBundle p = extract_features(pred, cfg);
  if (g[Slot::kMainPos] == p[Slot::kMainPos]) ++m.pos_correct;
  if (g[Slot::kRoot] == p[Slot::kRoot]) ++m.lemma_correct;
}

}  // namespace

std::optional<double> Metrics::ambiguous_accuracy() const {
  return ratio(ambiguous_correct, ambiguous);
}
std::optional<double> Metrics::pos_accuracy() const { return ratio(pos_correct, tokens); }
std::optional<double> Metrics::lemma_accuracy() const {
  return ratio(lemma_correct, tokens);
}

Metrics& Metrics::operator+=(const Metrics& o) {
  tokens += o.tokens;
  ambiguous += o.ambiguous;
  ambiguous_correct += o.ambiguous_correct;
  pos_correct += o.pos_correct;
  lemma_correct += o.lemma_correct;
  return *this;
}

Metrics evaluate(const std::vector<Sentence>& gold,
                 const std::vector<DecodeResult>& pred, const TagsetConfig& cfg) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) +
                         " sentences, predictions " + std::to_string(pred.size()));
  Metrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& toks = gold[i].tokens;
    const auto& choice = pred[i].choice;
    if (toks.size() != choice.size())
      throw AlignmentError("sentence " + gold[i].id + ": gold has " +
                           std::to_string(toks.size()) + " tokens, prediction " +
                           std::to_string(choice.size()));
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (choice[t] >= toks[t].candidates.size())
        throw AlignmentError("sentence " + gold[i].id + ": choice out of range");
      score_token(m, toks[t], gold_of(gold[i], toks[t]), toks[t].candidates[choice[t]],
                  cfg);
    }
  }
  return m;
}

Metrics evaluate(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred,
                 const TagsetConfig& cfg) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold has " + std::to_string(gold.size()) +
                         " sentences, predictions " + std::to_string(pred.size()));
  Metrics m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i].tokens;
    const auto& p = pred[i].tokens;
    if (g.size() != p.size())
      throw AlignmentError("sentence " + gold[i].id + ": gold has " +
                           std::to_string(g.size()) + " tokens, prediction " +
                           std::to_string(p.size()));
    for (std::size_t t = 0; t < g.size(); ++t) {
      if (g[t].surface != p[t].surface)
        throw AlignmentError("sentence " + gold[i].id + ", token " +
                             std::to_string(t + 1) + ": surface '" + g[t].surface +
                             "' vs '" + p[t].surface + "'");
      score_token(m, g[t], gold_of(gold[i], g[t]), gold_of(pred[i], p[t]), cfg);
    }
  }
  return m;
}

std::string format_metrics_table(const Metrics& m) {
  auto row = [](const char* name, std::size_t num, std::size_t den,
                std::optional<double> acc) {
    char buf[128];
    if (acc)
      std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %9.2f%%\n", name, num, den,
                    *acc * 100.0);
    else
      std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %10s\n", name, num, den, "n/a");
    return std::string(buf);
  };
  std::string out;
  char head[128];
  std::snprintf(head, sizeof head, "%-10s %8s %8s %10s\n", "metric", "correct", "total",
                "accuracy");
  out += head;
  out += row("ambiguous", m.ambiguous_correct, m.ambiguous, m.ambiguous_accuracy());
  out += row("pos", m.pos_correct, m.tokens, m.pos_accuracy());
  out += row("lemma", m.lemma_correct, m.tokens, m.lemma_accuracy());
  return out;
}

std::string metrics_json(const Metrics& m) {
  auto acc = [](std::optional<double> v) -> nlohmann::json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::json j{
      {"tokens", m.tokens},
      {"ambiguous", m.ambiguous},
      {"ambiguous_correct", m.ambiguous_correct},
      {"pos_correct", m.pos_correct},
      {"lemma_correct", m.lemma_correct},
      {"ambiguous_accuracy", acc(m.ambiguous_accuracy())},
      {"pos_accuracy", acc(m.pos_accuracy())},
      {"lemma_accuracy", acc(m.lemma_accuracy())},
  };
  return j.dump(2);
}

}  // namespace morphdis
