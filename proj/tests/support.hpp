#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/model.hpp"
#include "morphdis/morph.hpp"
#include "morphdis/rng.hpp"
#include "morphdis/synthetic.hpp"

namespace testing {

using namespace morphdis;

inline std::vector<Sentence> read_string(const std::string& text, const TagsetConfig& cfg,
                                         ReadMode mode = ReadMode::kTrain,
                                         GoldConvention conv = GoldConvention::kFirst) {
  std::istringstream in(text);
  return read_corpus(in, cfg, mode, conv);
}

struct ToyDims {
  std::size_t window = 3;
  std::size_t root_dim = 3;
  std::size_t pos_dim = 2;
  std::size_t feat_dim = 2;
  std::size_t h1 = 3;
  std::size_t h2 = 4;
};

// Small model over the synthetic vocabulary with every parameter (biases
// included) drawn uniformly from [-scale, scale].
inline ModelState toy_model(std::uint64_t seed, const ToyDims& d, double scale = 0.8) {
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 12;
  so.roots_per_class = 2;
  so.seed = seed;
  const Vocabularies v = build_vocabularies(synthetic_corpus(so, cfg), cfg, 1);
  Hyper h;
  h.window = d.window;
  h.root_dim = d.root_dim;
  h.pos_dim = d.pos_dim;
  h.feat_dim = d.feat_dim;
  h.h1 = d.h1;
  h.h2 = d.h2;
  h.seed = seed;
  ModelState s = init_params(v, h, cfg);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  s.params.for_each([&](const std::string&, Matrix& m) {
    for (double& x : m.flat()) x = uniform_symmetric(rng, scale);
  });
  return s;
}

// Random ids for every active slot (reserved ids included).
inline IdBundle random_bundle(const ModelState& s, Rng& rng) {
  IdBundle b{};
  for (Slot slot : s.active_slots())
    b[slot_index(slot)] =
        static_cast<std::uint32_t>(uniform_index(rng, s.vocab[slot].size()));
  return b;
}

inline std::vector<IdBundle> random_window(const ModelState& s, Rng& rng) {
  std::vector<IdBundle> ws;
  for (std::size_t k = 0; k < s.hyper.window; ++k) ws.push_back(random_bundle(s, rng));
  return ws;
}

inline EncodedSentence random_sentence(const ModelState& s, Rng& rng, std::size_t max_len,
                                       std::size_t max_cands) {
  EncodedSentence sent;
  sent.id = "r";
  const std::size_t len = 1 + uniform_index(rng, max_len);
  for (std::size_t t = 0; t < len; ++t) {
    EncodedToken tok;
    const std::size_t n = 1 + uniform_index(rng, max_cands);
    for (std::size_t i = 0; i < n; ++i) tok.candidates.push_back(random_bundle(s, rng));
    tok.gold = uniform_index(rng, n);
    sent.tokens.push_back(std::move(tok));
  }
  return sent;
}

// Straight-line re-derivation of the network: embeddings -> tanh(W1 x + b1)
// per word, concatenation, tanh(W2 z + b2), W3 h + b3, two-way softmax.
// Returns -ln p(label), computed without any library kernel.
inline double oracle_loss(std::span<const IdBundle> ws, int label, const ModelState& s) {
  const auto& p = s.params;
  std::vector<double> z;
  for (const IdBundle& w : ws) {
    std::vector<double> x;
    for (Slot slot : kSlotOrder) {
      if (!s.tagset.is_active(slot)) continue;
      const Matrix& e = p.embeddings[slot_index(slot)];
      for (std::size_t c = 0; c < e.cols(); ++c) x.push_back(e(w[slot_index(slot)], c));
    }
    for (std::size_t r = 0; r < p.w1.rows(); ++r) {
      double acc = p.b1(r, 0);
      for (std::size_t c = 0; c < x.size(); ++c) acc += p.w1(r, c) * x[c];
      z.push_back(std::tanh(acc));
    }
  }
  std::vector<double> h(p.w2.rows());
  for (std::size_t r = 0; r < h.size(); ++r) {
    double acc = p.b2(r, 0);
    for (std::size_t c = 0; c < z.size(); ++c) acc += p.w2(r, c) * z[c];
    h[r] = std::tanh(acc);
  }
  double logit[2];
  for (std::size_t r = 0; r < 2; ++r) {
    double acc = p.b3(r, 0);
    for (std::size_t c = 0; c < h.size(); ++c) acc += p.w3(r, c) * h[c];
    logit[r] = acc;
  }
  const double m = std::max(logit[0], logit[1]);
  const double lse = m + std::log(std::exp(logit[0] - m) + std::exp(logit[1] - m));
  return lse - logit[label];
}

// |a - b| relative to the larger magnitude, with an absolute floor so two
// values that are both numerically zero compare as equal.
inline double relative_error(double a, double b, double floor = 1e-8) {
  const double scale = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / scale;
}

}  // namespace testing
