#pragma once

// The window scorer: per-word projection of concatenated slot embeddings
// (layer a), a dense layer over the n concatenated word vectors (layer b),
// and a two-way softmax (layer c). Gradients are derived by hand; AdaGrad
// keeps one accumulator per parameter entry.

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/linalg.hpp"
#include "morphdis/morph.hpp"

namespace morphdis {

struct Hyper {
  std::size_t window = 5;
  std::size_t root_dim = 50;
  std::size_t pos_dim = 20;
  std::size_t feat_dim = 5;
  std::size_t h1 = 30;
  std::size_t h2 = 40;
  double learning_rate = 0.05;
  double adagrad_epsilon = 1e-8;
  std::uint64_t seed = 1;

  // root -> root_dim, mainPos/minorPos -> pos_dim, anything else -> feat_dim.
  std::size_t dim_for(Slot s) const;
  void validate() const;

  bool operator==(const Hyper&) const = default;
};

struct Parameters {
  // Rows indexed by vocabulary id; empty for inactive slots.
  std::array<Matrix, kNumSlots> embeddings;
  Matrix w1, b1;  // h1 x D, h1 x 1
  Matrix w2, b2;  // h2 x (n*h1), h2 x 1
  Matrix w3, b3;  // 2 x h2, 2 x 1

  // Visits every non-empty matrix in serialization order with a stable name.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  bool operator==(const Parameters&) const = default;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    for (Slot s : kSlotOrder) {
      auto& m = self.embeddings[slot_index(s)];
      if (!m.empty()) f("emb." + std::string(slot_name(s)), m);
    }
    f(std::string("w1"), self.w1);
    f(std::string("b1"), self.b1);
    f(std::string("w2"), self.w2);
    f(std::string("b2"), self.b2);
    f(std::string("w3"), self.w3);
    f(std::string("b3"), self.b3);
  }
};

struct ModelState {
  Hyper hyper;
  TagsetConfig tagset;
  Vocabularies vocab;
  Parameters params;
  Parameters accum;

  // Width of the concatenated slot embeddings of one word.
  std::size_t input_dim() const;
  std::vector<Slot> active_slots() const;
};

ModelState init_params(const Vocabularies& v, const Hyper& h,
                       const TagsetConfig& cfg);

struct WordVec {
  std::vector<double> input;  // concatenated embeddings, length D
  std::vector<double> pre;    // W1 x + b1
  std::vector<double> out;    // tanh(pre)
};

WordVec forward_word(const IdBundle& w, const ModelState& s);

struct WindowProbs {
  double p_neg = 0.5;
  double p_pos = 0.5;
};

// Everything backward() needs from the forward pass.
struct WindowActivations {
  std::vector<WordVec> words;
  std::vector<double> concat;  // n*h1
  std::vector<double> hidden;  // h2, tanh(W2 z + b2)
  std::array<double, 2> logits{};
  WindowProbs probs;
};

WindowActivations forward_window_full(std::span<const IdBundle> ws,
                                      const ModelState& s);
WindowProbs forward_window(std::span<const IdBundle> ws, const ModelState& s);

// ln p_pos for a window whose layer-(a) outputs are already computed. This is
// the hot path of decoding; `scratch` avoids per-call allocation.
struct WindowScratch {
  std::vector<double> concat;
  std::vector<double> hidden;
};
double window_log_pos(std::span<const std::span<const double>> word_outputs,
                      const ModelState& s, WindowScratch& scratch);

struct EmbeddingGrad {
  Slot slot;
  std::uint32_t id;
  std::vector<double> grad;
};

struct Gradients {
  Matrix w1, b1, w2, b2, w3, b3;
  // One entry per distinct (slot, id) referenced by the window.
  std::vector<EmbeddingGrad> rows;

  const EmbeddingGrad* find(Slot slot, std::uint32_t id) const;
};

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

// Cross-entropy of the two-way softmax against `label` (1 = correct window).
BackwardResult backward(std::span<const IdBundle> ws, int label,
                        const ModelState& s);

void adagrad_step(ModelState& s, const Gradients& g);

inline constexpr char kModelMagic[8] = {'M', 'D', 'I', 'S', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

void save_model(const ModelState& s, std::ostream& out);
ModelState load_model(std::istream& in);
void save_model_file(const ModelState& s, const std::string& path);
ModelState load_model_file(const std::string& path);

// The JSON header of a model file, for inspection.
std::string read_model_header(const std::string& path);

using RootTable = std::unordered_map<std::string, std::vector<double>>;

// Overwrites root rows present in `table` and clears their accumulators.
// Returns the number of rows overwritten.
std::size_t set_pretrained_roots(ModelState& s, const RootTable& table);

}  // namespace morphdis
