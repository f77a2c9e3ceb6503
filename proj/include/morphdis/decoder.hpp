#pragma once

// Lattice decoding over candidate analyses.
//
// A lattice state at position t holds the last `order` choices
// (c[t-order+1] .. c[t]); window positions older than the state are filled by
// following backpointers. With order = window - 1 the search is exact. The
// default (max_order = 0) is exact for windows of up to 3 words and first
// order above that: the scorer only sees gold context during training, and
// searching over deeper non-gold contexts decodes worse, not better.
//
// Two implementations share that recurrence: `viterbi` is the serial
// reference (recomputes every window from ids), `viterbi_omp` caches the
// per-word layer and scores all transitions of a position in parallel. They
// return bit-identical results.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/model.hpp"

namespace morphdis {

// Marks an out-of-sentence position in explicit contexts.
inline constexpr std::size_t kBos = std::numeric_limits<std::size_t>::max();

struct DecodeOptions {
  // 0 selects the default described above.
  std::size_t max_order = 0;
  std::size_t jobs = 1;
};

// Effective lattice state order for a model/options pair.
std::size_t lattice_order(const ModelState& s, const DecodeOptions& opt);

struct DecodeResult {
  std::vector<std::size_t> choice;
  double score = 0.0;
  // Log-score of the transition into each chosen candidate.
  std::vector<double> token_scores;
};

// ln p_pos of the window ending at token t (0-based) whose last two positions
// carry candidate i of token t-1 (kBos when t == 0) and candidate j of token t.
// `context` gives the choices for tokens t-n+1 .. t-2, oldest first; entries
// for positions before the sentence must be kBos.
double score_transition(const EncodedSentence& sent, std::size_t t,
                        std::size_t i, std::size_t j,
                        std::span<const std::size_t> context,
                        const ModelState& s);

// Score of a window given one choice per position t-n+1 .. t (kBos outside).
double score_window(const EncodedSentence& sent, std::size_t t,
                    std::span<const std::size_t> choices, const ModelState& s);

DecodeResult viterbi(const EncodedSentence& sent, const ModelState& s,
                     const DecodeOptions& opt = {});
DecodeResult viterbi_omp(const EncodedSentence& sent, const ModelState& s,
                         const DecodeOptions& opt = {});

inline constexpr double kBruteForceLimit = 1e6;

// Exhaustive search over every full assignment. Ties go to the
// lexicographically smallest choice vector.
DecodeResult brute_force_decode(const EncodedSentence& sent, const ModelState& s);

// Decodes sentences independently; opt.jobs threads over sentences.
std::vector<DecodeResult> decode_corpus(const std::vector<EncodedSentence>& sents,
                                        const ModelState& s,
                                        const DecodeOptions& opt = {});

// Reference: one sentence after another through `viterbi`.
std::vector<DecodeResult> decode_corpus_serial(
    const std::vector<EncodedSentence>& sents, const ModelState& s,
    const DecodeOptions& opt = {});

}  // namespace morphdis
