#pragma once

// Seeded synthetic corpora with a learnable disambiguation rule.
//
// Every analysis belongs to one of four part-of-speech classes and its root
// is drawn from a per-class inventory. Unambiguous tokens take a random class;
// an ambiguous token offers 2-4 candidates with distinct classes, and its gold
// class is a fixed function of the previous token's gold class.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/morph.hpp"

namespace morphdis {

struct SyntheticOptions {
  std::size_t sentences = 200;
  std::size_t min_length = 4;
  std::size_t max_length = 12;
  std::size_t roots_per_class = 15;
  double ambiguous_rate = 0.6;
  std::size_t max_candidates = 4;
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kSyntheticClasses = 4;

// "Noun", "Verb", "Adj", "Adverb".
const std::string& synthetic_class_name(std::size_t c);

// Gold class of an ambiguous token after a token of class `prev`;
// prev == kSyntheticClasses stands for the sentence start.
std::size_t synthetic_next_class(std::size_t prev);

// Candidate order is randomized, so gold sits at a random index.
std::vector<Sentence> synthetic_corpus(const SyntheticOptions& opt,
                                       const TagsetConfig& cfg);

}  // namespace morphdis
