#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/decoder.hpp"
#include "morphdis/morph.hpp"

namespace morphdis {

struct Metrics {
  std::size_t tokens = 0;
  std::size_t ambiguous = 0;
  std::size_t ambiguous_correct = 0;  // exact analysis string on ambiguous tokens
  std::size_t pos_correct = 0;        // mainPos over all tokens
  std::size_t lemma_correct = 0;      // root over all tokens

  // nullopt when the denominator is zero.
  std::optional<double> ambiguous_accuracy() const;
  std::optional<double> pos_accuracy() const;
  std::optional<double> lemma_accuracy() const;

  Metrics& operator+=(const Metrics& o);
  bool operator==(const Metrics&) const = default;
};

// Predictions as candidate indices into the gold sentences.
Metrics evaluate(const std::vector<Sentence>& gold,
                 const std::vector<DecodeResult>& pred, const TagsetConfig& cfg);

// Predictions as a parallel corpus whose gold index marks the chosen analysis
// (for example a disambiguated file read back in eval mode).
Metrics evaluate(const std::vector<Sentence>& gold,
                 const std::vector<Sentence>& pred, const TagsetConfig& cfg);

std::string format_metrics_table(const Metrics& m);
std::string metrics_json(const Metrics& m);

}  // namespace morphdis
