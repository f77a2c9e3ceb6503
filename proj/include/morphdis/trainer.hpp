#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/decoder.hpp"
#include "morphdis/model.hpp"
#include "morphdis/rng.hpp"

namespace morphdis {

struct WindowInstance {
  std::vector<IdBundle> bundles;
  int label = 0;
  std::string sentence_id;
  std::size_t target = 0;  // 0-based index of the window's last token
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t windows = 0;
  std::optional<double> dev_ambiguous_accuracy;
  std::size_t dev_ambiguous_correct = 0;
  std::size_t dev_ambiguous_total = 0;
  bool dev_evaluated = false;
};

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t neg_cap = 20;
  double singleton_unk_prob = 0.5;
  std::uint64_t shuffle_seed = 1;
  std::size_t dev_eval_every = 1;
  // > 1 selects the block-parallel mode: gradients of `jobs` consecutive
  // windows are computed concurrently against the same state, then applied
  // in window order. Results differ from the serial reference.
  std::size_t jobs = 1;
  DecodeOptions decode;
  // Called after every epoch; may be empty.
  std::function<void(const EpochStats&)> on_epoch;

  void validate() const;
};

// Windows for every position of a gold-labeled sentence. For target t the
// window holds gold analyses (or BOS) at t-n+1..t-2 and every candidate pair
// at (t-1, t); label 1 iff both are gold. Negatives beyond `neg_cap` are
// subsampled without replacement.
std::vector<WindowInstance> generate_windows(const EncodedSentence& sent,
                                             const Hyper& h,
                                             const TrainOptions& opt, Rng& rng);

struct TrainingReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;

  // `epoch <k> loss <float> devAmbAcc <float|NA>` per epoch.
  void write_lines(std::ostream& out) const;
  std::string to_json() const;
};

struct TrainResult {
  ModelState model;
  TrainingReport report;
};

// Ambiguous-token accuracy of decoded choices against gold indices.
struct AmbiguousTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> accuracy() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(total);
  }
};
AmbiguousTally ambiguous_tally(const std::vector<EncodedSentence>& gold,
                               const std::vector<DecodeResult>& pred);

// Root ids whose training count is exactly one.
std::vector<bool> singleton_roots(const Vocabularies& v);

// Replaces singleton root ids with UNK, independently per occurrence.
void substitute_singletons(std::vector<WindowInstance>& windows,
                           const std::vector<bool>& singleton, double prob,
                           Rng& rng);

TrainResult train(const std::vector<EncodedSentence>& train_set,
                  const std::vector<EncodedSentence>& dev_set, ModelState init,
                  const TrainOptions& opt);

}  // namespace morphdis
