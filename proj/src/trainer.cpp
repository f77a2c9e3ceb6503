#include "morphdis/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "morphdis/errors.hpp"

namespace morphdis {

void TrainOptions::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (dev_eval_every < 1) throw ConfigError("dev evaluation interval must be at least 1");
  if (!(singleton_unk_prob >= 0.0 && singleton_unk_prob <= 1.0))
    throw ConfigError("singleton UNK probability must lie in [0, 1]");
}

std::vector<WindowInstance> generate_windows(const EncodedSentence& sent,
                                             const Hyper& h,
                                             const TrainOptions& opt, Rng& rng) {
  for (std::size_t t = 0; t < sent.tokens.size(); ++t)
    if (!sent.tokens[t].gold)
      throw MissingGold("sentence " + sent.id + ": token " + std::to_string(t + 1) +
                        " has no gold analysis");

  const std::size_t n = h.window;
  const IdBundle bos = bos_bundle();
  auto gold_bundle = [&](std::ptrdiff_t u) -> const IdBundle& {
    if (u < 0) return bos;
    const EncodedToken& tok = sent.tokens[static_cast<std::size_t>(u)];
    return tok.candidates[*tok.gold];
  };

  std::vector<WindowInstance> out;
  for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
    const auto tt = static_cast<std::ptrdiff_t>(t);
    std::vector<IdBundle> prefix;
    for (std::ptrdiff_t u = tt - static_cast<std::ptrdiff_t>(n) + 1; u <= tt - 2; ++u)
      prefix.push_back(gold_bundle(u));

    // A padded predecessor contributes exactly one (BOS, gold) choice.
    std::vector<const IdBundle*> prev;
    std::size_t prev_gold = 0;
    if (t == 0) {
      prev.push_back(&bos);
    } else {
      const EncodedToken& p = sent.tokens[t - 1];
      for (const auto& c : p.candidates) prev.push_back(&c);
      prev_gold = *p.gold;
    }
    const EncodedToken& cur = sent.tokens[t];

    std::vector<WindowInstance> windows;
    std::vector<std::size_t> negatives;
    for (std::size_t a = 0; a < prev.size(); ++a) {
      for (std::size_t b = 0; b < cur.candidates.size(); ++b) {
        WindowInstance w;
        w.bundles = prefix;
        w.bundles.push_back(*prev[a]);
        w.bundles.push_back(cur.candidates[b]);
        w.label = (a == prev_gold && b == *cur.gold) ? 1 : 0;
        w.sentence_id = sent.id;
        w.target = t;
        if (w.label == 0) negatives.push_back(windows.size());
        windows.push_back(std::move(w));
      }
    }

    std::vector<bool> keep(windows.size(), true);
    if (negatives.size() > opt.neg_cap) {
      // Partial Fisher-Yates: the first neg_cap slots become the sample.
      for (std::size_t i = 0; i < opt.neg_cap; ++i) {
        std::size_t j = i + uniform_index(rng, negatives.size() - i);
        std::swap(negatives[i], negatives[j]);
      }
      for (std::size_t i = opt.neg_cap; i < negatives.size(); ++i)
        keep[negatives[i]] = false;
    }
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (keep[i]) out.push_back(std::move(windows[i]));
  }
  return out;
}

void TrainingReport::write_lines(std::ostream& out) const {
  for (const auto& e : epochs) {
    out << "epoch " << e.epoch << " loss " << e.mean_loss << " devAmbAcc ";
    if (e.dev_ambiguous_accuracy)
      out << *e.dev_ambiguous_accuracy;
    else
      out << "NA";
    out << '\n';
  }
}

std::string TrainingReport::to_json() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json row{{"epoch", e.epoch},
                       {"loss", e.mean_loss},
                       {"windows", e.windows},
                       {"dev_evaluated", e.dev_evaluated},
                       {"dev_ambiguous_correct", e.dev_ambiguous_correct},
                       {"dev_ambiguous_total", e.dev_ambiguous_total}};
    if (e.dev_ambiguous_accuracy)
      row["dev_ambiguous_accuracy"] = *e.dev_ambiguous_accuracy;
    else
      row["dev_ambiguous_accuracy"] = nullptr;
    list.push_back(row);
  }
  j["epochs"] = list;
  return j.dump(2);
}

AmbiguousTally ambiguous_tally(const std::vector<EncodedSentence>& gold,
                               const std::vector<DecodeResult>& pred) {
  if (gold.size() != pred.size())
    throw AlignmentError("gold and predicted sentence counts differ");
  AmbiguousTally tally;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& toks = gold[i].tokens;
    if (toks.size() != pred[i].choice.size())
      throw AlignmentError("sentence " + gold[i].id + ": token counts differ");
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (toks[t].candidates.size() < 2 || !toks[t].gold) continue;
      ++tally.total;
      if (pred[i].choice[t] == *toks[t].gold) ++tally.correct;
    }
  }
  return tally;
}

std::vector<bool> singleton_roots(const Vocabularies& v) {
  const SlotVocab& roots = v[Slot::kRoot];
  std::vector<bool> mask(roots.size(), false);
  for (std::uint32_t id = SlotVocab::kNumReserved; id < roots.size(); ++id)
    mask[id] = roots.count(id) == 1;
  return mask;
}

void substitute_singletons(std::vector<WindowInstance>& windows,
                           const std::vector<bool>& singleton, double prob,
                           Rng& rng) {
  if (prob <= 0.0) return;
  constexpr std::size_t kRootSlot = slot_index(Slot::kRoot);
  for (auto& w : windows)
    for (auto& b : w.bundles) {
      const std::uint32_t id = b[kRootSlot];
      if (id < singleton.size() && singleton[id] && uniform01(rng) < prob)
        b[kRootSlot] = SlotVocab::kUnkId;
    }
}

namespace {

double run_serial(ModelState& state, const std::vector<WindowInstance>& windows,
                  std::size_t epoch) {
  double sum = 0.0;
  for (const auto& w : windows) {
    BackwardResult r = backward(w.bundles, w.label, state);
    if (!std::isfinite(r.loss))
      throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch) +
                          ", sentence " + w.sentence_id + ", token " +
                          std::to_string(w.target + 1));
    sum += r.loss;
    adagrad_step(state, r.grads);
  }
  return sum;
}

double run_blocked(ModelState& state, const std::vector<WindowInstance>& windows,
                   std::size_t epoch, std::size_t jobs) {
  double sum = 0.0;
  std::vector<BackwardResult> results(jobs);
  for (std::size_t start = 0; start < windows.size(); start += jobs) {
    const std::size_t count = std::min(jobs, windows.size() - start);
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static) num_threads(jobs)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto& w = windows[start + static_cast<std::size_t>(i)];
      results[static_cast<std::size_t>(i)] = backward(w.bundles, w.label, state);
    }
    for (std::size_t i = 0; i < count; ++i) {
      const auto& w = windows[start + i];
      if (!std::isfinite(results[i].loss))
        throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch) +
                            ", sentence " + w.sentence_id + ", token " +
                            std::to_string(w.target + 1));
      sum += results[i].loss;
      adagrad_step(state, results[i].grads);
    }
  }
  return sum;
}

}  // namespace

TrainResult train(const std::vector<EncodedSentence>& train_set,
                  const std::vector<EncodedSentence>& dev_set, ModelState init,
                  const TrainOptions& opt) {
  opt.validate();
  if (train_set.empty()) throw EmptyCorpus("training corpus has no sentences");

  const std::vector<bool> singleton = singleton_roots(init.vocab);
  ModelState state = std::move(init);
  TrainResult result;
  std::optional<ModelState> best;
  double best_acc = -1.0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    Rng rng(opt.shuffle_seed + epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);

    std::vector<WindowInstance> windows;
    for (std::size_t idx : order) {
      auto ws = generate_windows(train_set[idx], state.hyper, opt, rng);
      std::move(ws.begin(), ws.end(), std::back_inserter(windows));
    }
    substitute_singletons(windows, singleton, opt.singleton_unk_prob, rng);

    const double sum = opt.jobs > 1 ? run_blocked(state, windows, epoch, opt.jobs)
                                    : run_serial(state, windows, epoch);

    EpochStats stats;
    stats.epoch = epoch;
    stats.windows = windows.size();
    stats.mean_loss = windows.empty() ? 0.0 : sum / static_cast<double>(windows.size());

    if (epoch % opt.dev_eval_every == 0 || epoch == opt.epochs) {
      stats.dev_evaluated = true;
      const AmbiguousTally tally =
          ambiguous_tally(dev_set, decode_corpus(dev_set, state, opt.decode));
      stats.dev_ambiguous_correct = tally.correct;
      stats.dev_ambiguous_total = tally.total;
      stats.dev_ambiguous_accuracy = tally.accuracy();
      // Strictly better only: ties keep the earliest epoch.
      if (stats.dev_ambiguous_accuracy && *stats.dev_ambiguous_accuracy > best_acc) {
        best_acc = *stats.dev_ambiguous_accuracy;
        best = state;
        result.report.best_epoch = epoch;
      }
    }
    result.report.epochs.push_back(stats);
    if (opt.on_epoch) opt.on_epoch(stats);
  }

  if (best) {
    result.model = std::move(*best);
  } else {
    result.model = std::move(state);
    result.report.best_epoch = opt.epochs;
  }
  return result;
}

}  // namespace morphdis
