#include "morphdis/decoder.hpp"

#include <cmath>
#include <map>

#include <omp.h>

#include "morphdis/errors.hpp"

namespace morphdis {

namespace {

using Pos = std::ptrdiff_t;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t radix(const EncodedSentence& s, Pos u) {
  return u < 0 ? 1 : s.tokens[static_cast<std::size_t>(u)].candidates.size();
}

void check_candidates(const EncodedSentence& sent) {
  for (std::size_t t = 0; t < sent.tokens.size(); ++t)
    if (sent.tokens[t].candidates.empty())
      throw EmptyCandidates("sentence " + sent.id + ": token " +
                            std::to_string(t + 1) + " has no candidates");
}

// Layer-(a) outputs for every candidate of a sentence, plus BOS.
class WordCache {
 public:
  WordCache(const EncodedSentence& sent, const ModelState& s, std::size_t jobs)
      : h1_(s.hyper.h1), bos_(forward_word(bos_bundle(), s).out) {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    offsets_.resize(sent.tokens.size());
    for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
      offsets_[t] = cells.size();
      for (std::size_t c = 0; c < sent.tokens[t].candidates.size(); ++c)
        cells.emplace_back(t, c);
    }
    data_.resize(cells.size() * h1_);
    const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(static) num_threads(jobs) if (jobs > 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto [t, c] = cells[static_cast<std::size_t>(k)];
      const WordVec wv = forward_word(sent.tokens[t].candidates[c], s);
      std::copy(wv.out.begin(), wv.out.end(),
                data_.begin() + static_cast<std::ptrdiff_t>(k) * static_cast<std::ptrdiff_t>(h1_));
    }
  }

  std::span<const double> bos() const { return bos_; }
  std::span<const double> word(Pos t, std::size_t c) const {
    if (t < 0 || c == kBos) return bos_;
    return {data_.data() + (offsets_[static_cast<std::size_t>(t)] + c) * h1_, h1_};
  }

 private:
  std::size_t h1_;
  std::vector<double> bos_;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

DecodeResult empty_result() { return {}; }

}  // namespace

std::size_t lattice_order(const ModelState& s, const DecodeOptions& opt) {
  const std::size_t full = s.hyper.window - 1;
  if (opt.max_order == 0) return full <= 2 ? full : 1;
  return full < opt.max_order ? full : opt.max_order;
}

double score_window(const EncodedSentence& sent, std::size_t t,
                    std::span<const std::size_t> choices, const ModelState& s) {
  const std::size_t n = s.hyper.window;
  if (choices.size() != n) throw WindowLenMismatch("score_window: wrong context length");
  std::vector<WordVec> words;
  words.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Pos u = static_cast<Pos>(t) - static_cast<Pos>(n - 1) + static_cast<Pos>(k);
    if (u < 0 || choices[k] == kBos) {
      if (u >= 0) throw Error("score_window: BOS inside the sentence");
      words.push_back(forward_word(bos_bundle(), s));
    } else {
      words.push_back(forward_word(
          sent.tokens[static_cast<std::size_t>(u)].candidates.at(choices[k]), s));
    }
  }
  std::vector<std::span<const double>> outs;
  for (const auto& w : words) outs.emplace_back(w.out);
  WindowScratch scratch;
  return window_log_pos(outs, s, scratch);
}

double score_transition(const EncodedSentence& sent, std::size_t t,
                        std::size_t i, std::size_t j,
                        std::span<const std::size_t> context,
                        const ModelState& s) {
  const std::size_t n = s.hyper.window;
  if (context.size() != n - 2)
    throw WindowLenMismatch("score_transition: context must hold n-2 choices");
  if (t == 0 && i != kBos) throw Error("score_transition: predecessor of token 0 is BOS");
  std::vector<std::size_t> choices(context.begin(), context.end());
  choices.push_back(i);
  choices.push_back(j);
  return score_window(sent, t, choices, s);
}

// Serial reference. States are explicit tuples looked up through a map.
DecodeResult viterbi(const EncodedSentence& sent, const ModelState& s,
                     const DecodeOptions& opt) {
  check_candidates(sent);
  const Pos T = static_cast<Pos>(sent.tokens.size());
  if (T == 0) return empty_result();
  const Pos k = static_cast<Pos>(lattice_order(s, opt));
  const Pos n = static_cast<Pos>(s.hyper.window);

  struct Layer {
    std::vector<std::vector<std::size_t>> tuples;
    std::map<std::vector<std::size_t>, std::size_t> index;
    std::vector<double> delta, trans;
    std::vector<std::size_t> bp;
  };
  std::vector<Layer> layers(static_cast<std::size_t>(T));

  for (Pos t = 0; t < T; ++t) {
    Layer& L = layers[static_cast<std::size_t>(t)];
    // Enumerate tuples over positions t-k+1..t, oldest digit most significant.
    std::vector<std::size_t> tuple(static_cast<std::size_t>(k), 0);
    while (true) {
      L.index.emplace(tuple, L.tuples.size());
      L.tuples.push_back(tuple);
      Pos d = k - 1;
      for (; d >= 0; --d) {
        auto& digit = tuple[static_cast<std::size_t>(d)];
        if (++digit < radix(sent, t - k + 1 + d)) break;
        digit = 0;
      }
      if (d < 0) break;
    }

    for (const auto& st : L.tuples) {
      auto choice_at = [&](Pos u, std::size_t h, std::size_t pred) -> std::size_t {
        if (u < 0) return kBos;
        if (u >= t - k + 1) return st[static_cast<std::size_t>(u - (t - k + 1))];
        if (u == t - k) return h;
        // Older than the state: follow backpointers from the predecessor.
        Pos tau = t - 1;
        std::size_t cur = pred;
        while (tau > u + k - 1) {
          cur = layers[static_cast<std::size_t>(tau)].bp[cur];
          --tau;
        }
        return layers[static_cast<std::size_t>(tau)].tuples[cur][0];
      };

      double best = kNegInf, best_trans = 0.0;
      std::size_t best_bp = 0;
      const std::size_t hs = t == 0 ? 1 : radix(sent, t - k);
      for (std::size_t h = 0; h < hs; ++h) {
        std::size_t pred = 0;
        double prev = 0.0;
        if (t > 0) {
          std::vector<std::size_t> ptuple{h};
          ptuple.insert(ptuple.end(), st.begin(), st.end() - 1);
          pred = layers[static_cast<std::size_t>(t - 1)].index.at(ptuple);
          prev = layers[static_cast<std::size_t>(t - 1)].delta[pred];
        }
        std::vector<std::size_t> window;
        for (Pos u = t - n + 1; u <= t; ++u) window.push_back(choice_at(u, h, pred));
        const double sc = score_window(sent, static_cast<std::size_t>(t), window, s);
        const double v = prev + sc;
        if (v > best) {
          best = v;
          best_trans = sc;
          best_bp = pred;
        }
      }
      L.delta.push_back(best);
      L.trans.push_back(best_trans);
      L.bp.push_back(best_bp);
    }
  }

  const Layer& last = layers.back();
  std::size_t cur = 0;
  for (std::size_t i = 1; i < last.delta.size(); ++i)
    if (last.delta[i] > last.delta[cur]) cur = i;

  DecodeResult r;
  r.score = last.delta[cur];
  r.choice.resize(static_cast<std::size_t>(T));
  r.token_scores.resize(static_cast<std::size_t>(T));
  for (Pos t = T - 1; t >= 0; --t) {
    const Layer& L = layers[static_cast<std::size_t>(t)];
    r.choice[static_cast<std::size_t>(t)] = L.tuples[cur].back();
    r.token_scores[static_cast<std::size_t>(t)] = L.trans[cur];
    cur = L.bp[cur];
  }
  return r;
}

DecodeResult viterbi_omp(const EncodedSentence& sent, const ModelState& s,
                         const DecodeOptions& opt) {
  check_candidates(sent);
  const Pos T = static_cast<Pos>(sent.tokens.size());
  if (T == 0) return empty_result();
  const Pos k = static_cast<Pos>(lattice_order(s, opt));
  const Pos n = static_cast<Pos>(s.hyper.window);
  const std::size_t jobs = opt.jobs == 0 ? 1 : opt.jobs;
  const WordCache cache(sent, s, jobs);

  // Mixed-radix state indexing: the newest position is the least significant digit.
  // span_prod(t, a, b) = product of radices of positions a..b.
  auto prod = [&](Pos a, Pos b) {
    std::size_t p = 1;
    for (Pos u = a; u <= b; ++u) p *= radix(sent, u);
    return p;
  };

  std::vector<std::vector<double>> delta(static_cast<std::size_t>(T));
  std::vector<std::vector<double>> trans(static_cast<std::size_t>(T));
  std::vector<std::vector<std::size_t>> bp(static_cast<std::size_t>(T));

  for (Pos t = 0; t < T; ++t) {
    const std::size_t states = prod(t - k + 1, t);
    const std::size_t hs = t == 0 ? 1 : radix(sent, t - k);
    const std::size_t newest = radix(sent, t);
    const std::size_t pred_stride = prod(t - k + 1, t - 1);
    auto& D = delta[static_cast<std::size_t>(t)];
    auto& R = trans[static_cast<std::size_t>(t)];
    auto& B = bp[static_cast<std::size_t>(t)];
    D.assign(states, kNegInf);
    R.assign(states, 0.0);
    B.assign(states, 0);

#pragma omp parallel num_threads(jobs) if (jobs > 1)
    {
      WindowScratch scratch;
      std::vector<std::span<const double>> words(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
      for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(states); ++si) {
        const auto st = static_cast<std::size_t>(si);
        auto state_digit = [&](Pos u) {
          // digit of position u (t-k+1 <= u <= t) in state st at time t
          return (st / prod(u + 1, t)) % radix(sent, u);
        };
        double best = kNegInf, best_trans = 0.0;
        std::size_t best_bp = 0;
        for (std::size_t h = 0; h < hs; ++h) {
          const std::size_t pred = t == 0 ? 0 : h * pred_stride + st / newest;
          for (Pos u = t - n + 1; u <= t; ++u) {
            std::size_t c;
            if (u < 0) {
              c = kBos;
            } else if (u >= t - k + 1) {
              c = state_digit(u);
            } else if (u == t - k) {
              c = h;
            } else {
              Pos tau = t - 1;
              std::size_t cur = pred;
              while (tau > u + k - 1) {
                cur = bp[static_cast<std::size_t>(tau)][cur];
                --tau;
              }
              c = cur / prod(tau - k + 2, tau);
            }
            words[static_cast<std::size_t>(u - (t - n + 1))] = cache.word(u, c);
          }
          const double sc = window_log_pos(words, s, scratch);
          const double prev = t == 0 ? 0.0 : delta[static_cast<std::size_t>(t - 1)][pred];
          const double v = prev + sc;
          if (v > best) {
            best = v;
            best_trans = sc;
            best_bp = pred;
          }
        }
        D[st] = best;
        R[st] = best_trans;
        B[st] = best_bp;
      }
    }
  }

  const auto& last = delta.back();
  std::size_t cur = 0;
  for (std::size_t i = 1; i < last.size(); ++i)
    if (last[i] > last[cur]) cur = i;

  DecodeResult r;
  r.score = last[cur];
  r.choice.resize(static_cast<std::size_t>(T));
  r.token_scores.resize(static_cast<std::size_t>(T));
  for (Pos t = T - 1; t >= 0; --t) {
    r.choice[static_cast<std::size_t>(t)] = cur % radix(sent, t);
    r.token_scores[static_cast<std::size_t>(t)] = trans[static_cast<std::size_t>(t)][cur];
    cur = bp[static_cast<std::size_t>(t)][cur];
  }
  return r;
}

DecodeResult brute_force_decode(const EncodedSentence& sent, const ModelState& s) {
  check_candidates(sent);
  const std::size_t T = sent.tokens.size();
  if (T == 0) return empty_result();
  double total = 1.0;
  for (const auto& tok : sent.tokens) total *= static_cast<double>(tok.candidates.size());
  if (total > kBruteForceLimit)
    throw TooLarge("brute-force decode over " + std::to_string(total) +
                   " assignments exceeds the guard");

  const WordCache cache(sent, s, 1);
  const Pos n = static_cast<Pos>(s.hyper.window);
  WindowScratch scratch;
  std::vector<std::span<const double>> words(static_cast<std::size_t>(n));

  std::vector<std::size_t> assign(T, 0);
  std::vector<double> per_token(T);
  DecodeResult best;
  best.score = kNegInf;
  while (true) {
    double sum = 0.0;
    for (Pos t = 0; t < static_cast<Pos>(T); ++t) {
      for (Pos u = t - n + 1; u <= t; ++u)
        words[static_cast<std::size_t>(u - (t - n + 1))] =
            u < 0 ? cache.bos() : cache.word(u, assign[static_cast<std::size_t>(u)]);
      per_token[static_cast<std::size_t>(t)] = window_log_pos(words, s, scratch);
      sum += per_token[static_cast<std::size_t>(t)];
    }
    if (sum > best.score) {
      best.score = sum;
      best.choice = assign;
      best.token_scores = per_token;
    }
    // Odometer, last position fastest: lexicographic order.
    std::size_t d = T;
    while (d > 0) {
      --d;
      if (++assign[d] < sent.tokens[d].candidates.size()) break;
      assign[d] = 0;
      if (d == 0) return best;
    }
  }
}

std::vector<DecodeResult> decode_corpus(const std::vector<EncodedSentence>& sents,
                                        const ModelState& s,
                                        const DecodeOptions& opt) {
  for (const auto& sent : sents) check_candidates(sent);
  std::vector<DecodeResult> out(sents.size());
  const std::size_t jobs = opt.jobs == 0 ? 1 : opt.jobs;
  DecodeOptions inner = opt;
  inner.jobs = 1;
  const auto n = static_cast<std::ptrdiff_t>(sents.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs) if (jobs > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = viterbi_omp(sents[static_cast<std::size_t>(i)], s, inner);
  return out;
}

std::vector<DecodeResult> decode_corpus_serial(
    const std::vector<EncodedSentence>& sents, const ModelState& s,
    const DecodeOptions& opt) {
  std::vector<DecodeResult> out;
  out.reserve(sents.size());
  for (const auto& sent : sents) out.push_back(viterbi(sent, s, opt));
  return out;
}

}  // namespace morphdis
