// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "morphdis/decoder.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/pretrain.hpp"
#include "morphdis/synthetic.hpp"
#include "morphdis/trainer.hpp"

#include "gradcheck.hpp"
#include "support.hpp"

using namespace morphdis;
using testing::ToyDims;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradient_oracle() {
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (std::uint64_t m = 0; m < 20; ++m) {
    ToyDims d;
    d.window = m % 2 == 0 ? 2 : 3;
    d.root_dim = 2 + m % 4;
    d.pos_dim = 1 + m % 3;
    d.feat_dim = 1 + (m + 1) % 3;
    d.h1 = 2 + m % 4;
    d.h2 = 2 + (m + 2) % 4;
    const ModelState s = testing::toy_model(100 + m, d);
    Rng rng(500 + m);
    const auto ws = testing::random_window(s, rng);
    const auto gc = testing::check_gradients(s, ws, static_cast<int>(m % 2));
    entries += gc.entries;
    if (gc.max_rel > worst) {
      worst = gc.max_rel;
      where = gc.worst;
    }
  }
  return {worst < 1e-4, std::to_string(entries) + " entries over 20 models, max rel err " +
                            fmt("%.3g", worst) + (worst >= 1e-4 ? " at " + where : "")};
}

Outcome decoder_oracle() {
  std::size_t mismatches = 0;
  double max_diff = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    ToyDims d;
    d.window = 3;
    const ModelState s = testing::toy_model(1000 + i, d, 1.5);
    Rng rng(2000 + i);
    const EncodedSentence sent = testing::random_sentence(s, rng, 6, 4);
    const DecodeResult v = viterbi(sent, s);
    const DecodeResult b = brute_force_decode(sent, s);
    const double diff = std::fabs(v.score - b.score);
    max_diff = std::max(max_diff, diff);
    if (v.choice != b.choice || diff > 1e-9) ++mismatches;
  }
  return {mismatches == 0, std::to_string(200 - mismatches) +
                               "/200 argmax+score matches, max |score diff| " +
                               fmt("%.3g", max_diff)};
}

Outcome softmax_normalization() {
  double worst_sum = 0.0;
  std::size_t outside = 0;
  std::size_t calls = 0;
  const TagsetConfig cfg = turkish_tagset();
  for (std::uint64_t m = 0; m < 10; ++m) {
    SyntheticOptions so;
    so.sentences = 30;
    so.seed = 70 + m;
    Hyper h;
    h.seed = m + 1;
    const ModelState s =
        init_params(build_vocabularies(synthetic_corpus(so, cfg), cfg, 1), h, cfg);
    Rng rng(m);
    for (int k = 0; k < 1000; ++k, ++calls) {
      const auto ws = testing::random_window(s, rng);
      const WindowActivations a = forward_window_full(ws, s);
      worst_sum = std::max(worst_sum, std::fabs(a.probs.p_neg + a.probs.p_pos - 1.0));
      auto check = [&](const std::vector<double>& v) {
        for (double x : v)
          if (!(x > -1.0 && x < 1.0)) ++outside;
      };
      check(a.hidden);
      for (const auto& w : a.words) check(w.out);
    }
  }
  return {worst_sum <= 1e-12 && outside == 0,
          std::to_string(calls) + " calls, max |sum-1| " + fmt("%.3g", worst_sum) + ", " +
              std::to_string(outside) + " activations outside (-1,1)"};
}

Outcome window_combinatorics() {
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 50;
  so.seed = 31;
  const auto sents = synthetic_corpus(so, cfg);
  const auto enc = encode_corpus(sents, cfg, build_vocabularies(sents, cfg, 1));
  Hyper h;
  std::size_t positions = 0, bad = 0;
  const std::size_t cap = 3;
  for (const auto& s : enc) {
    TrainOptions uncapped;
    uncapped.neg_cap = SIZE_MAX;
    TrainOptions capped;
    capped.neg_cap = cap;
    Rng r1(1), r2(2);
    const auto all = generate_windows(s, h, uncapped, r1);
    const auto some = generate_windows(s, h, capped, r2);
    for (std::size_t t = 0; t < s.tokens.size(); ++t, ++positions) {
      const std::size_t prev = t == 0 ? 1 : s.tokens[t - 1].candidates.size();
      const std::size_t total = prev * s.tokens[t].candidates.size();
      std::size_t n_all = 0, pos_all = 0, n_some = 0, pos_some = 0;
      for (const auto& w : all)
        if (w.target == t) ++n_all, pos_all += static_cast<std::size_t>(w.label);
      for (const auto& w : some)
        if (w.target == t) ++n_some, pos_some += static_cast<std::size_t>(w.label);
      const bool ok = n_all == total && pos_all == 1 && pos_some == 1 &&
                      n_some - pos_some == std::min(total - 1, cap);
      if (!ok) ++bad;
    }
  }
  return {bad == 0, std::to_string(positions - bad) + "/" + std::to_string(positions) +
                        " positions correct (uncapped and M=" + std::to_string(cap) + ")"};
}

Outcome overfit() {
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 200;
  so.seed = 1;
  const auto train_s = synthetic_corpus(so, cfg);
  so.sentences = 50;
  so.seed = 2;
  const auto dev_s = synthetic_corpus(so, cfg);
  so.sentences = 100;
  so.seed = 3;
  const auto held_s = synthetic_corpus(so, cfg);

  const Vocabularies v = build_vocabularies(train_s, cfg);
  const Hyper h;
  const auto tr = encode_corpus(train_s, cfg, v);
  const auto dev = encode_corpus(dev_s, cfg, v);
  const auto held = encode_corpus(held_s, cfg, v);
  TrainOptions opt;
  opt.epochs = 15;
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(tr, dev, init_params(v, h, cfg), opt);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double a_train =
      ambiguous_tally(tr, decode_corpus(tr, r.model, opt.decode)).accuracy().value_or(0);
  const double a_held =
      ambiguous_tally(held, decode_corpus(held, r.model, opt.decode)).accuracy().value_or(0);
  return {a_train >= 0.95 && a_held >= 0.85 && secs < 300.0,
          "train " + fmt("%.4f", a_train) + " held-out " + fmt("%.4f", a_held) +
              " (best epoch " + std::to_string(r.report.best_epoch) + ", training " +
              fmt("%.1f", secs) + " s)"};
}

Outcome pretraining_direction() {
  const TagsetConfig cfg = turkish_tagset();
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SyntheticOptions so;
    so.seed = seed;
    const auto train_s = synthetic_corpus(so, cfg);
    const Vocabularies v = build_vocabularies(train_s, cfg);
    Hyper h;
    h.seed = seed;
    const ModelState random_init = init_params(v, h, cfg);
    const auto tr = encode_corpus(train_s, cfg, v);

    SyntheticOptions big = so;
    big.sentences = 20000;
    big.seed = 1000 + seed;
    SkipgramOptions sg;
    sg.seed = seed;
    sg.subsample_threshold = 0.0;
    const RootEmbeddings emb = train_skipgram(extract_roots(synthetic_corpus(big, cfg)), sg);
    ModelState pre_init = random_init;
    set_pretrained_roots(pre_init, emb.to_table());

    TrainOptions opt;
    opt.epochs = 1;
    opt.shuffle_seed = seed;
    const double l_rand = train(tr, {}, random_init, opt).report.epochs[0].mean_loss;
    const double l_pre = train(tr, {}, pre_init, opt).report.epochs[0].mean_loss;
    if (l_pre < l_rand) ++wins;
    detail += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + " " +
              fmt("%.4f", l_pre) + " vs " + fmt("%.4f", l_rand);
  }
  return {wins == 3, std::to_string(wins) + "/3 lower with pre-training (" + detail + ")"};
}

Outcome golden_parses() {
  struct Case {
    const TagsetConfig* cfg;
    const char* raw;
    const char* expected;
  };
  const TagsetConfig tr = turkish_tagset(), de = german_tagset(), fr = french_tagset();
  const std::vector<Case> cases = {
      {&tr, "dolar+Noun+3sg+Pnon+Nominative",
       "root=dolar mainPos=Noun person=3sg possessive=Pnon caseMarker=Nominative"},
      {&tr, "dola+Verb+Positive+Aorist+3sg",
       "root=dola mainPos=Verb person=3sg polarity=Positive tense=Aorist"},
      {&tr, "dol+Verb+Positive+Aorist+3sg",
       "root=dol mainPos=Verb person=3sg polarity=Positive tense=Aorist"},
      {&tr, "do+Noun+3pl+Pnon+Nominative",
       "root=do mainPos=Noun person=3pl possessive=Pnon caseMarker=Nominative"},
      {&tr, "ev+Noun+3sg+Pnon+Accusative",
       "root=ev mainPos=Noun person=3sg possessive=Pnon caseMarker=Accusative"},
      {&tr, "ev+Noun+3sg+P3sg+Nominative",
       "root=ev mainPos=Noun person=3sg possessive=P3sg caseMarker=Nominative"},
      {&tr, "yürü+Verb+Pos^DB+Noun+Inf",
       "root=yürü mainPos=Noun minorPos=Inf prevTags=Verb+Pos"},
      {&de, "haus+Noun+Neuter+Nominative+Singular",
       "root=haus mainPos=Noun plurality=Singular gender=Neuter caseMarker=Nominative"},
      {&de, "haus+Noun+Neuter+Dative+Singular",
       "root=haus mainPos=Noun plurality=Singular gender=Neuter caseMarker=Dative"},
      {&de, "haus+Noun+Neuter+Accusative+Singular",
       "root=haus mainPos=Noun plurality=Singular gender=Neuter caseMarker=Accusative"},
      {&de, "haus+Noun+Neuter+Accusative+Plural",
       "root=haus mainPos=Noun plurality=Plural gender=Neuter caseMarker=Accusative"},
      {&de, "haus+Noun+Neuter+Nominative+Plural",
       "root=haus mainPos=Noun plurality=Plural gender=Neuter caseMarker=Nominative"},
      {&de, "haus+Noun+Neuter+Genitive+Plural",
       "root=haus mainPos=Noun plurality=Plural gender=Neuter caseMarker=Genitive"},
      {&de, "haus+Noun+Neuter+Dative+Plural",
       "root=haus mainPos=Noun plurality=Plural gender=Neuter caseMarker=Dative"},
      {&de, "haus+Noun+Neuter+Genitive+Singular",
       "root=haus mainPos=Noun plurality=Singular gender=Neuter caseMarker=Genitive"},
      {&fr, "savoir+Noun+Masculine+Singular",
       "root=savoir mainPos=Noun plurality=Singular gender=Masculine"},
      {&fr, "savoir+Verb+Infinitive", "root=savoir mainPos=Verb tense=Infinitive"},
      {&fr, "savoir+Verb+Present+SecondPerson+Singular",
       "root=savoir mainPos=Verb person=SecondPerson plurality=Singular tense=Present"},
      {&fr, "savoir+Verb+Present+FirstPerson+Singular",
       "root=savoir mainPos=Verb person=FirstPerson plurality=Singular tense=Present"},
      {&fr, "savoir+Verb+Present+FirstPerson+Plural",
       "root=savoir mainPos=Verb person=FirstPerson plurality=Plural tense=Present"},
      {&fr, "savoir+Verb+Imperfect+ThirdPerson+Plural",
       "root=savoir mainPos=Verb person=ThirdPerson plurality=Plural tense=Imperfect"},
      {&fr, "savoir+Verb+Subjunctive+SecondPerson+Singular",
       "root=savoir mainPos=Verb person=SecondPerson plurality=Singular tense=Subjunctive"},
      {&fr, "savoir+Verb+Present+Participle",
       "root=savoir mainPos=Verb tense=Participle"},
      {&fr, "savoir+Verb+Past+Participle+Masculine+Singular",
       "root=savoir mainPos=Verb plurality=Singular gender=Masculine tense=Participle"},
  };
  std::size_t ok = 0;
  std::string first_bad;
  for (const auto& c : cases) {
    std::string got;
    try {
      const MorphAnalysis a = parse_analysis(c.raw, *c.cfg);
      got = extract_features(a, *c.cfg).to_string();
      if (serialize_analysis(a, *c.cfg) != c.raw) got = "<round-trip mismatch>";
    } catch (const std::exception& e) {
      got = std::string("<") + e.what() + ">";
    }
    if (got == c.expected)
      ++ok;
    else if (first_bad.empty())
      first_bad = std::string(c.raw) + " -> " + got;
  }
  return {ok == cases.size(), std::to_string(ok) + "/" + std::to_string(cases.size()) +
                                  " byte-exact" +
                                  (first_bad.empty() ? "" : ", first mismatch " + first_bad)};
}

Outcome determinism_serialization() {
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 40;
  so.seed = 9;
  const auto train_s = synthetic_corpus(so, cfg);
  so.sentences = 10;
  so.seed = 10;
  const auto dev_s = synthetic_corpus(so, cfg);
  auto run = [&] {
    const Vocabularies v = build_vocabularies(train_s, cfg);
    Hyper h;
    h.seed = 7;
    TrainOptions opt;
    opt.epochs = 2;
    opt.shuffle_seed = 7;
    const TrainResult r = train(encode_corpus(train_s, cfg, v), encode_corpus(dev_s, cfg, v),
                                init_params(v, h, cfg), opt);
    std::ostringstream out;
    save_model(r.model, out);
    return out.str();
  };
  const std::string a = run();
  const std::string b = run();
  const bool identical = a == b;

  std::istringstream in(a);
  const ModelState original = load_model(in);
  std::istringstream in2(a);
  const ModelState loaded = load_model(in2);
  Rng rng(123);
  std::size_t exact = 0;
  for (int k = 0; k < 100; ++k) {
    const auto ws = testing::random_window(original, rng);
    const WindowProbs p = forward_window(ws, original);
    const WindowProbs q = forward_window(ws, loaded);
    if (std::memcmp(&p.p_pos, &q.p_pos, sizeof(double)) == 0 &&
        std::memcmp(&p.p_neg, &q.p_neg, sizeof(double)) == 0)
      ++exact;
  }

  // Flip bytes at the start, middle and end of the payload.
  const std::size_t payload_begin = 8 + 4 + 8;
  const std::size_t payload_end = a.size() - 4;
  std::size_t detected = 0, tried = 0;
  for (std::size_t pos : {payload_begin, payload_begin + 17, (payload_begin + payload_end) / 2,
                          payload_end - 1}) {
    std::string bad = a;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x20);
    std::istringstream bin(bad);
    ++tried;
    try {
      load_model(bin);
    } catch (const ChecksumMismatch&) {
      ++detected;
    } catch (...) {
    }
  }
  return {identical && exact == 100 && detected == tried,
          std::string(identical ? "seeded runs byte-identical" : "seeded runs DIFFER") + ", " +
              std::to_string(exact) + "/100 window scores bit-exact after reload, " +
              std::to_string(detected) + "/" + std::to_string(tried) +
              " corruptions raise ChecksumMismatch"};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    std::function<Outcome()> run;
    double limit_s;
  };
  const std::vector<Entry> criteria = {
      {"gradient-oracle", gradient_oracle, 10.0},
      {"decoder-oracle", decoder_oracle, 30.0},
      {"softmax-normalization", softmax_normalization, 0.0},
      {"window-combinatorics", window_combinatorics, 0.0},
      {"overfit", overfit, 300.0},
      {"pretraining-direction", pretraining_direction, 0.0},
      {"golden-parses", golden_parses, 0.0},
      {"determinism-serialization", determinism_serialization, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", c.limit_s) + " s limit";
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
