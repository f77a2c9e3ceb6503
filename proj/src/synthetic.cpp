#include "morphdis/synthetic.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "morphdis/errors.hpp"
#include "morphdis/rng.hpp"

namespace morphdis {

namespace {

const std::array<std::string, kSyntheticClasses> kClassNames = {"Noun", "Verb", "Adj",
                                                                 "Adverb"};

std::string root_name(std::size_t cls, std::size_t i) {
  static constexpr std::array<char, kSyntheticClasses> kPrefix = {'n', 'v', 'a', 'r'};
  std::string s(1, kPrefix[cls]);
  if (i < 10) s.push_back('0');
  s += std::to_string(i);
  return s;
}

std::string analysis_text(std::size_t cls, std::size_t root_idx) {
  static constexpr std::array<const char*, 3> kCases = {"Nom", "Acc", "Dat"};
  static constexpr std::array<const char*, 3> kTenses = {"Aorist", "Past", "Fut"};
  std::string s = root_name(cls, root_idx) + "+" + kClassNames[cls];
  switch (cls) {
    case 0:
      s += "+A3sg+Pnon+";
      s += kCases[root_idx % kCases.size()];
      break;
    case 1:
      s += "+Pos+";
      s += kTenses[root_idx % kTenses.size()];
      s += "+A3sg";
      break;
    default:
      break;
  }
  return s;
}

}  // namespace

const std::string& synthetic_class_name(std::size_t c) { return kClassNames.at(c); }

std::size_t synthetic_next_class(std::size_t prev) {
  if (prev >= kSyntheticClasses) return 0;
  return (prev + 1) % kSyntheticClasses;
}

std::vector<Sentence> synthetic_corpus(const SyntheticOptions& opt,
                                       const TagsetConfig& cfg) {
  if (opt.min_length == 0 || opt.max_length < opt.min_length)
    throw ConfigError("synthetic sentence lengths must satisfy 1 <= min <= max");
  if (opt.roots_per_class == 0) throw ConfigError("need at least one root per class");
  if (opt.max_candidates < 2 || opt.max_candidates > kSyntheticClasses)
    throw ConfigError("max candidates must lie in [2, 4]");

  Rng rng(opt.seed);
  std::vector<Sentence> out;
  out.reserve(opt.sentences);
  for (std::size_t s = 0; s < opt.sentences; ++s) {
    Sentence sent;
    sent.id = std::to_string(s + 1);
    const std::size_t len =
        opt.min_length + uniform_index(rng, opt.max_length - opt.min_length + 1);
    std::size_t prev = kSyntheticClasses;
    for (std::size_t t = 0; t < len; ++t) {
      const bool ambiguous = uniform01(rng) < opt.ambiguous_rate;
      std::vector<std::size_t> classes;
      std::size_t gold_cls;
      if (ambiguous) {
        gold_cls = synthetic_next_class(prev);
        const std::size_t n = 2 + uniform_index(rng, opt.max_candidates - 1);
        std::vector<std::size_t> others;
        for (std::size_t c = 0; c < kSyntheticClasses; ++c)
          if (c != gold_cls) others.push_back(c);
        shuffle(others, rng);
        classes.push_back(gold_cls);
        classes.insert(classes.end(), others.begin(), others.begin() + (n - 1));
        shuffle(classes, rng);
      } else {
        gold_cls = uniform_index(rng, kSyntheticClasses);
        classes.push_back(gold_cls);
      }

      Token tok;
      std::size_t gold_idx = 0;
      for (std::size_t i = 0; i < classes.size(); ++i) {
        const std::size_t root = uniform_index(rng, opt.roots_per_class);
        tok.candidates.push_back(parse_analysis(analysis_text(classes[i], root), cfg));
        if (classes[i] == gold_cls) gold_idx = i;
      }
      tok.gold = gold_idx;
      tok.surface = tok.candidates[gold_idx].root;
      sent.tokens.push_back(std::move(tok));
      prev = gold_cls;
    }
    out.push_back(std::move(sent));
  }
  return out;
}

}  // namespace morphdis
