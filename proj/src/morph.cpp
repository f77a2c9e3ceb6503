#include "morphdis/morph.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "morphdis/errors.hpp"

namespace morphdis {

namespace {

constexpr std::array<std::string_view, kNumSlots> kSlotNames = {
    "root",       "mainPos",    "minorPos", "person",
    "plurality",  "gender",     "possessive", "caseMarker",
    "polarity",   "tense",      "prevTags"};

void map_all(TagsetConfig& cfg, Slot slot,
             std::initializer_list<const char*> tags) {
  for (const char* t : tags) cfg.map(t, slot);
}

std::vector<std::string_view> split_on(std::string_view s, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

}  // namespace

std::string_view slot_name(Slot s) { return kSlotNames[slot_index(s)]; }

std::optional<Slot> slot_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumSlots; ++i)
    if (kSlotNames[i] == name) return static_cast<Slot>(i);
  return std::nullopt;
}

std::string FeatureBundle::to_string() const {
  std::string out;
  for (Slot s : kSlotOrder) {
    if (is_null(s)) continue;
    if (!out.empty()) out += ' ';
    out += slot_name(s);
    out += '=';
    out += (*this)[s];
  }
  return out;
}

void TagsetConfig::map(const std::string& tag, Slot slot, std::string value) {
  if (tag.empty()) throw ConfigError("empty tag in mapping");
  if (slot == Slot::kRoot || slot == Slot::kPrevTags)
    throw ConfigError("tag '" + tag + "' cannot map to slot " +
                      std::string(slot_name(slot)));
  if (value.empty()) value = tag;
  auto [it, inserted] = tag_to_slot.emplace(tag, TagMapping{slot, std::move(value)});
  if (!inserted)
    throw ConfigError("tag '" + tag + "' is mapped more than once");
}

void TagsetConfig::validate() const {
  if (!is_active(Slot::kRoot) || !is_active(Slot::kMainPos))
    throw ConfigError("tagset '" + language +
                      "': root and mainPos must be active");
  if (boundary_marker.find('+') != std::string::npos)
    throw ConfigError("boundary marker may not contain '+'");
}

std::vector<std::string> TagsetConfig::main_pos_tags() const {
  std::vector<std::string> out;
  for (const auto& [tag, m] : tag_to_slot)
    if (m.slot == Slot::kMainPos) out.push_back(tag);
  return out;
}

TagsetConfig turkish_tagset() {
  TagsetConfig cfg;
  cfg.language = "turkish";
  cfg.boundary_marker = "^DB";
  for (Slot s : {Slot::kRoot, Slot::kMainPos, Slot::kMinorPos, Slot::kPerson,
                 Slot::kPlurality, Slot::kPossessive, Slot::kCaseMarker,
                 Slot::kPolarity, Slot::kTense, Slot::kPrevTags})
    cfg.set_active(s);
  map_all(cfg, Slot::kMainPos,
          {"Noun", "Verb", "Adj", "Adverb", "Pron", "Num", "Conj", "Det",
           "Postp", "Ques", "Interj", "Punc", "Dup"});
  map_all(cfg, Slot::kMinorPos,
          {"Prop", "Inf", "Inf1", "Inf2", "Inf3", "PastPart", "FutPart",
           "PresPart", "Since", "While", "Without", "When", "AsIf",
           "ByDoingSo", "AfterDoingSo", "SinceDoingSo", "Caus", "Pass",
           "Reflex", "Recip", "Able", "Become", "Acquire", "Ness", "Agt",
           "With", "Rel", "Ly", "Dim", "Card", "Ord", "Distrib", "Real",
           "Range", "Percent"});
  map_all(cfg, Slot::kPerson,
          {"1sg", "2sg", "3sg", "1pl", "2pl", "3pl", "A1sg", "A2sg", "A3sg",
           "A1pl", "A2pl", "A3pl"});
  map_all(cfg, Slot::kPlurality, {"Singular", "Plural"});
  map_all(cfg, Slot::kPossessive,
          {"Pnon", "P1sg", "P2sg", "P3sg", "P1pl", "P2pl", "P3pl"});
  map_all(cfg, Slot::kCaseMarker,
          {"Nominative", "Accusative", "Dative", "Locative", "Ablative",
           "Genitive", "Instrumental", "Equative", "Nom", "Acc", "Dat", "Loc",
           "Abl", "Gen", "Ins", "Equ"});
  map_all(cfg, Slot::kPolarity, {"Positive", "Negative", "Pos", "Neg"});
  map_all(cfg, Slot::kTense,
          {"Aorist", "Past", "Narr", "Fut", "Prog1", "Prog2", "Pres", "Present",
           "Imp", "Opt", "Cond", "Desr", "Neces", "Cop"});
  return cfg;
}

TagsetConfig german_tagset() {
  TagsetConfig cfg;
  cfg.language = "german";
  cfg.boundary_marker = "^DB";
  for (Slot s : {Slot::kRoot, Slot::kMainPos, Slot::kMinorPos, Slot::kPerson,
                 Slot::kPlurality, Slot::kGender, Slot::kCaseMarker,
                 Slot::kTense})
    cfg.set_active(s);
  map_all(cfg, Slot::kMainPos,
          {"Noun", "Verb", "Adj", "Adverb", "Pron", "Det", "Prep", "Conj",
           "Num", "Part", "Punc"});
  map_all(cfg, Slot::kMinorPos, {"Prop", "Aux", "Modal", "Refl", "Poss"});
  map_all(cfg, Slot::kPerson, {"FirstPerson", "SecondPerson", "ThirdPerson"});
  map_all(cfg, Slot::kPlurality, {"Singular", "Plural"});
  map_all(cfg, Slot::kGender, {"Masculine", "Feminine", "Neuter", "NoGender"});
  map_all(cfg, Slot::kCaseMarker,
          {"Nominative", "Accusative", "Dative", "Genitive"});
  map_all(cfg, Slot::kTense,
          {"Present", "Imperfect", "Past", "Participle", "Infinitive",
           "Subjunctive", "Imperative"});
  return cfg;
}

TagsetConfig french_tagset() {
  TagsetConfig cfg;
  cfg.language = "french";
  cfg.boundary_marker = "^DB";
  for (Slot s : {Slot::kRoot, Slot::kMainPos, Slot::kPerson, Slot::kPlurality,
                 Slot::kGender, Slot::kTense})
    cfg.set_active(s);
  map_all(cfg, Slot::kMainPos,
          {"Noun", "Verb", "Adj", "Adverb", "Pron", "Det", "Prep", "Conj",
           "Num", "Punc"});
  map_all(cfg, Slot::kPerson, {"FirstPerson", "SecondPerson", "ThirdPerson"});
  map_all(cfg, Slot::kPlurality, {"Singular", "Plural"});
  map_all(cfg, Slot::kGender, {"Masculine", "Feminine"});
  map_all(cfg, Slot::kTense,
          {"Present", "Imperfect", "Past", "Participle", "Infinitive",
           "Subjunctive", "Future", "Conditional", "Imperative", "SimplePast"});
  return cfg;
}

TagsetConfig parse_tagset_config(std::istream& in) {
  TagsetConfig cfg;
  cfg.boundary_marker.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string directive;
    if (!(ls >> directive)) continue;
    std::vector<std::string> args;
    for (std::string a; ls >> a;) args.push_back(a);
    try {
      if (directive == "lang") {
        if (args.size() != 1) throw ConfigError("lang takes one argument");
        cfg.language = args[0];
      } else if (directive == "boundary") {
        if (args.size() > 1) throw ConfigError("boundary takes at most one argument");
        cfg.boundary_marker = args.empty() ? "" : args[0];
      } else if (directive == "active") {
        for (const auto& a : args) {
          auto s = slot_from_name(a);
          if (!s) throw ConfigError("unknown slot '" + a + "'");
          cfg.set_active(*s);
        }
      } else if (directive == "map") {
        if (args.size() < 2 || args.size() > 3)
          throw ConfigError("map takes <tag> <slot> [<value>]");
        auto s = slot_from_name(args[1]);
        if (!s) throw ConfigError("unknown slot '" + args[1] + "'");
        cfg.map(args[0], *s, args.size() == 3 ? args[2] : std::string{});
      } else {
        throw ConfigError("unknown directive '" + directive + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("tagset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

TagsetConfig load_tagset_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tagset config: " + path);
  return parse_tagset_config(in);
}

std::string write_tagset_config(const TagsetConfig& cfg) {
  std::ostringstream out;
  out << "lang " << cfg.language << '\n';
  out << "boundary";
  if (!cfg.boundary_marker.empty()) out << ' ' << cfg.boundary_marker;
  out << "\nactive";
  for (Slot s : kSlotOrder)
    if (cfg.is_active(s)) out << ' ' << slot_name(s);
  out << '\n';
  for (const auto& [tag, m] : cfg.tag_to_slot) {
    out << "map " << tag << ' ' << slot_name(m.slot);
    if (m.value != tag) out << ' ' << m.value;
    out << '\n';
  }
  return out.str();
}

MorphAnalysis parse_analysis(std::string_view raw, const TagsetConfig& cfg) {
  const std::size_t first_plus = raw.find('+');
  if (first_plus == std::string_view::npos)
    throw MalformedAnalysis("analysis has no '+' separator: '" + std::string(raw) + "'");
  if (first_plus == 0)
    throw MalformedAnalysis("analysis has an empty root: '" + std::string(raw) + "'");

  MorphAnalysis a;
  a.raw = std::string(raw);
  a.root = std::string(raw.substr(0, first_plus));

  // Every group, including the first, is introduced by '+'.
  std::string_view rest = raw.substr(first_plus);
  std::vector<std::string_view> segments;
  if (cfg.boundary_marker.empty())
    segments.push_back(rest);
  else
    segments = split_on(rest, cfg.boundary_marker);

  for (std::string_view seg : segments) {
    if (seg.size() < 2 || seg[0] != '+')
      throw MalformedAnalysis("empty tag in analysis: '" + std::string(raw) + "'");
    InflectionalGroup g;
    for (std::string_view tag : split_on(seg.substr(1), "+")) {
      if (tag.empty())
        throw MalformedAnalysis("empty tag in analysis: '" + std::string(raw) + "'");
      g.tags.emplace_back(tag);
    }
    a.groups.push_back(std::move(g));
  }
  return a;
}

std::string serialize_analysis(const MorphAnalysis& a, const TagsetConfig& cfg) {
  std::string out = a.root;
  for (std::size_t i = 0; i < a.groups.size(); ++i) {
    if (i > 0) out += cfg.boundary_marker;
    for (const auto& tag : a.groups[i].tags) {
      out += '+';
      out += tag;
    }
  }
  return out;
}

FeatureBundle extract_features(const MorphAnalysis& a, const TagsetConfig& cfg,
                               FeatureDiagnostics* diag) {
  FeatureBundle b;
  FeatureDiagnostics local;
  b[Slot::kRoot] = a.root;

  for (const auto& tag : a.last_group().tags) {
    auto it = cfg.tag_to_slot.find(tag);
    if (it == cfg.tag_to_slot.end()) {
      ++local.unmapped_tags;
      continue;
    }
    const TagMapping& m = it->second;
    if (!cfg.is_active(m.slot)) continue;
    // Last one wins on collision.
    if (!b.is_null(m.slot)) ++local.slot_collisions;
    b[m.slot] = m.value;
  }

  if (a.groups.size() > 1 && cfg.is_active(Slot::kPrevTags)) {
    std::string prev;
    for (std::size_t g = 0; g + 1 < a.groups.size(); ++g) {
      for (const auto& tag : a.groups[g].tags) {
        if (!prev.empty()) prev += '+';
        prev += tag;
      }
    }
    b[Slot::kPrevTags] = std::move(prev);
  }

  if (diag) *diag += local;
  return b;
}

}  // namespace morphdis
