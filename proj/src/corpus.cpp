#include "morphdis/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "morphdis/checksum.hpp"
#include "morphdis/errors.hpp"

namespace morphdis {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Token parse_token_line(const std::string& line, std::size_t lineno,
                       const TagsetConfig& cfg, ReadMode mode,
                       GoldConvention conv) {
  std::vector<std::string> fields = split_tabs(line);
  if (fields.size() < 2)
    throw FormatError("token line with no analyses", lineno);
  Token tok;
  tok.surface = fields[0];
  if (tok.surface.empty()) throw FormatError("empty surface form", lineno);

  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    std::string field = fields[i];
    if (conv == GoldConvention::kMarker && !field.empty() &&
        field[0] == kGoldMarker) {
      field.erase(0, 1);
      if (mode != ReadMode::kDecode) {
        if (tok.gold) throw FormatError("more than one gold-marked analysis", lineno);
        tok.gold = i - 1;
      }
    }
    if (field.empty()) throw FormatError("empty analysis field", lineno);
    if (!seen.insert(field).second)
      throw FormatError("duplicate candidate analysis '" + field + "'", lineno);
    try {
      tok.candidates.push_back(parse_analysis(field, cfg));
    } catch (const MalformedAnalysis& e) {
      throw MalformedAnalysis("line " + std::to_string(lineno) + ": " + e.what());
    }
  }

  if (mode != ReadMode::kDecode) {
    if (conv == GoldConvention::kFirst) {
      tok.gold = 0;
    } else if (!tok.gold) {
      throw FormatError("no gold-marked analysis", lineno);
    }
  }
  return tok;
}

std::uint64_t to_u64(const std::string& s, std::size_t lineno) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad integer '" + s + "'", lineno);
  }
}

}  // namespace

std::vector<Sentence> read_corpus(std::istream& in, const TagsetConfig& cfg,
                                  ReadMode mode, GoldConvention conv) {
  std::vector<Sentence> out;
  std::optional<Sentence> open;
  std::size_t open_line = 0;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    if (line == "<S>") {
      if (open)
        throw FormatError("unterminated sentence block opened at line " +
                              std::to_string(open_line),
                          lineno);
      open.emplace();
      open->id = std::to_string(out.size() + 1);
      open_line = lineno;
    } else if (line == "</S>") {
      if (!open) throw FormatError("</S> without matching <S>", lineno);
      if (open->tokens.empty()) throw FormatError("empty sentence block", lineno);
      out.push_back(std::move(*open));
      open.reset();
    } else {
      if (!open) throw FormatError("token line outside a sentence block", lineno);
      open->tokens.push_back(parse_token_line(line, lineno, cfg, mode, conv));
    }
  }
  if (open)
    throw FormatError("unterminated sentence block at end of input", open_line);
  return out;
}

std::vector<Sentence> read_corpus_file(const std::string& path,
                                       const TagsetConfig& cfg, ReadMode mode,
                                       GoldConvention conv) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus: " + path);
  return read_corpus(in, cfg, mode, conv);
}

void write_corpus(std::ostream& out, const std::vector<Sentence>& sentences,
                  GoldConvention conv) {
  for (const auto& s : sentences) {
    out << "<S>\n";
    for (const auto& tok : s.tokens) {
      out << tok.surface;
      if (conv == GoldConvention::kFirst && tok.gold) {
        out << '\t' << tok.candidates[*tok.gold].raw;
        for (std::size_t i = 0; i < tok.candidates.size(); ++i)
          if (i != *tok.gold) out << '\t' << tok.candidates[i].raw;
      } else {
        for (std::size_t i = 0; i < tok.candidates.size(); ++i) {
          out << '\t';
          if (conv == GoldConvention::kMarker && tok.gold == i) out << kGoldMarker;
          out << tok.candidates[i].raw;
        }
      }
      out << '\n';
    }
    out << "</S>\n";
  }
}

SlotVocab::SlotVocab() {
  add(kNullValue, 0);
  add(kUnkValue, 0);
  add(kBosValue, 0);
}

std::uint32_t SlotVocab::add(const std::string& value, std::uint64_t count) {
  auto id = static_cast<std::uint32_t>(values_.size());
  if (!index_.emplace(value, id).second)
    throw std::invalid_argument("duplicate vocabulary value '" + value + "'");
  values_.push_back(value);
  counts_.push_back(count);
  return id;
}

std::uint32_t SlotVocab::lookup(const std::string& value) const {
  auto it = index_.find(value);
  return it == index_.end() ? kUnkId : it->second;
}

std::uint32_t Vocabularies::fingerprint() const {
  std::ostringstream out;
  dump_vocabularies(out, *this);
  return crc32c(out.str());
}

IdBundle bos_bundle() {
  IdBundle b;
  b.fill(SlotVocab::kBosId);
  return b;
}

Vocabularies build_vocabularies(const std::vector<Sentence>& sentences,
                                const TagsetConfig& cfg,
                                std::uint64_t min_root_count) {
  std::array<std::map<std::string, std::uint64_t>, kNumSlots> counts;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) {
      ++tokens;
      for (const auto& cand : tok.candidates) {
        FeatureBundle b = extract_features(cand, cfg);
        for (Slot slot : kSlotOrder)
          if (cfg.is_active(slot) && !b.is_null(slot))
            ++counts[slot_index(slot)][b[slot]];
      }
    }
  }
  if (tokens == 0) throw EmptyCorpus("cannot build vocabularies from an empty corpus");

  Vocabularies v;
  for (Slot slot : kSlotOrder) {
    std::vector<std::pair<std::string, std::uint64_t>> entries(
        counts[slot_index(slot)].begin(), counts[slot_index(slot)].end());
    // Descending count, then byte order: independent of corpus order.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [value, count] : entries) {
      if (slot == Slot::kRoot && count < min_root_count) continue;
      if (v[slot].contains(value)) continue;  // a literal "<UNK>" root, say
      v[slot].add(value, count);
    }
  }
  return v;
}

IdBundle bundle_to_ids(const FeatureBundle& b, const Vocabularies& v) {
  IdBundle ids{};
  for (Slot s : kSlotOrder)
    ids[slot_index(s)] = b.is_null(s) ? SlotVocab::kNullId : v[s].lookup(b[s]);
  return ids;
}

void dump_vocabularies(std::ostream& out, const Vocabularies& v) {
  for (Slot s : kSlotOrder) {
    const SlotVocab& sv = v[s];
    for (std::uint32_t id = 0; id < sv.size(); ++id)
      out << slot_name(s) << ' ' << id << ' ' << sv.count(id) << ' '
          << sv.value(id) << '\n';
  }
}

Vocabularies parse_vocabularies(std::istream& in) {
  Vocabularies v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t p1 = line.find(' ');
    std::size_t p2 = p1 == std::string::npos ? p1 : line.find(' ', p1 + 1);
    std::size_t p3 = p2 == std::string::npos ? p2 : line.find(' ', p2 + 1);
    if (p3 == std::string::npos) throw FormatError("malformed vocabulary line", lineno);
    auto slot = slot_from_name(line.substr(0, p1));
    if (!slot) throw FormatError("unknown slot in vocabulary", lineno);
    auto id = static_cast<std::uint32_t>(to_u64(line.substr(p1 + 1, p2 - p1 - 1), lineno));
    std::uint64_t count = to_u64(line.substr(p2 + 1, p3 - p2 - 1), lineno);
    std::string value = line.substr(p3 + 1);
    SlotVocab& sv = v[*slot];
    if (id < SlotVocab::kNumReserved) {
      if (sv.value(id) != value)
        throw FormatError("reserved id " + std::to_string(id) + " has wrong value", lineno);
      continue;
    }
    if (id != sv.size()) throw FormatError("vocabulary ids are not dense", lineno);
    try {
      sv.add(value, count);
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), lineno);
    }
  }
  return v;
}

EncodedSentence encode_sentence(const Sentence& s, const TagsetConfig& cfg,
                                const Vocabularies& v) {
  EncodedSentence out;
  out.id = s.id;
  out.tokens.reserve(s.tokens.size());
  for (const auto& tok : s.tokens) {
    EncodedToken et;
    et.gold = tok.gold;
    et.candidates.reserve(tok.candidates.size());
    for (const auto& cand : tok.candidates)
      et.candidates.push_back(bundle_to_ids(extract_features(cand, cfg), v));
    out.tokens.push_back(std::move(et));
  }
  return out;
}

std::vector<EncodedSentence> encode_corpus(const std::vector<Sentence>& sents,
                                           const TagsetConfig& cfg,
                                           const Vocabularies& v) {
  std::vector<EncodedSentence> out;
  out.reserve(sents.size());
  for (const auto& s : sents) out.push_back(encode_sentence(s, cfg, v));
  return out;
}

}  // namespace morphdis
