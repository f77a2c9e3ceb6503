#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "morphdis/morph.hpp"

namespace morphdis {

struct Token {
  std::string surface;
  std::vector<MorphAnalysis> candidates;
  std::optional<std::size_t> gold;

  bool ambiguous() const { return candidates.size() >= 2; }
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
};

enum class ReadMode { kTrain, kEval, kDecode };

// How labeled files mark the correct analysis. kFirst: the gold analysis is
// the first candidate. kMarker: the gold analysis carries a leading '*'.
enum class GoldConvention { kFirst, kMarker };

inline constexpr char kGoldMarker = '*';

// Corpus files: `<S>` ... `</S>` blocks, one token per line as
// surface TAB analysis [TAB analysis]...; '#' lines and blank lines are skipped.
std::vector<Sentence> read_corpus(std::istream& in, const TagsetConfig& cfg,
                                  ReadMode mode,
                                  GoldConvention conv = GoldConvention::kFirst);
std::vector<Sentence> read_corpus_file(const std::string& path,
                                       const TagsetConfig& cfg, ReadMode mode,
                                       GoldConvention conv = GoldConvention::kFirst);

// Inverse of read_corpus for labeled data; with kFirst the gold candidate is
// written first, with kMarker candidate order is preserved and gold is starred.
void write_corpus(std::ostream& out, const std::vector<Sentence>& sentences,
                  GoldConvention conv = GoldConvention::kFirst);

// Per-slot string <-> dense id table with reserved NULL/UNK/BOS entries.
class SlotVocab {
 public:
  static constexpr std::uint32_t kNullId = 0;
  static constexpr std::uint32_t kUnkId = 1;
  static constexpr std::uint32_t kBosId = 2;
  static constexpr std::uint32_t kNumReserved = 3;

  static constexpr const char* kNullValue = "<NULL>";
  static constexpr const char* kUnkValue = "<UNK>";
  static constexpr const char* kBosValue = "<BOS>";

  SlotVocab();

  // Appends a new value; throws std::invalid_argument on duplicates.
  std::uint32_t add(const std::string& value, std::uint64_t count);

  // Unknown values resolve to kUnkId.
  std::uint32_t lookup(const std::string& value) const;
  bool contains(const std::string& value) const { return index_.count(value) > 0; }

  const std::string& value(std::uint32_t id) const { return values_.at(id); }
  std::uint64_t count(std::uint32_t id) const { return counts_.at(id); }
  std::size_t size() const { return values_.size(); }

  bool operator==(const SlotVocab& o) const {
    return values_ == o.values_ && counts_ == o.counts_;
  }

 private:
  std::vector<std::string> values_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

using IdBundle = std::array<std::uint32_t, kNumSlots>;

struct Vocabularies {
  std::array<SlotVocab, kNumSlots> slots;

  SlotVocab& operator[](Slot s) { return slots[slot_index(s)]; }
  const SlotVocab& operator[](Slot s) const { return slots[slot_index(s)]; }

  // CRC-32C of the dump text; identifies a vocabulary across files.
  std::uint32_t fingerprint() const;

  bool operator==(const Vocabularies&) const = default;
};

// Every slot holds the BOS value.
IdBundle bos_bundle();

Vocabularies build_vocabularies(const std::vector<Sentence>& sentences,
                                const TagsetConfig& cfg,
                                std::uint64_t min_root_count = 2);

IdBundle bundle_to_ids(const FeatureBundle& b, const Vocabularies& v);

// `<slot> <id> <count> <value>` per line.
void dump_vocabularies(std::ostream& out, const Vocabularies& v);
Vocabularies parse_vocabularies(std::istream& in);

// Id-resolved view of a sentence, the unit consumed by trainer and decoder.
struct EncodedToken {
  std::vector<IdBundle> candidates;
  std::optional<std::size_t> gold;
};

struct EncodedSentence {
  std::string id;
  std::vector<EncodedToken> tokens;
};

EncodedSentence encode_sentence(const Sentence& s, const TagsetConfig& cfg,
                                const Vocabularies& v);
std::vector<EncodedSentence> encode_corpus(const std::vector<Sentence>& sents,
                                           const TagsetConfig& cfg,
                                           const Vocabularies& v);

}  // namespace morphdis
