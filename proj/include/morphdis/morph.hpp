#pragma once

// Morphological analyses and the fixed-slot feature schema.
//
// An analysis string looks like "yürü+Verb+Pos^DB+Noun+Inf": the root is
// everything before the first '+', the remainder is split into inflectional
// groups at each derivational-boundary marker, and each group into tags at '+'.
// Features are read from the last group only; earlier groups collapse into the
// prevTags slot.

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphdis {

enum class Slot : std::uint8_t {
  kRoot = 0,
  kMainPos,
  kMinorPos,
  kPerson,
  kPlurality,
  kGender,
  kPossessive,
  kCaseMarker,
  kPolarity,
  kTense,
  kPrevTags,
};

inline constexpr std::size_t kNumSlots = 11;

// Concatenation order used by the network and by every serialized artifact.
inline constexpr std::array<Slot, kNumSlots> kSlotOrder = {
    Slot::kRoot,       Slot::kMainPos,  Slot::kMinorPos, Slot::kPerson,
    Slot::kPlurality,  Slot::kGender,   Slot::kPossessive,
    Slot::kCaseMarker, Slot::kPolarity, Slot::kTense,    Slot::kPrevTags};

constexpr std::size_t slot_index(Slot s) { return static_cast<std::size_t>(s); }

std::string_view slot_name(Slot s);
std::optional<Slot> slot_from_name(std::string_view name);

struct InflectionalGroup {
  std::vector<std::string> tags;

  bool operator==(const InflectionalGroup&) const = default;
};

struct MorphAnalysis {
  std::string raw;
  std::string root;
  std::vector<InflectionalGroup> groups;

  const InflectionalGroup& last_group() const { return groups.back(); }
  bool operator==(const MorphAnalysis&) const = default;
};

// One value per slot; the empty string is the NULL value.
class FeatureBundle {
 public:
  const std::string& operator[](Slot s) const { return slots_[slot_index(s)]; }
  std::string& operator[](Slot s) { return slots_[slot_index(s)]; }
  bool is_null(Slot s) const { return slots_[slot_index(s)].empty(); }

  // "root=ev mainPos=Noun ..." over non-NULL slots, in slot order.
  std::string to_string() const;

  bool operator==(const FeatureBundle&) const = default;

 private:
  std::array<std::string, kNumSlots> slots_{};
};

struct TagMapping {
  Slot slot;
  std::string value;

  bool operator==(const TagMapping&) const = default;
};

struct TagsetConfig {
  std::string language;
  std::string boundary_marker = "^DB";
  std::array<bool, kNumSlots> active{};
  std::map<std::string, TagMapping> tag_to_slot;

  bool is_active(Slot s) const { return active[slot_index(s)]; }
  void set_active(Slot s, bool on = true) { active[slot_index(s)] = on; }

  // Adds `tag -> (slot, value)`; an empty value means the tag itself.
  // Throws ConfigError when the tag is already mapped or the slot is not a tag slot.
  void map(const std::string& tag, Slot slot, std::string value = {});

  // Throws ConfigError if root or mainPos is inactive.
  void validate() const;

  // The main-POS tag set is exactly the tags mapped to Slot::kMainPos.
  std::vector<std::string> main_pos_tags() const;

  bool operator==(const TagsetConfig&) const = default;
};

TagsetConfig turkish_tagset();
TagsetConfig german_tagset();
TagsetConfig french_tagset();

// Directive file: `lang`, `boundary`, `active`, `map`; '#' starts a comment line.
TagsetConfig parse_tagset_config(std::istream& in);
TagsetConfig load_tagset_config(const std::string& path);
std::string write_tagset_config(const TagsetConfig& cfg);

MorphAnalysis parse_analysis(std::string_view raw, const TagsetConfig& cfg);
std::string serialize_analysis(const MorphAnalysis& a, const TagsetConfig& cfg);

struct FeatureDiagnostics {
  std::size_t unmapped_tags = 0;
  std::size_t slot_collisions = 0;

  FeatureDiagnostics& operator+=(const FeatureDiagnostics& o) {
    unmapped_tags += o.unmapped_tags;
    slot_collisions += o.slot_collisions;
    return *this;
  }
};

FeatureBundle extract_features(const MorphAnalysis& a, const TagsetConfig& cfg,
                               FeatureDiagnostics* diag = nullptr);

}  // namespace morphdis
