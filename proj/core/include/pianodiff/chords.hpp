#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pianodiff {

enum class ChordQuality : std::uint8_t {
  Maj = 0,
  Min = 1,
  Dim = 2,
  Aug = 3,
  Dom7 = 4,
  Maj7 = 5,
  Min7 = 6,
};

inline constexpr int kNumQualities = 7;

bool is_triad(ChordQuality q);
const std::vector<int>& quality_intervals(ChordQuality q);
std::string quality_name(ChordQuality q);
std::optional<ChordQuality> parse_quality(const std::string& name);

struct ChordLabel {
  int root = 0;  // pitch class 0..11
  ChordQuality quality = ChordQuality::Maj;

  std::vector<int> intervals() const { return quality_intervals(quality); }
  // pitch classes of the chord tones
  std::set<int> pitch_classes() const;

  bool operator==(const ChordLabel&) const = default;
};

std::string chord_name(const ChordLabel& c);
// Parses e.g. "C", "F#", "Bb" or a numeric pitch class "0".."11".
std::optional<int> parse_pitch_class(const std::string& name);

// Root placed in the C4 octave (MIDI 60..71) by pitch class, then shifted
// down two octaves; chord tones are that root plus the quality intervals.
std::set<int> chord_to_pitches(const ChordLabel& label);

enum class Mode : std::uint8_t { Major = 0, Minor = 1 };

struct KeySignature {
  int tonic = 0;  // pitch class 0..11
  Mode mode = Mode::Major;

  // pitch classes of the (natural-minor for Minor) scale
  std::set<int> scale() const;

  bool operator==(const KeySignature&) const = default;
};

}  // namespace pianodiff
