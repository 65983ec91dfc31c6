#include "pianodiff/chords.hpp"

#include <stdexcept>

namespace pianodiff {

namespace {
const std::vector<int> kMaj{0, 4, 7};
const std::vector<int> kMin{0, 3, 7};
const std::vector<int> kDim{0, 3, 6};
const std::vector<int> kAug{0, 4, 8};
const std::vector<int> kDom7{0, 4, 7, 10};
const std::vector<int> kMaj7{0, 4, 7, 11};
const std::vector<int> kMin7{0, 3, 7, 10};
}  // namespace

bool is_triad(ChordQuality q) {
  return q == ChordQuality::Maj || q == ChordQuality::Min ||
         q == ChordQuality::Dim || q == ChordQuality::Aug;
}

const std::vector<int>& quality_intervals(ChordQuality q) {
  switch (q) {
    case ChordQuality::Maj: return kMaj;
    case ChordQuality::Min: return kMin;
    case ChordQuality::Dim: return kDim;
    case ChordQuality::Aug: return kAug;
    case ChordQuality::Dom7: return kDom7;
    case ChordQuality::Maj7: return kMaj7;
    case ChordQuality::Min7: return kMin7;
  }
  throw std::invalid_argument("bad quality");
}

std::string quality_name(ChordQuality q) {
  switch (q) {
    case ChordQuality::Maj: return "maj";
    case ChordQuality::Min: return "min";
    case ChordQuality::Dim: return "dim";
    case ChordQuality::Aug: return "aug";
    case ChordQuality::Dom7: return "dom7";
    case ChordQuality::Maj7: return "maj7";
    case ChordQuality::Min7: return "min7";
  }
  return "?";
}

std::optional<ChordQuality> parse_quality(const std::string& name) {
  for (int i = 0; i < kNumQualities; ++i) {
    auto q = static_cast<ChordQuality>(i);
    if (quality_name(q) == name) return q;
  }
  // common aliases
  if (name == "M" || name == "major") return ChordQuality::Maj;
  if (name == "m" || name == "minor") return ChordQuality::Min;
  if (name == "7") return ChordQuality::Dom7;
  if (name == "M7") return ChordQuality::Maj7;
  if (name == "m7") return ChordQuality::Min7;
  return std::nullopt;
}

std::set<int> ChordLabel::pitch_classes() const {
  std::set<int> out;
  for (int iv : intervals()) out.insert((root + iv) % 12);
  return out;
}

namespace {
const char* kPcNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                            "F#", "G",  "G#", "A",  "A#", "B"};
}

std::string chord_name(const ChordLabel& c) {
  return std::string(kPcNames[c.root % 12]) + ":" + quality_name(c.quality);
}

std::optional<int> parse_pitch_class(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name[0] >= '0' && name[0] <= '9') {
    int v = 0;
    for (char ch : name) {
      if (ch < '0' || ch > '9') return std::nullopt;
      v = v * 10 + (ch - '0');
    }
    if (v > 11) return std::nullopt;
    return v;
  }
  static const int kBase[7] = {9, 11, 0, 2, 4, 5, 7};  // A..G
  char letter = name[0];
  if (letter >= 'a' && letter <= 'g') letter = static_cast<char>(letter - 'a' + 'A');
  if (letter < 'A' || letter > 'G') return std::nullopt;
  int pc = kBase[letter - 'A'];
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (name[i] == '#') pc += 1;
    else if (name[i] == 'b') pc -= 1;
    else return std::nullopt;
  }
  return ((pc % 12) + 12) % 12;
}

std::set<int> chord_to_pitches(const ChordLabel& label) {
  int root_midi = 60 + ((label.root % 12) + 12) % 12 - 24;
  std::set<int> out;
  for (int iv : label.intervals()) out.insert(root_midi + iv);
  return out;
}

std::set<int> KeySignature::scale() const {
  static const int kMajorSteps[7] = {0, 2, 4, 5, 7, 9, 11};
  static const int kMinorSteps[7] = {0, 2, 3, 5, 7, 8, 10};
  const int* steps = mode == Mode::Major ? kMajorSteps : kMinorSteps;
  std::set<int> out;
  for (int i = 0; i < 7; ++i) out.insert((tonic + steps[i]) % 12);
  return out;
}

}  // namespace pianodiff
