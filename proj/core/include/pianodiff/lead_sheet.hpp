#pragma once

#include "pianodiff/chords.hpp"
#include "pianodiff/roll.hpp"

namespace pianodiff {

struct ChordSpan {
  double start_beat = 0.0;
  double end_beat = 0.0;  // exclusive
  ChordLabel chord;

  int start_frame() const;
  int end_frame() const;

  bool operator==(const ChordSpan&) const = default;
};

// Melody and chord tones combined in one roll channel, plus the symbolic
// annotations the metrics need.
struct LeadSheet {
  PianoRoll roll;
  KeySignature key;
  std::vector<ChordSpan> chords;
};

struct BuildLeadSheetResult {
  LeadSheet sheet;
  int uncovered_frames = 0;  // frames not covered by any chord span
};

// Writes each chord span's tones as ONSET at the span start and SUSTAIN for
// the remainder of the span into a copy of the melody roll. Chord/melody
// cell collisions are an error; uncovered frames stay OFF and are counted.
BuildLeadSheetResult build_lead_sheet(const PianoRoll& melody_roll,
                                      const std::vector<ChordSpan>& chords,
                                      const KeySignature& key);

// Expands spans into one label per beat; beats with no span are nullopt.
std::vector<std::optional<ChordLabel>> chords_per_beat(
    const std::vector<ChordSpan>& chords, int n_beats);

}  // namespace pianodiff
