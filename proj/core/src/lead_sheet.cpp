#include "pianodiff/lead_sheet.hpp"

#include <cmath>
#include <stdexcept>

namespace pianodiff {

int ChordSpan::start_frame() const {
  return static_cast<int>(std::floor(start_beat * kFramesPerBeat + 0.5));
}
int ChordSpan::end_frame() const {
  return static_cast<int>(std::floor(end_beat * kFramesPerBeat + 0.5));
}

BuildLeadSheetResult build_lead_sheet(const PianoRoll& melody_roll,
                                      const std::vector<ChordSpan>& chords,
                                      const KeySignature& key) {
  BuildLeadSheetResult out;
  out.sheet.roll = melody_roll;
  out.sheet.key = key;
  out.sheet.chords = chords;
  const int frames = melody_roll.frames();

  std::vector<char> covered(static_cast<std::size_t>(frames), 0);
  for (const auto& span : chords) {
    int s = span.start_frame();
    int e = std::min(span.end_frame(), frames);
    if (s < 0 || s >= e) continue;
    for (int midi : chord_to_pitches(span.chord)) {
      int p = midi - kLowestMidiPitch;
      if (p < 0 || p >= kNumPitches) continue;
      for (int t = s; t < e; ++t) {
        if (melody_roll.at(t, p) != NoteState::Off)
          throw std::invalid_argument("build_lead_sheet: chord tone collides with melody at frame " +
                                      std::to_string(t) + " midi " + std::to_string(midi));
        out.sheet.roll.set(t, p, t == s ? NoteState::Onset : NoteState::Sustain);
      }
    }
    for (int t = s; t < e; ++t) covered[t] = 1;
  }
  for (int t = 0; t < frames; ++t)
    if (!covered[t]) ++out.uncovered_frames;
  return out;
}

std::vector<std::optional<ChordLabel>> chords_per_beat(
    const std::vector<ChordSpan>& chords, int n_beats) {
  std::vector<std::optional<ChordLabel>> out(n_beats);
  for (const auto& span : chords) {
    int sb = static_cast<int>(std::floor(span.start_beat + 0.5));
    int eb = static_cast<int>(std::floor(span.end_beat + 0.5));
    for (int b = std::max(0, sb); b < std::min(eb, n_beats); ++b) out[b] = span.chord;
  }
  return out;
}

}  // namespace pianodiff
