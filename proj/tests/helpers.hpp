#pragma once

#include <algorithm>

#include "pianodiff/chords.hpp"
#include "pianodiff/rng.hpp"
#include "pianodiff/roll.hpp"
#include "pianodiff/trainer.hpp"

// roll with random non-overlapping notes, sustains always legal
inline pianodiff::PianoRoll random_legal_roll(int frames, std::uint64_t seed,
                                              double density = 0.08) {
  using namespace pianodiff;
  PianoRoll roll(frames);
  Rng rng(seed);
  for (int p = 0; p < kNumPitches; ++p) {
    int t = 0;
    while (t < frames) {
      if (rng.uniform() < density) {
        int len = std::min(1 + static_cast<int>(rng.below(6)), frames - t);
        roll.set(t, p, NoteState::Onset);
        for (int k = 1; k < len; ++k) roll.set(t + k, p, NoteState::Sustain);
        t += len;
      } else {
        ++t;
      }
    }
  }
  return roll;
}

// four 8-bar C-major items with distinct diatonic progressions; the
// accompaniment is the block-chord realization of the progression
inline pianodiff::Corpus toy_corpus() {
  using namespace pianodiff;
  const std::vector<std::vector<ChordLabel>> progressions = {
      {{0, ChordQuality::Maj}, {5, ChordQuality::Maj}, {7, ChordQuality::Maj}, {0, ChordQuality::Maj}},
      {{0, ChordQuality::Maj}, {9, ChordQuality::Min}, {2, ChordQuality::Min}, {7, ChordQuality::Maj}},
      {{5, ChordQuality::Maj}, {4, ChordQuality::Min}, {9, ChordQuality::Min}, {7, ChordQuality::Maj}},
      {{9, ChordQuality::Min}, {5, ChordQuality::Maj}, {0, ChordQuality::Maj}, {7, ChordQuality::Maj}}};
  const int scale_steps[7] = {0, 2, 4, 5, 7, 9, 11};
  Corpus corpus;
  for (std::size_t item = 0; item < progressions.size(); ++item) {
    const auto& prog = progressions[item];
    PianoRoll melody(8 * kFramesPerBar);
    for (int beat = 0; beat < 32; ++beat) {
      // simple diatonic quarter-note line, one octave above the chords
      int midi = 72 + scale_steps[(beat + static_cast<int>(item)) % 7];
      int p = midi - kLowestMidiPitch;
      melody.set(beat * kFramesPerBeat, p, NoteState::Onset);
      for (int k = 1; k < kFramesPerBeat; ++k)
        melody.set(beat * kFramesPerBeat + k, p, NoteState::Sustain);
    }
    std::vector<ChordSpan> spans;
    PianoRoll acc(8 * kFramesPerBar);
    for (int c = 0; c < 4; ++c) {
      spans.push_back({c * 8.0, (c + 1) * 8.0, prog[c]});
      for (int beat = c * 8; beat < (c + 1) * 8; ++beat) {
        for (int midi : chord_to_pitches(prog[c])) {
          int p = midi - kLowestMidiPitch;
          acc.set(beat * kFramesPerBeat, p, NoteState::Onset);
          for (int k = 1; k < kFramesPerBeat; ++k)
            acc.set(beat * kFramesPerBeat + k, p, NoteState::Sustain);
        }
      }
    }
    auto built = build_lead_sheet(melody, spans, {0, Mode::Major});
    corpus.push_back({built.sheet, acc});
  }
  return corpus;
}

// block chords: ONSET on every beat, SUSTAIN through the rest of the beat
inline pianodiff::PianoRoll chord_block_roll(const pianodiff::ChordLabel& c,
                                             int bars) {
  using namespace pianodiff;
  PianoRoll roll(bars * kFramesPerBar);
  for (int beat = 0; beat < bars * 4; ++beat) {
    for (int midi : chord_to_pitches(c)) {
      int p = midi - kLowestMidiPitch;
      roll.set(beat * kFramesPerBeat, p, NoteState::Onset);
      for (int k = 1; k < kFramesPerBeat; ++k)
        roll.set(beat * kFramesPerBeat + k, p, NoteState::Sustain);
    }
  }
  return roll;
}
