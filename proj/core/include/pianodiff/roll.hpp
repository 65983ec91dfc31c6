#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pianodiff {

// Per-cell note state. MASK is the diffusion absorbing state and never
// appears in ground-truth rolls or emitted MIDI.
enum class NoteState : std::uint8_t { Onset = 0, Sustain = 1, Off = 2, Mask = 3 };

inline constexpr int kNumStates = 4;
inline constexpr int kNumPitches = 88;
inline constexpr int kLowestMidiPitch = 21;   // pitch index 0
inline constexpr int kHighestMidiPitch = 108; // pitch index 87
inline constexpr int kFramesPerBeat = 4;      // 16th-note grid
inline constexpr int kFramesPerBar = 16;      // 4/4 only

// T x 88 grid of note states, 16th-note frames.
class PianoRoll {
 public:
  PianoRoll() = default;
  explicit PianoRoll(int frames)
      : frames_(frames),
        cells_(static_cast<std::size_t>(frames) * kNumPitches,
               static_cast<std::uint8_t>(NoteState::Off)) {
    if (frames < 1) throw std::invalid_argument("PianoRoll: frames must be >= 1");
  }

  int frames() const { return frames_; }

  NoteState at(int t, int p) const {
    return static_cast<NoteState>(cells_[index(t, p)]);
  }
  void set(int t, int p, NoteState s) {
    cells_[index(t, p)] = static_cast<std::uint8_t>(s);
  }

  const std::vector<std::uint8_t>& raw() const { return cells_; }
  std::vector<std::uint8_t>& raw() { return cells_; }

  bool operator==(const PianoRoll& o) const = default;

  bool contains_mask() const;
  // SUSTAIN at t=0, or SUSTAIN not preceded by ONSET/SUSTAIN, is illegal.
  bool sustain_legal() const;
  int count_state(NoteState s) const;

  std::size_t index(int t, int p) const {
    return static_cast<std::size_t>(t) * kNumPitches + p;
  }

 private:
  int frames_ = 0;
  std::vector<std::uint8_t> cells_;
};

// T x 88 x 4 per-cell probability grid (soft form of a roll).
class StateDistribution {
 public:
  StateDistribution() = default;
  explicit StateDistribution(int frames)
      : frames_(frames),
        probs_(static_cast<std::size_t>(frames) * kNumPitches * kNumStates, 0.0) {}

  int frames() const { return frames_; }
  double at(int t, int p, int s) const { return probs_[index(t, p, s)]; }
  void set(int t, int p, int s, double v) { probs_[index(t, p, s)] = v; }
  const std::vector<double>& raw() const { return probs_; }

  std::size_t index(int t, int p, int s) const {
    return (static_cast<std::size_t>(t) * kNumPitches + p) * kNumStates + s;
  }

 private:
  int frames_ = 0;
  std::vector<double> probs_;
};

StateDistribution to_one_hot(const PianoRoll& roll);
// Inverse of to_one_hot for exactly-one-hot distributions; throws otherwise.
PianoRoll from_one_hot(const StateDistribution& dist);

struct TransposeResult {
  PianoRoll roll;
  int dropped_notes = 0;
};

// Uniform semitone shift; notes pushed past the 88-key range are dropped
// (whole ONSET..SUSTAIN run removed) and counted.
TransposeResult transpose(const PianoRoll& roll, int semitones);

// Extracts [start_bar, start_bar + n_bars) in 4/4 bars. SUSTAIN cells whose
// onset was cropped away are promoted to ONSET at frame 0.
PianoRoll crop_bars(const PianoRoll& roll, int start_bar, int n_bars = 8);

// Promotes any SUSTAIN without a preceding ONSET/SUSTAIN to ONSET.
PianoRoll sustain_repair(const PianoRoll& roll);

std::string state_name(NoteState s);

}  // namespace pianodiff
