#include "pianodiff/roll.hpp"

namespace pianodiff {

bool PianoRoll::contains_mask() const {
  for (auto c : cells_)
    if (c == static_cast<std::uint8_t>(NoteState::Mask)) return true;
  return false;
}

bool PianoRoll::sustain_legal() const {
  for (int p = 0; p < kNumPitches; ++p) {
    for (int t = 0; t < frames_; ++t) {
      if (at(t, p) != NoteState::Sustain) continue;
      if (t == 0) return false;
      NoteState prev = at(t - 1, p);
      if (prev != NoteState::Onset && prev != NoteState::Sustain) return false;
    }
  }
  return true;
}

int PianoRoll::count_state(NoteState s) const {
  int n = 0;
  for (auto c : cells_)
    if (c == static_cast<std::uint8_t>(s)) ++n;
  return n;
}

StateDistribution to_one_hot(const PianoRoll& roll) {
  StateDistribution dist(roll.frames());
  for (int t = 0; t < roll.frames(); ++t)
    for (int p = 0; p < kNumPitches; ++p)
      dist.set(t, p, static_cast<int>(roll.at(t, p)), 1.0);
  return dist;
}

PianoRoll from_one_hot(const StateDistribution& dist) {
  PianoRoll roll(dist.frames());
  for (int t = 0; t < dist.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      int hot = -1;
      for (int s = 0; s < kNumStates; ++s) {
        double v = dist.at(t, p, s);
        if (v == 1.0) {
          if (hot >= 0) throw std::invalid_argument("from_one_hot: cell not one-hot");
          hot = s;
        } else if (v != 0.0) {
          throw std::invalid_argument("from_one_hot: cell not one-hot");
        }
      }
      if (hot < 0) throw std::invalid_argument("from_one_hot: cell not one-hot");
      roll.set(t, p, static_cast<NoteState>(hot));
    }
  }
  return roll;
}

namespace {

struct NoteRun {
  int start;
  int end;  // exclusive
};

std::vector<NoteRun> runs_for_pitch(const PianoRoll& roll, int p) {
  std::vector<NoteRun> runs;
  int t = 0;
  while (t < roll.frames()) {
    if (roll.at(t, p) == NoteState::Onset) {
      int e = t + 1;
      while (e < roll.frames() && roll.at(e, p) == NoteState::Sustain) ++e;
      runs.push_back({t, e});
      t = e;
    } else {
      ++t;
    }
  }
  return runs;
}

}  // namespace

TransposeResult transpose(const PianoRoll& roll, int semitones) {
  TransposeResult out{PianoRoll(roll.frames()), 0};
  for (int p = 0; p < kNumPitches; ++p) {
    int np = p + semitones;
    auto runs = runs_for_pitch(roll, p);
    if (np < 0 || np >= kNumPitches) {
      out.dropped_notes += static_cast<int>(runs.size());
      continue;
    }
    for (const auto& r : runs) {
      out.roll.set(r.start, np, NoteState::Onset);
      for (int t = r.start + 1; t < r.end; ++t) out.roll.set(t, np, NoteState::Sustain);
    }
  }
  return out;
}

PianoRoll crop_bars(const PianoRoll& roll, int start_bar, int n_bars) {
  int start = start_bar * kFramesPerBar;
  int len = n_bars * kFramesPerBar;
  if (start_bar < 0 || n_bars < 1 || start + len > roll.frames())
    throw std::out_of_range("crop_bars: range outside roll");
  PianoRoll out(len);
  for (int t = 0; t < len; ++t)
    for (int p = 0; p < kNumPitches; ++p) out.set(t, p, roll.at(start + t, p));
  // promote cut-off sustains at the left edge
  for (int p = 0; p < kNumPitches; ++p)
    if (out.at(0, p) == NoteState::Sustain) out.set(0, p, NoteState::Onset);
  return out;
}

PianoRoll sustain_repair(const PianoRoll& roll) {
  PianoRoll out = roll;
  for (int p = 0; p < kNumPitches; ++p) {
    for (int t = 0; t < out.frames(); ++t) {
      if (out.at(t, p) != NoteState::Sustain) continue;
      bool ok = t > 0 && (out.at(t - 1, p) == NoteState::Onset ||
                          out.at(t - 1, p) == NoteState::Sustain);
      if (!ok) out.set(t, p, NoteState::Onset);
    }
  }
  return out;
}

std::string state_name(NoteState s) {
  switch (s) {
    case NoteState::Onset: return "onset";
    case NoteState::Sustain: return "sustain";
    case NoteState::Off: return "off";
    case NoteState::Mask: return "mask";
  }
  return "?";
}

}  // namespace pianodiff
