#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pianodiff/roll.hpp"

namespace pianodiff {

struct MidiNote {
  std::int64_t start_tick = 0;
  std::int64_t end_tick = 0;
  int pitch = 0;  // MIDI note number
};

// Parsed standard MIDI file (format 0 or 1), notes grouped by track.
struct MidiFile {
  int division = 480;  // ticks per quarter
  double tempo_bpm = 120.0;
  std::vector<std::vector<MidiNote>> tracks;
};

// Throws std::runtime_error on malformed input or a non-4/4 time signature.
MidiFile parse_midi(const std::vector<std::uint8_t>& bytes);

struct MidiToRollResult {
  PianoRoll roll;
  int dropped_notes = 0;  // notes outside MIDI 21..108
  double tempo_bpm = 120.0;
};

// Quantizes notes to the 16th grid (round half up). Roll length is the
// larger of min_frames and the content length rounded up to whole bars.
MidiToRollResult notes_to_roll(const std::vector<MidiNote>& notes, int division,
                               int min_frames = 0);

// All tracks merged.
MidiToRollResult midi_to_roll(const std::vector<std::uint8_t>& bytes,
                              int min_frames = 0);

// Emits a single-track format-0 file at fixed velocity 80. The roll must be
// MASK-free with legal sustains.
std::vector<std::uint8_t> roll_to_midi(const PianoRoll& roll, double tempo_bpm = 120.0);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace pianodiff
