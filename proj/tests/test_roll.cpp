#include <doctest.h>

#include "helpers.hpp"
#include "pianodiff/roll.hpp"

using namespace pianodiff;

TEST_SUITE("roll") {

TEST_CASE("basic invariants") {
  PianoRoll roll(16);
  CHECK(roll.frames() == 16);
  CHECK(roll.count_state(NoteState::Off) == 16 * 88);
  CHECK(!roll.contains_mask());
  CHECK(roll.sustain_legal());
  roll.set(3, 40, NoteState::Mask);
  CHECK(roll.contains_mask());
  CHECK_THROWS(PianoRoll(0));
}

TEST_CASE("sustain legality") {
  PianoRoll roll(8);
  roll.set(0, 10, NoteState::Sustain);
  CHECK(!roll.sustain_legal());
  roll.set(0, 10, NoteState::Onset);
  roll.set(1, 10, NoteState::Sustain);
  CHECK(roll.sustain_legal());
  roll.set(4, 10, NoteState::Sustain);  // gap before it
  CHECK(!roll.sustain_legal());
}

TEST_CASE("one-hot round trip") {
  PianoRoll roll = random_legal_roll(32, 7);
  CHECK(from_one_hot(to_one_hot(roll)) == roll);
  StateDistribution d = to_one_hot(roll);
  d.set(0, 0, 0, 0.5);
  d.set(0, 0, 1, 0.5);
  CHECK_THROWS(from_one_hot(d));
}

TEST_CASE("transpose shifts and drops") {
  PianoRoll roll(16);
  roll.set(0, 40, NoteState::Onset);
  roll.set(1, 40, NoteState::Sustain);
  roll.set(4, 87, NoteState::Onset);
  auto up = transpose(roll, 2);
  CHECK(up.roll.at(0, 42) == NoteState::Onset);
  CHECK(up.roll.at(1, 42) == NoteState::Sustain);
  CHECK(up.roll.at(0, 40) == NoteState::Off);
  CHECK(up.dropped_notes == 1);  // pitch 87 pushed out of range

  // inverse within range
  PianoRoll mid = random_legal_roll(32, 3, 0.05);
  PianoRoll clipped(32);
  for (int t = 0; t < 32; ++t)
    for (int p = 10; p < 78; ++p) clipped.set(t, p, mid.at(t, p));
  clipped = sustain_repair(clipped);
  auto fwd = transpose(clipped, 6);
  CHECK(fwd.dropped_notes == 0);
  auto back = transpose(fwd.roll, -6);
  CHECK(back.roll == clipped);
}

TEST_CASE("crop promotes cut sustains") {
  PianoRoll roll(32 * kFramesPerBar);
  roll.set(14, 50, NoteState::Onset);
  for (int t = 15; t < 40; ++t) roll.set(t, 50, NoteState::Sustain);
  PianoRoll seg = crop_bars(roll, 1, 1);
  CHECK(seg.frames() == kFramesPerBar);
  CHECK(seg.at(0, 50) == NoteState::Onset);  // was SUSTAIN at frame 16
  CHECK(seg.at(1, 50) == NoteState::Sustain);
  CHECK(seg.sustain_legal());
  CHECK_THROWS(crop_bars(roll, 31, 2));
  CHECK_THROWS(crop_bars(roll, -1, 1));
}

TEST_CASE("sustain repair") {
  PianoRoll roll(8);
  roll.set(0, 5, NoteState::Sustain);
  roll.set(3, 5, NoteState::Sustain);
  roll.set(4, 5, NoteState::Sustain);
  PianoRoll fixed = sustain_repair(roll);
  CHECK(fixed.at(0, 5) == NoteState::Onset);
  CHECK(fixed.at(3, 5) == NoteState::Onset);
  CHECK(fixed.at(4, 5) == NoteState::Sustain);
  CHECK(fixed.sustain_legal());
}

}  // TEST_SUITE
