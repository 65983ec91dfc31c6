#include <doctest.h>

#include "pianodiff/lead_sheet.hpp"

using namespace pianodiff;

TEST_SUITE("leadsheet") {

TEST_CASE("beat to frame conversion rounds half up") {
  ChordSpan s{0.0, 2.0, {0, ChordQuality::Maj}};
  CHECK(s.start_frame() == 0);
  CHECK(s.end_frame() == 8);
  ChordSpan half{1.1, 2.6, {0, ChordQuality::Maj}};
  CHECK(half.start_frame() == 4);   // 4.4 + 0.5 floors to 4
  CHECK(half.end_frame() == 10);    // 10.4 + 0.5 floors to 10
}

TEST_CASE("chord tones written as onset plus sustain") {
  PianoRoll melody(32);
  std::vector<ChordSpan> chords{{0.0, 4.0, {0, ChordQuality::Maj}},
                                {4.0, 8.0, {7, ChordQuality::Maj}}};
  auto res = build_lead_sheet(melody, chords, {0, Mode::Major});
  CHECK(res.uncovered_frames == 0);
  for (int midi : {36, 40, 43}) {
    int p = midi - kLowestMidiPitch;
    CHECK(res.sheet.roll.at(0, p) == NoteState::Onset);
    for (int t = 1; t < 16; ++t) CHECK(res.sheet.roll.at(t, p) == NoteState::Sustain);
  }
  CHECK(res.sheet.roll.at(16, 43 - kLowestMidiPitch) == NoteState::Onset);  // G chord root
  CHECK(res.sheet.roll.sustain_legal());
}

TEST_CASE("melody collision is an error") {
  PianoRoll melody(16);
  melody.set(2, 36 - kLowestMidiPitch, NoteState::Onset);
  std::vector<ChordSpan> chords{{0.0, 4.0, {0, ChordQuality::Maj}}};
  CHECK_THROWS(build_lead_sheet(melody, chords, {0, Mode::Major}));
}

TEST_CASE("uncovered frames are counted") {
  PianoRoll melody(32);
  std::vector<ChordSpan> chords{{0.0, 4.0, {0, ChordQuality::Maj}}};
  auto res = build_lead_sheet(melody, chords, {0, Mode::Major});
  CHECK(res.uncovered_frames == 16);
}

TEST_CASE("chords per beat expansion") {
  std::vector<ChordSpan> chords{{0.0, 2.0, {0, ChordQuality::Maj}},
                                {2.0, 4.0, {9, ChordQuality::Min}}};
  auto labels = chords_per_beat(chords, 6);
  REQUIRE(labels.size() == 6);
  CHECK(*labels[0] == ChordLabel{0, ChordQuality::Maj});
  CHECK(*labels[1] == ChordLabel{0, ChordQuality::Maj});
  CHECK(*labels[2] == ChordLabel{9, ChordQuality::Min});
  CHECK(*labels[3] == ChordLabel{9, ChordQuality::Min});
  CHECK(!labels[4]);
  CHECK(!labels[5]);
}

}  // TEST_SUITE
