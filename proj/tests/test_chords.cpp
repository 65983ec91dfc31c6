#include <doctest.h>

#include "pianodiff/chords.hpp"

using namespace pianodiff;

TEST_SUITE("chords") {

TEST_CASE("quality templates") {
  CHECK(quality_intervals(ChordQuality::Maj) == std::vector<int>{0, 4, 7});
  CHECK(quality_intervals(ChordQuality::Min) == std::vector<int>{0, 3, 7});
  CHECK(quality_intervals(ChordQuality::Dim) == std::vector<int>{0, 3, 6});
  CHECK(quality_intervals(ChordQuality::Aug) == std::vector<int>{0, 4, 8});
  CHECK(quality_intervals(ChordQuality::Dom7) == std::vector<int>{0, 4, 7, 10});
  CHECK(quality_intervals(ChordQuality::Maj7) == std::vector<int>{0, 4, 7, 11});
  CHECK(quality_intervals(ChordQuality::Min7) == std::vector<int>{0, 3, 7, 10});
  CHECK(is_triad(ChordQuality::Aug));
  CHECK(!is_triad(ChordQuality::Dom7));
}

TEST_CASE("pitch classes and voicing") {
  ChordLabel c{0, ChordQuality::Maj};
  CHECK(c.pitch_classes() == std::set<int>{0, 4, 7});
  CHECK(chord_to_pitches(c) == std::set<int>{36, 40, 43});
  ChordLabel b7{11, ChordQuality::Dom7};
  CHECK(b7.pitch_classes() == std::set<int>{11, 3, 6, 9});
  CHECK(chord_to_pitches(b7) == std::set<int>{47, 51, 54, 57});
}

TEST_CASE("name parsing") {
  CHECK(parse_pitch_class("C") == 0);
  CHECK(parse_pitch_class("F#") == 6);
  CHECK(parse_pitch_class("Bb") == 10);
  CHECK(parse_pitch_class("Cb") == 11);
  CHECK(parse_pitch_class("a") == 9);
  CHECK(parse_pitch_class("7") == 7);
  CHECK(parse_pitch_class("11") == 11);
  CHECK(!parse_pitch_class("12"));
  CHECK(!parse_pitch_class("H"));
  CHECK(!parse_pitch_class(""));
  CHECK(parse_quality("maj") == ChordQuality::Maj);
  CHECK(parse_quality("m7") == ChordQuality::Min7);
  CHECK(parse_quality("7") == ChordQuality::Dom7);
  CHECK(!parse_quality("sus4"));
}

TEST_CASE("scales") {
  KeySignature c_major{0, Mode::Major};
  CHECK(c_major.scale() == std::set<int>{0, 2, 4, 5, 7, 9, 11});
  KeySignature a_minor{9, Mode::Minor};
  CHECK(a_minor.scale() == std::set<int>{9, 11, 0, 2, 4, 5, 7});
  KeySignature e_major{4, Mode::Major};
  CHECK(e_major.scale() == std::set<int>{4, 6, 8, 9, 11, 1, 3});
}

}  // TEST_SUITE
