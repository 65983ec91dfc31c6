#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pianodiff/metrics.hpp"

using namespace pianodiff;

TEST_SUITE("metrics") {

TEST_CASE("out-of-key ratio hand counts") {
  KeySignature c_major{0, Mode::Major};
  PianoRoll roll(16);
  CHECK(ook(roll, c_major) == 0.0);  // no onsets at all

  roll.set(0, 60 - kLowestMidiPitch, NoteState::Onset);  // C, in key
  roll.set(2, 61 - kLowestMidiPitch, NoteState::Onset);  // C#, out
  roll.set(4, 64 - kLowestMidiPitch, NoteState::Onset);  // E, in
  roll.set(6, 66 - kLowestMidiPitch, NoteState::Onset);  // F#, out
  CHECK(ook(roll, c_major) == doctest::Approx(0.5));
  // sustains never count
  roll.set(3, 61 - kLowestMidiPitch, NoteState::Sustain);
  CHECK(ook(roll, c_major) == doctest::Approx(0.5));
  // against Eb major only the C survives
  KeySignature eb_major{3, Mode::Major};
  CHECK(ook(roll, eb_major) == doctest::Approx(0.75));
}

TEST_CASE("chroma histogram weighs duration") {
  PianoRoll roll(8);
  roll.set(0, 39, NoteState::Onset);  // MIDI 60, pc 0
  for (int t = 1; t < 4; ++t) roll.set(t, 39, NoteState::Sustain);
  roll.set(0, 43, NoteState::Onset);  // MIDI 64, pc 4
  Chroma h = chroma_histogram(roll, 0, 8);
  CHECK(h[0] == 4.0);
  CHECK(h[4] == 1.0);
  CHECK(h[7] == 0.0);
}

TEST_CASE("extraction closes the loop over every root and quality") {
  for (int root = 0; root < 12; ++root) {
    for (int qi = 0; qi < kNumQualities; ++qi) {
      ChordLabel label{root, static_cast<ChordQuality>(qi)};
      PianoRoll roll = chord_block_roll(label, 2);
      auto got = extract_chords(roll);
      REQUIRE(got.size() == 8);
      for (const auto& g : got) {
        REQUIRE(g.has_value());
        CHECK(*g == label);
      }
    }
  }
}

TEST_CASE("extraction is transposition equivariant") {
  ChordLabel base{2, ChordQuality::Min7};
  PianoRoll roll = chord_block_roll(base, 2);
  for (int shift : {-7, -3, 4, 11}) {
    auto shifted = transpose(roll, shift);
    REQUIRE(shifted.dropped_notes == 0);
    auto got = extract_chords(shifted.roll);
    for (const auto& g : got) {
      REQUIRE(g.has_value());
      CHECK(g->root == ((base.root + shift) % 12 + 12) % 12);
      CHECK(g->quality == base.quality);
    }
  }
}

TEST_CASE("empty beats carry the previous label") {
  PianoRoll roll(32);
  // chord only in the first beat
  for (int midi : chord_to_pitches({0, ChordQuality::Maj})) {
    roll.set(0, midi - kLowestMidiPitch, NoteState::Onset);
    for (int t = 1; t < 4; ++t)
      roll.set(t, midi - kLowestMidiPitch, NoteState::Sustain);
  }
  auto got = extract_chords(roll);
  REQUIRE(got.size() == 8);
  for (const auto& g : got) {
    REQUIRE(g.has_value());
    CHECK(*g == ChordLabel{0, ChordQuality::Maj});
  }
  // a fully silent roll yields no labels at all
  auto none = extract_chords(PianoRoll(16));
  for (const auto& g : none) CHECK(!g.has_value());
}

TEST_CASE("chord accuracy") {
  std::vector<std::optional<ChordLabel>> ref{ChordLabel{0, ChordQuality::Maj},
                                             ChordLabel{7, ChordQuality::Maj},
                                             ChordLabel{9, ChordQuality::Min},
                                             std::nullopt};
  auto hyp = ref;
  CHECK(chord_accuracy(hyp, ref) == doctest::Approx(0.75));  // nullopt never matches
  hyp[1] = ChordLabel{7, ChordQuality::Dom7};
  CHECK(chord_accuracy(hyp, ref) == doctest::Approx(0.5));
  CHECK_THROWS(chord_accuracy({}, ref));
}

TEST_CASE("chord similarity fixtures") {
  std::vector<ChordSpan> ref{{0.0, 8.0, {0, ChordQuality::Maj}}};
  // playing exactly the chord tones for the whole window scores 1
  PianoRoll exact(32);
  for (int pc : {0, 4, 7}) {
    int p = 60 + pc - kLowestMidiPitch;
    exact.set(0, p, NoteState::Onset);
    for (int t = 1; t < 32; ++t) exact.set(t, p, NoteState::Sustain);
  }
  CHECK(chord_similarity(exact, ref) == doctest::Approx(1.0));

  // equal mass on {C, E, G#} against reference {C, E, G}: cosine 2/3
  PianoRoll twothirds(32);
  for (int pc : {0, 4, 8}) {
    int p = 60 + pc - kLowestMidiPitch;
    twothirds.set(0, p, NoteState::Onset);
    for (int t = 1; t < 32; ++t) twothirds.set(t, p, NoteState::Sustain);
  }
  CHECK(chord_similarity(twothirds, ref) == doctest::Approx(2.0 / 3.0));

  // empty window scores 0
  CHECK(chord_similarity(PianoRoll(32), ref) == 0.0);
  // length must be whole 2-bar windows
  CHECK_THROWS(chord_similarity(PianoRoll(16), ref));
}

TEST_CASE("grooving similarity fixtures") {
  // identical onset patterns in every bar
  PianoRoll same(32);
  for (int bar = 0; bar < 2; ++bar)
    for (int q : {0, 4, 8, 12}) same.set(bar * 16 + q, 40, NoteState::Onset);
  CHECK(grooving_similarity(same) == doctest::Approx(1.0));

  // two bars differing in 4 of 16 positions: 1 - 4/16 = 0.75
  PianoRoll mixed(32);
  for (int q : {0, 4, 8, 12}) mixed.set(q, 40, NoteState::Onset);
  for (int q : {0, 4, 10, 14}) mixed.set(16 + q, 40, NoteState::Onset);
  CHECK(grooving_similarity(mixed) == doctest::Approx(0.75));

  // chords landing together still give one onset bit per position
  PianoRoll chords(32);
  for (int bar = 0; bar < 2; ++bar)
    for (int q : {0, 8}) {
      chords.set(bar * 16 + q, 40, NoteState::Onset);
      chords.set(bar * 16 + q, 44, NoteState::Onset);
    }
  CHECK(grooving_similarity(chords) == doctest::Approx(1.0));

  CHECK_THROWS(grooving_similarity(PianoRoll(16)));  // needs two bars
  CHECK_THROWS(grooving_similarity(PianoRoll(24)));  // partial bar
}

TEST_CASE("segment evaluation and report aggregation") {
  Corpus corpus = toy_corpus();
  MetricReport report;
  for (std::size_t i = 0; i < 2; ++i)
    report.segments.push_back(evaluate_segment(std::to_string(i),
                                               corpus[i].accompaniment,
                                               corpus[i].lead));
  REQUIRE(report.segments.size() == 2);
  // the accompaniment is the literal chord realization
  for (const auto& m : report.segments) {
    CHECK(m.ca == doctest::Approx(1.0));
    CHECK(m.cs == doctest::Approx(1.0));
    CHECK(m.gs == doctest::Approx(1.0));
    CHECK(m.ook == 0.0);
  }
  CHECK(report.mean_ca() ==
        doctest::Approx((report.segments[0].ca + report.segments[1].ca) / 2.0));
  auto csv = report.to_csv();
  CHECK(csv.find("segment_id,ook,ca,cs,gs") == 0);
  CHECK(report.to_text().find("segments = 2") != std::string::npos);
}

}  // TEST_SUITE
