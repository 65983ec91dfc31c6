#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "pianodiff/dataset.hpp"
#include "pianodiff/pgm.hpp"
#include "pianodiff/run_config.hpp"

using namespace pianodiff;

TEST_SUITE("dataset") {

TEST_CASE("container round trip is bit exact") {
  Corpus corpus = toy_corpus();
  std::stringstream ss;
  save_dataset(ss, corpus);
  std::string first = ss.str();
  Corpus back = load_dataset(ss);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(back[i].lead.roll == corpus[i].lead.roll);
    CHECK(back[i].accompaniment == corpus[i].accompaniment);
    CHECK(back[i].lead.key == corpus[i].lead.key);
    CHECK(back[i].lead.chords == corpus[i].lead.chords);
  }
  std::stringstream again;
  save_dataset(again, back);
  CHECK(again.str() == first);
}

TEST_CASE("container rejects bad magic") {
  std::stringstream ss;
  save_dataset(ss, toy_corpus());
  std::string bytes = ss.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  CHECK_THROWS(load_dataset(bad));
  std::stringstream truncated(ss.str().substr(0, 40));
  CHECK_THROWS(load_dataset(truncated));
}

TEST_CASE("annotation parsing") {
  std::stringstream ss(
      "# demo song\n"
      "key,C,major\n"
      "0,4,C,maj\n"
      "4.0, 8.0, F#, m7\n"
      "\n"
      "8,12,10,dom7\n");
  Annotation a = parse_annotation(ss);
  CHECK(a.key == KeySignature{0, Mode::Major});
  REQUIRE(a.chords.size() == 3);
  CHECK(a.chords[0] == ChordSpan{0.0, 4.0, {0, ChordQuality::Maj}});
  CHECK(a.chords[1] == ChordSpan{4.0, 8.0, {6, ChordQuality::Min7}});
  CHECK(a.chords[2] == ChordSpan{8.0, 12.0, {10, ChordQuality::Dom7}});
}

TEST_CASE("annotation errors carry line numbers") {
  std::stringstream no_key("0,4,C,maj\n");
  CHECK_THROWS_WITH_AS(parse_annotation(no_key), doctest::Contains("key"),
                       std::runtime_error);
  std::stringstream bad_quality("key,C,major\n0,4,C,sus4\n");
  CHECK_THROWS(parse_annotation(bad_quality));
  std::stringstream bad_fields("key,C,major\n0,4,C\n");
  CHECK_THROWS_WITH_AS(parse_annotation(bad_fields), doctest::Contains("line 2"),
                       std::runtime_error);
}

TEST_CASE("run config parses and rejects unknown keys") {
  std::stringstream good(
      "# comment\n"
      "steps = 50\n"
      "hidden_dim = 16\n"
      "dilations = 1,2,4,8\n"
      "initial_lr = 5e-4\n"
      "augment = false\n"
      "seed = 9\n");
  RunConfig cfg = RunConfig::parse(good);
  CHECK(cfg.diffusion.steps == 50);
  CHECK(cfg.denoiser.hidden_dim == 16);
  CHECK(cfg.train.initial_lr == 5e-4);
  CHECK(cfg.train.augment == false);
  CHECK(cfg.train.seed == 9);

  std::stringstream bad("stepz = 50\n");
  CHECK_THROWS_WITH_AS(RunConfig::parse(bad), doctest::Contains("stepz"),
                       std::runtime_error);
  std::stringstream malformed("steps 50\n");
  CHECK_THROWS(RunConfig::parse(malformed));
  std::stringstream badint("steps = five\n");
  CHECK_THROWS(RunConfig::parse(badint));
}

TEST_CASE("resolved config reparses to itself") {
  RunConfig cfg;
  cfg.train.initial_lr = 3.25e-4;
  cfg.diffusion.steps = 64;
  std::string text = cfg.resolved();
  std::stringstream ss(text);
  RunConfig back = RunConfig::parse(ss);
  CHECK(back.resolved() == text);
  CHECK(back.train.initial_lr == 3.25e-4);
  CHECK(back.diffusion.steps == 64);
}

TEST_CASE("pgm rendering") {
  PianoRoll roll(4);
  std::stringstream blank;
  write_pgm(blank, roll);
  std::string expected = "P5\n4 88\n255\n" + std::string(4 * 88, '\xff');
  CHECK(blank.str() == expected);

  // one onset at MIDI 108 lands in the top-left pixel
  roll.set(0, 87, NoteState::Onset);
  roll.set(1, 87, NoteState::Sustain);
  std::stringstream img;
  write_pgm(img, roll);
  std::string body = img.str().substr(std::string("P5\n4 88\n255\n").size());
  CHECK(static_cast<unsigned char>(body[0]) == 0);
  CHECK(static_cast<unsigned char>(body[1]) == 128);
  CHECK(static_cast<unsigned char>(body[2]) == 255);
  CHECK(static_cast<unsigned char>(body[4]) == 255);  // next pitch row

  PianoRoll masked(4);
  masked.set(0, 0, NoteState::Mask);
  std::stringstream bad;
  CHECK_THROWS(write_pgm(bad, masked));
}

}  // TEST_SUITE
