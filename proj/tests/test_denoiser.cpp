#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "pianodiff/denoiser.hpp"

using namespace pianodiff;

namespace {

DenoiserConfig tiny_config() {
  DenoiserConfig cfg;
  cfg.n_layers = 2;
  cfg.window = 3;
  cfg.dilations = {1, 2};
  cfg.state_embed_dim = 4;
  cfg.hidden_dim = 8;
  cfg.time_embed_dim = 8;
  return cfg;
}

PianoRoll noisy_roll(int frames, std::uint64_t seed) {
  PianoRoll y = random_legal_roll(frames, seed, 0.15);
  Rng rng(seed + 1);
  for (int t = 0; t < frames; ++t)
    for (int p = 0; p < kNumPitches; ++p)
      if (rng.uniform() < 0.4) y.set(t, p, NoteState::Mask);
  return y;
}

}  // namespace

TEST_SUITE("denoiser") {

TEST_CASE("forward output is a row-stochastic matrix") {
  Denoiser model(tiny_config());
  model.init_params(3);
  PianoRoll lead = random_legal_roll(8, 4, 0.1);
  PianoRoll y = noisy_roll(8, 5);
  Mat enc = model.encode(lead, nullptr);
  REQUIRE(enc.rows() == 8 * 88);
  Mat probs = model.denoise(y, enc, 10, nullptr);
  REQUIRE(probs.rows() == 8 * 88);
  REQUIRE(probs.cols() == 3);
  for (int r = 0; r < probs.rows(); ++r) {
    CHECK(std::abs(probs.row(r).sum() - 1.0) <= 1e-12);
    CHECK(probs.row(r).minCoeff() > 0.0);
  }
  // deterministic
  Mat again = model.denoise(y, enc, 10, nullptr);
  CHECK((probs - again).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every parameter gradient passes finite differences" *
          doctest::timeout(300)) {
  Denoiser model(tiny_config());
  model.init_params(7);
  const int frames = 4;
  PianoRoll lead = random_legal_roll(frames, 8, 0.1);
  PianoRoll y = noisy_roll(frames, 9);
  const int tau = 6;
  const int cells = frames * 88;
  Mat R(cells, 3);
  Rng rng(10);
  for (int r = 0; r < cells; ++r)
    R.row(r) << rng.normal(), rng.normal(), rng.normal();

  auto loss = [&]() {
    Mat enc = model.encode(lead, nullptr);
    Mat probs = model.denoise(y, enc, tau, nullptr);
    return (probs.array() * R.array()).sum();
  };

  model.zero_grads();
  EncoderCache ec;
  DecoderCache dc;
  Mat enc = model.encode(lead, &ec);
  model.denoise(y, enc, tau, &dc);
  Mat denc = model.denoise_backward(R, enc, dc);
  model.encode_backward(denc, ec);

  const double h = 1e-5;
  int tensors = 0;
  model.visit_params([&](const std::string& name, Mat& v, Mat& g) {
    ++tensors;
    Rng pick(std::hash<std::string>{}(name));
    for (int rep = 0; rep < 2; ++rep) {
      int r = static_cast<int>(pick.below(v.rows()));
      int c = static_cast<int>(pick.below(v.cols()));
      double keep = v(r, c);
      v(r, c) = keep + h;
      double lp = loss();
      v(r, c) = keep - h;
      double lm = loss();
      v(r, c) = keep;
      double fd = (lp - lm) / (2.0 * h);
      INFO(name, " (", r, ",", c, ")");
      CHECK(std::abs(g(r, c) - fd) <= 1e-6 + 1e-3 * std::abs(fd));
    }
  });
  CHECK(tensors > 20);
}

TEST_CASE("embedding table is shared by both halves") {
  Denoiser model(tiny_config());
  model.init_params(11);
  PianoRoll lead = random_legal_roll(4, 12, 0.1);
  PianoRoll y = noisy_roll(4, 13);
  Mat enc0 = model.encode(lead, nullptr);
  Mat probs0 = model.denoise(y, enc0, 3, nullptr);
  int seen = 0;
  model.visit_params([&](const std::string& name, Mat& v, Mat&) {
    if (name == "embed.table") {
      ++seen;
      v(0, 0) += 0.25;
    }
  });
  CHECK(seen == 1);
  Mat enc1 = model.encode(lead, nullptr);
  CHECK((enc0 - enc1).cwiseAbs().maxCoeff() > 0.0);
  Mat probs1 = model.denoise(y, enc1, 3, nullptr);
  CHECK((probs0 - probs1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("timestep conditioning changes the output") {
  Denoiser model(tiny_config());
  model.init_params(14);
  // the conditioning output layer starts at zero so the timestep is inert
  // until training moves it; nudge it to expose the pathway
  model.visit_params([&](const std::string& name, Mat& v, Mat&) {
    if (name.find("cond2.W") != std::string::npos) v.setConstant(0.05);
  });
  PianoRoll lead = random_legal_roll(4, 15, 0.1);
  PianoRoll y = noisy_roll(4, 16);
  Mat enc = model.encode(lead, nullptr);
  Mat a = model.denoise(y, enc, 1, nullptr);
  Mat b = model.denoise(y, enc, 60, nullptr);
  CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("attention reach is bounded by the dilated window") {
  for (int dilation : {1, 4, 16}) {
    DenoiserConfig cfg = tiny_config();
    cfg.n_layers = 1;
    cfg.window = 5;
    cfg.dilations = {dilation};
    Denoiser model(cfg);
    model.init_params(20 + dilation);
    const int frames = 8;
    PianoRoll lead = random_legal_roll(frames, 21, 0.1);
    Mat enc = model.encode(lead, nullptr);

    PianoRoll y1 = noisy_roll(frames, 22);
    const int query_pitch = 44;
    const int far_pitch = 44 + 2 * dilation + 1;
    PianoRoll y2 = y1;
    y2.set(3, far_pitch, y1.at(3, far_pitch) == NoteState::Onset
                             ? NoteState::Off
                             : NoteState::Onset);

    Mat p1 = model.denoise(y1, enc, 5, nullptr);
    Mat p2 = model.denoise(y2, enc, 5, nullptr);
    // the perturbed pitch itself must react
    double delta_local = 0.0;
    for (int t = 0; t < frames; ++t)
      delta_local = std::max(delta_local,
                             (p1.row(t * 88 + far_pitch) - p2.row(t * 88 + far_pitch))
                                 .cwiseAbs()
                                 .maxCoeff());
    CHECK(delta_local > 0.0);
    // a query beyond the window reach must be bit-identical
    for (int t = 0; t < frames; ++t) {
      Eigen::RowVector3d a = p1.row(t * 88 + query_pitch);
      Eigen::RowVector3d b = p2.row(t * 88 + query_pitch);
      CHECK(a(0) == b(0));
      CHECK(a(1) == b(1));
      CHECK(a(2) == b(2));
    }
  }
}

TEST_CASE("serialization round trip is bit exact") {
  Denoiser model(tiny_config());
  model.init_params(30);
  std::stringstream ss;
  model.save(ss);
  auto loaded = Denoiser::load(ss);
  CHECK(loaded->config() == model.config());

  std::map<std::string, Mat> orig;
  model.visit_params([&](const std::string& n, Mat& v, Mat&) { orig[n] = v; });
  int checked = 0;
  loaded->visit_params([&](const std::string& n, Mat& v, Mat&) {
    REQUIRE(orig.count(n) == 1);
    CHECK((orig[n] - v).cwiseAbs().maxCoeff() == 0.0);
    ++checked;
  });
  CHECK(checked == static_cast<int>(orig.size()));

  PianoRoll lead = random_legal_roll(4, 31, 0.1);
  PianoRoll y = noisy_roll(4, 32);
  Mat enc_a = model.encode(lead, nullptr);
  Mat enc_b = loaded->encode(lead, nullptr);
  CHECK((enc_a - enc_b).cwiseAbs().maxCoeff() == 0.0);
  Mat pa = model.denoise(y, enc_a, 4, nullptr);
  Mat pb = loaded->denoise(y, enc_b, 4, nullptr);
  CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("load rejects corrupted data") {
  Denoiser model(tiny_config());
  model.init_params(40);
  std::stringstream ss;
  model.save(ss);
  std::string bytes = ss.str();
  bytes[0] ^= 0xff;
  std::stringstream bad(bytes);
  CHECK_THROWS(Denoiser::load(bad));
}

TEST_CASE("predictor closure matches manual encode plus denoise") {
  Denoiser model(tiny_config());
  model.init_params(50);
  PianoRoll lead = random_legal_roll(4, 51, 0.1);
  PianoRoll y = noisy_roll(4, 52);
  auto predict = model.predictor(lead);
  Mat enc = model.encode(lead, nullptr);
  Mat direct = model.denoise(y, enc, 9, nullptr);
  Mat via = predict(y, 9);
  CHECK((direct - via).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config validation") {
  DenoiserConfig cfg = tiny_config();
  cfg.dilations = {1, 2, 4};  // must match n_layers
  CHECK_THROWS(Denoiser(cfg));
  cfg = tiny_config();
  cfg.window = 4;  // must be odd
  CHECK_THROWS(Denoiser(cfg));
}

}  // TEST_SUITE
