#include <doctest.h>

#include <sstream>

#include "pianodiff/schedule.hpp"

using namespace pianodiff;

TEST_SUITE("schedule") {

TEST_CASE("per-step probabilities form a stochastic matrix") {
  auto s = NoiseSchedule::linear(100);
  for (int tau = 1; tau <= 100; ++tau) {
    CHECK(std::abs(s.alpha(tau) + 3.0 * s.beta(tau) + s.gamma(tau) - 1.0) <= 1e-12);
    CHECK(s.alpha(tau) >= 0.0);
    CHECK(s.beta(tau) >= 0.0);
    CHECK(s.gamma(tau) >= 0.0);
    Mat4 q = s.transition_matrix(tau);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(q.col(c).sum() - 1.0) <= 1e-12);
    // MASK is absorbing
    CHECK(q(0, 3) == 0.0);
    CHECK(q(1, 3) == 0.0);
    CHECK(q(2, 3) == 0.0);
    CHECK(q(3, 3) == 1.0);
  }
}

TEST_CASE("cumulative endpoints and monotonicity") {
  auto s = NoiseSchedule::linear(100);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.gamma_bar(0) == 0.0);
  CHECK(s.alpha_bar(100) == doctest::Approx(0.009).epsilon(1e-10));
  CHECK(s.gamma_bar(100) >= 0.99 - 1e-12);
  for (int tau = 1; tau <= 100; ++tau) {
    CHECK(s.gamma_bar(tau) >= s.gamma_bar(tau - 1));
    CHECK(s.alpha_bar(tau) <= s.alpha_bar(tau - 1));
  }
  // linear in tau
  CHECK(s.alpha_bar(50) == doctest::Approx(1.0 - (1.0 - 0.009) * 0.5).epsilon(1e-12));
  CHECK(s.gamma_bar(50) == doctest::Approx(0.99 * 0.5).epsilon(1e-12));
}

TEST_CASE("cumulative matrices match the scalar tracks") {
  auto s = NoiseSchedule::linear(100);
  CHECK(s.cumulative_matrix(0) == Mat4::Identity());
  for (int tau = 1; tau <= 100; ++tau) {
    const Mat4& qb = s.cumulative_matrix(tau);
    for (int c = 0; c < 4; ++c) CHECK(std::abs(qb.col(c).sum() - 1.0) <= 1e-12);
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(qb(3, c) - s.gamma_bar(tau)) <= 1e-12);
    // the keep coefficient is the diagonal minus the uniform leak
    CHECK(std::abs((qb(0, 0) - qb(1, 0)) - s.alpha_bar(tau)) <= 1e-12);
  }
}

TEST_CASE("explicit product oracle") {
  auto s = NoiseSchedule::linear(17, 0.05, 0.9);
  Mat4 prod = Mat4::Identity();
  for (int tau = 1; tau <= 17; ++tau) {
    prod = s.transition_matrix(tau) * prod;
    CHECK((prod - s.cumulative_matrix(tau)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(s.alpha_bar(17) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(s.gamma_bar(17) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("absorbing-only variant") {
  auto s = NoiseSchedule::linear(100);
  auto inf = s.absorbing_only();
  for (int tau = 1; tau <= 100; ++tau) {
    CHECK(inf.beta(tau) == 0.0);
    CHECK(inf.gamma(tau) == s.gamma(tau));
    CHECK(std::abs(inf.alpha(tau) + inf.gamma(tau) - 1.0) <= 1e-15);
  }
  // masking statistics unchanged
  for (int tau = 0; tau <= 100; ++tau)
    CHECK(inf.gamma_bar(tau) == doctest::Approx(s.gamma_bar(tau)).epsilon(1e-12));
}

TEST_CASE("dump and load round trip") {
  auto s = NoiseSchedule::linear(100);
  std::stringstream ss;
  s.dump(ss);
  auto r = NoiseSchedule::load(ss);
  REQUIRE(r.steps() == 100);
  for (int tau = 1; tau <= 100; ++tau) {
    CHECK(r.alpha(tau) == s.alpha(tau));
    CHECK(r.beta(tau) == s.beta(tau));
    CHECK(r.gamma(tau) == s.gamma(tau));
    CHECK(r.alpha_bar(tau) == s.alpha_bar(tau));
    CHECK(r.gamma_bar(tau) == s.gamma_bar(tau));
  }
}

TEST_CASE("argument validation") {
  CHECK_THROWS(NoiseSchedule::linear(0));
  auto s = NoiseSchedule::linear(10);
  CHECK_THROWS(s.alpha(0));
  CHECK_THROWS(s.alpha(11));
  CHECK_THROWS(s.transition_matrix(0));
}

}  // TEST_SUITE
