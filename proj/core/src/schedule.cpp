#include "pianodiff/schedule.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pianodiff {

int NoiseSchedule::check(int tau) const {
  if (tau < 1 || tau > steps_) throw std::out_of_range("schedule: tau out of range");
  return tau;
}

NoiseSchedule NoiseSchedule::linear(int steps, double terminal_keep,
                                    double terminal_mask) {
  if (steps < 1) throw std::invalid_argument("schedule: steps must be >= 1");
  NoiseSchedule s;
  s.steps_ = steps;
  s.alpha_.assign(steps + 1, 0.0);
  s.beta_.assign(steps + 1, 0.0);
  s.gamma_.assign(steps + 1, 0.0);

  // cumulative targets, then per-step parameters recovered from ratios
  auto abar = [&](int tau) { return 1.0 - (1.0 - terminal_keep) * tau / steps; };
  auto gbar = [&](int tau) { return terminal_mask * tau / steps; };
  for (int tau = 1; tau <= steps; ++tau) {
    double a = abar(tau) / abar(tau - 1);
    double g = (gbar(tau) - gbar(tau - 1)) / (1.0 - gbar(tau - 1));
    double b = (1.0 - a - g) / 3.0;
    if (a < 0.0 || g < 0.0 || b < -1e-15)
      throw std::invalid_argument("schedule: endpoints yield negative probabilities");
    s.alpha_[tau] = a;
    s.gamma_[tau] = g;
    s.beta_[tau] = b < 0.0 ? 0.0 : b;
  }
  s.rebuild_cumulative();
  return s;
}

Mat4 NoiseSchedule::transition_matrix(int tau) const {
  check(tau);
  double a = alpha_[tau], b = beta_[tau], g = gamma_[tau];
  Mat4 q;
  q << a + b, b, b, 0,
       b, a + b, b, 0,
       b, b, a + b, 0,
       g, g, g, 1;
  return q;
}

void NoiseSchedule::rebuild_cumulative() {
  qbar_.assign(steps_ + 1, Mat4::Identity());
  alpha_bar_.assign(steps_ + 1, 1.0);
  gamma_bar_.assign(steps_ + 1, 0.0);
  for (int tau = 1; tau <= steps_; ++tau) {
    qbar_[tau] = transition_matrix(tau) * qbar_[tau - 1];
    alpha_bar_[tau] = alpha_bar_[tau - 1] * alpha_[tau];
    gamma_bar_[tau] = 1.0 - (1.0 - gamma_bar_[tau - 1]) * (1.0 - gamma_[tau]);
  }
}

NoiseSchedule NoiseSchedule::absorbing_only() const {
  NoiseSchedule s;
  s.steps_ = steps_;
  s.alpha_.assign(steps_ + 1, 0.0);
  s.beta_.assign(steps_ + 1, 0.0);
  s.gamma_ = gamma_;
  for (int tau = 1; tau <= steps_; ++tau) s.alpha_[tau] = 1.0 - gamma_[tau];
  s.rebuild_cumulative();
  return s;
}

void NoiseSchedule::dump(std::ostream& os) const {
  os << "# tau alpha beta gamma alpha_bar gamma_bar\n";
  os << std::setprecision(17);
  for (int tau = 1; tau <= steps_; ++tau) {
    os << tau << ' ' << alpha_[tau] << ' ' << beta_[tau] << ' ' << gamma_[tau]
       << ' ' << alpha_bar_[tau] << ' ' << gamma_bar_[tau] << '\n';
  }
}

NoiseSchedule NoiseSchedule::load(std::istream& is) {
  NoiseSchedule s;
  s.alpha_.assign(1, 0.0);
  s.beta_.assign(1, 0.0);
  s.gamma_.assign(1, 0.0);
  std::string line;
  int expect = 1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int tau;
    double a, b, g, ab, gb;
    if (!(ls >> tau >> a >> b >> g >> ab >> gb))
      throw std::runtime_error("schedule: malformed table line");
    if (tau != expect) throw std::runtime_error("schedule: rows out of order");
    s.alpha_.push_back(a);
    s.beta_.push_back(b);
    s.gamma_.push_back(g);
    ++expect;
  }
  s.steps_ = expect - 1;
  if (s.steps_ < 1) throw std::runtime_error("schedule: empty table");
  s.rebuild_cumulative();
  return s;
}

}  // namespace pianodiff
