#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace pianodiff {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Per-timestep corruption parameters of the 4-state absorbing process.
// Matrices are column-stochastic and act on one-hot column vectors; the
// MASK column is (0,0,0,1) so MASK is absorbing. Indexing is 1-based in
// tau (tau = 0 is the identity), matching q(y_tau | y_{tau-1}).
class NoiseSchedule {
 public:
  // Linear cumulative schedule: the cumulative keep probability decays
  // linearly from 1 to terminal_keep, the cumulative mask probability grows
  // linearly from 0 to terminal_mask.
  static NoiseSchedule linear(int steps, double terminal_keep = 0.009,
                              double terminal_mask = 0.99);

  int steps() const { return steps_; }
  double alpha(int tau) const { return alpha_.at(check(tau)); }
  double beta(int tau) const { return beta_.at(check(tau)); }
  double gamma(int tau) const { return gamma_.at(check(tau)); }
  double alpha_bar(int tau) const { return alpha_bar_.at(tau); }  // tau in [0, steps]
  double gamma_bar(int tau) const { return gamma_bar_.at(tau); }

  // Q[tau]; tau in [1, steps]
  Mat4 transition_matrix(int tau) const;
  // Qbar[tau] = Q[tau]...Q[1] as an explicit matrix product; Qbar[0] = I
  const Mat4& cumulative_matrix(int tau) const { return qbar_.at(tau); }

  // Inference variant with the perturbation probability zeroed out and its
  // mass folded into preservation; the masking rate is kept.
  NoiseSchedule absorbing_only() const;

  // Plain text table: tau alpha beta gamma alpha_bar gamma_bar
  void dump(std::ostream& os) const;
  static NoiseSchedule load(std::istream& is);

 private:
  NoiseSchedule() = default;
  void rebuild_cumulative();
  int check(int tau) const;

  int steps_ = 0;
  // index 0 unused for per-step vectors
  std::vector<double> alpha_, beta_, gamma_;
  std::vector<double> alpha_bar_, gamma_bar_;  // index 0 = no corruption
  std::vector<Mat4> qbar_;
};

}  // namespace pianodiff
