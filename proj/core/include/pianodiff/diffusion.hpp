#pragma once

#include <functional>

#include "pianodiff/lead_sheet.hpp"
#include "pianodiff/roll.hpp"
#include "pianodiff/schedule.hpp"

namespace pianodiff {

struct DiffusionConfig {
  int steps = 100;
  double terminal_keep = 0.009;  // cumulative keep probability at the last step
  double terminal_mask = 0.99;   // cumulative mask probability at the last step
  double aux_weight = 5.0e-4;
};

// Clean-state predictor: given a noisy roll and a timestep, a (T*88) x 3
// row-stochastic matrix of probabilities over {ONSET, SUSTAIN, OFF}.
using CleanStatePredictor =
    std::function<Eigen::MatrixXd(const PianoRoll& y_tau, int tau)>;

// Each cell corrupted independently by Qbar[tau]; deterministic in the seed.
PianoRoll forward_sample(const PianoRoll& y0, int tau, const NoiseSchedule& schedule,
                         std::uint64_t rng_seed);

// Mixture posterior sum_{y0} q(y_{tau-1} | y_tau, y0) * y0_dist[y0], each
// component normalized by Bayes from Q[tau] and Qbar[tau-1]. y0_dist must
// have zero MASK mass; a component with positive weight whose y_tau is
// unreachable is an error.
Vec4 posterior(NoteState y_tau_cell, const Vec4& y0_dist_cell, int tau,
               const NoiseSchedule& schedule);

// As posterior(), but unreachable components are dropped and the mixture is
// renormalized over the reachable ones; needed by absorbing-only inference
// schedules where cross-state transitions have probability zero. Returns
// false when no component is reachable.
bool reverse_kernel(NoteState y_tau_cell, const Eigen::Vector3d& clean_probs,
                    int tau, const NoiseSchedule& schedule, Vec4* out);

// KL between the terminal corruption of y0 and a per-cell point mass on
// MASK (floored at kPriorEpsilon for finiteness); summed over cells.
double prior_kl(const PianoRoll& y0, const NoiseSchedule& schedule);
inline constexpr double kPriorEpsilon = 1e-12;

struct VlbLoss {
  double loss = 0.0;  // per-cell mean KL (NLL at tau = 1)
  double aux = 0.0;   // per-cell mean clean-state cross-entropy
  double total(double aux_weight) const { return loss + aux_weight * aux; }
};

// Stochastic per-timestep term of the variational bound plus the auxiliary
// clean-state cross-entropy. The noisy input is drawn inside with the seed.
VlbLoss vlb_loss(const PianoRoll& y0, int tau, const NoiseSchedule& schedule,
                 const CleanStatePredictor& predict, std::uint64_t rng_seed);

// As vlb_loss, but also exposes the sampled noisy roll, the model output and
// the gradient of the combined objective w.r.t. the 3-state probabilities so
// a training loop can backpropagate.
struct VlbLossDetail {
  VlbLoss value;
  PianoRoll y_tau;
  Eigen::MatrixXd clean_probs;  // N x 3
  Eigen::MatrixXd dprobs;       // N x 3, gradient of loss + aux_weight * aux
};
VlbLossDetail vlb_loss_detail(const PianoRoll& y0, int tau,
                              const NoiseSchedule& schedule,
                              const CleanStatePredictor& predict,
                              std::uint64_t rng_seed, double aux_weight);

// Iterative reverse sampling from all-MASK. When as_sampling is set the
// posterior runs on the absorbing-only inference schedule. Cells still
// masked after the last step take the argmax of the clean-state prediction;
// the result is sustain-repaired.
PianoRoll generate(int frames, const CleanStatePredictor& predict,
                   const NoiseSchedule& schedule, bool as_sampling,
                   std::uint64_t rng_seed);

}  // namespace pianodiff
