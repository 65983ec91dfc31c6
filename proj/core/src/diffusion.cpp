#include "pianodiff/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "pianodiff/rng.hpp"

namespace pianodiff {

PianoRoll forward_sample(const PianoRoll& y0, int tau, const NoiseSchedule& schedule,
                         std::uint64_t rng_seed) {
  if (tau < 1 || tau > schedule.steps())
    throw std::out_of_range("forward_sample: tau out of range");
  if (y0.contains_mask()) throw std::invalid_argument("forward_sample: MASK in y0");
  const Mat4& qbar = schedule.cumulative_matrix(tau);
  PianoRoll out(y0.frames());
  for (int t = 0; t < y0.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      int s0 = static_cast<int>(y0.at(t, p));
      double col[kNumStates];
      for (int k = 0; k < kNumStates; ++k) col[k] = qbar(k, s0);
      Rng rng(mix_seed(rng_seed, 0x666f7277ULL, tau, t, p));
      out.set(t, p, static_cast<NoteState>(rng.categorical(col, kNumStates)));
    }
  }
  return out;
}

namespace {

// single-component posterior q(y_{tau-1} | y_tau = j, y0 = i); returns false
// when y_tau is unreachable from y0
bool component_posterior(int j, int i, int tau, const NoiseSchedule& schedule,
                         Vec4* out) {
  const Mat4 q = schedule.transition_matrix(tau);
  const Mat4& qbar_prev = schedule.cumulative_matrix(tau - 1);
  Vec4 unnorm;
  for (int k = 0; k < kNumStates; ++k) unnorm(k) = q(j, k) * qbar_prev(k, i);
  double z = unnorm.sum();
  if (z <= 0.0) return false;
  *out = unnorm / z;
  return true;
}

}  // namespace

Vec4 posterior(NoteState y_tau_cell, const Vec4& y0_dist_cell, int tau,
               const NoiseSchedule& schedule) {
  if (tau < 1 || tau > schedule.steps())
    throw std::out_of_range("posterior: tau out of range");
  if (y0_dist_cell(static_cast<int>(NoteState::Mask)) != 0.0)
    throw std::invalid_argument("posterior: y0 distribution has MASK mass");
  int j = static_cast<int>(y_tau_cell);
  Vec4 out = Vec4::Zero();
  for (int i = 0; i < kNumStates; ++i) {
    double w = y0_dist_cell(i);
    if (w == 0.0) continue;
    Vec4 comp;
    if (!component_posterior(j, i, tau, schedule, &comp))
      throw std::invalid_argument("posterior: y_tau unreachable from y0 support");
    out += w * comp;
  }
  return out;
}

bool reverse_kernel(NoteState y_tau_cell, const Eigen::Vector3d& clean_probs,
                    int tau, const NoiseSchedule& schedule, Vec4* out) {
  int j = static_cast<int>(y_tau_cell);
  Vec4 acc = Vec4::Zero();
  double reachable_mass = 0.0;
  for (int s = 0; s < 3; ++s) {
    double w = clean_probs(s);
    if (w <= 0.0) continue;
    Vec4 comp;
    if (!component_posterior(j, s, tau, schedule, &comp)) continue;
    acc += w * comp;
    reachable_mass += w;
  }
  if (reachable_mass <= 0.0) return false;
  *out = acc / reachable_mass;
  return true;
}

double prior_kl(const PianoRoll& y0, const NoiseSchedule& schedule) {
  const Mat4& qbar = schedule.cumulative_matrix(schedule.steps());
  // KL for each of the three possible start states, then weighted by counts
  double kl_by_state[3];
  for (int i = 0; i < 3; ++i) {
    double kl = 0.0;
    for (int k = 0; k < kNumStates; ++k) {
      double q = qbar(k, i);
      if (q <= 0.0) continue;
      double p = k == static_cast<int>(NoteState::Mask) ? 1.0 : kPriorEpsilon;
      kl += q * std::log(q / p);
    }
    kl_by_state[i] = kl;
  }
  double total = 0.0;
  for (int t = 0; t < y0.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      int s = static_cast<int>(y0.at(t, p));
      if (s >= 3) throw std::invalid_argument("prior_kl: MASK in y0");
      total += kl_by_state[s];
    }
  }
  return total;
}

namespace {

double safe_log(double x) { return std::log(x < 1e-300 ? 1e-300 : x); }

}  // namespace

VlbLossDetail vlb_loss_detail(const PianoRoll& y0, int tau,
                              const NoiseSchedule& schedule,
                              const CleanStatePredictor& predict,
                              std::uint64_t rng_seed, double aux_weight) {
  if (tau < 1 || tau > schedule.steps())
    throw std::out_of_range("vlb_loss: tau out of range");
  VlbLossDetail out;
  out.y_tau = forward_sample(y0, tau, schedule, rng_seed);
  out.clean_probs = predict(out.y_tau, tau);
  const int cells = y0.frames() * kNumPitches;
  if (out.clean_probs.rows() != cells || out.clean_probs.cols() != 3)
    throw std::invalid_argument("vlb_loss: predictor output has wrong shape");
  out.dprobs = Eigen::MatrixXd::Zero(cells, 3);

  // per-(y_tau state, clean state) posterior columns, shared by all cells
  Eigen::Matrix<double, 4, 3> mix[kNumStates];
  bool mix_ok[kNumStates][3];
  if (tau >= 2) {
    for (int j = 0; j < kNumStates; ++j) {
      for (int s = 0; s < 3; ++s) {
        Vec4 comp;
        mix_ok[j][s] = component_posterior(j, s, tau, schedule, &comp);
        mix[j].col(s) = mix_ok[j][s] ? comp : Vec4::Zero();
      }
    }
  }

  double kl_sum = 0.0, aux_sum = 0.0;
  for (int t = 0; t < y0.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      const int cell = t * kNumPitches + p;
      const int s0 = static_cast<int>(y0.at(t, p));
      const int j = static_cast<int>(out.y_tau.at(t, p));
      const double p0 = out.clean_probs(cell, s0);

      // auxiliary clean-state cross-entropy
      aux_sum += -safe_log(p0);
      out.dprobs(cell, s0) += aux_weight * (-1.0 / (p0 < 1e-300 ? 1e-300 : p0));

      if (tau == 1) {
        kl_sum += -safe_log(p0);
        out.dprobs(cell, s0) += -1.0 / (p0 < 1e-300 ? 1e-300 : p0);
        continue;
      }
      if (!mix_ok[j][s0])
        throw std::invalid_argument("vlb_loss: y_tau unreachable from y0");
      const Vec4 q_exact = mix[j].col(s0);
      Vec4 p_model = Vec4::Zero();
      for (int s = 0; s < 3; ++s) p_model += out.clean_probs(cell, s) * mix[j].col(s);
      for (int k = 0; k < kNumStates; ++k) {
        double qk = q_exact(k);
        if (qk <= 0.0) continue;
        double pk = p_model(k) < 1e-300 ? 1e-300 : p_model(k);
        kl_sum += qk * std::log(qk / pk);
        for (int s = 0; s < 3; ++s)
          out.dprobs(cell, s) += -qk * mix[j](k, s) / pk;
      }
    }
  }
  if (!std::isfinite(kl_sum) || !std::isfinite(aux_sum))
    throw std::runtime_error("vlb_loss: non-finite loss");
  out.value.loss = kl_sum / cells;
  out.value.aux = aux_sum / cells;
  out.dprobs /= static_cast<double>(cells);
  return out;
}

VlbLoss vlb_loss(const PianoRoll& y0, int tau, const NoiseSchedule& schedule,
                 const CleanStatePredictor& predict, std::uint64_t rng_seed) {
  return vlb_loss_detail(y0, tau, schedule, predict, rng_seed, 0.0).value;
}

PianoRoll generate(int frames, const CleanStatePredictor& predict,
                   const NoiseSchedule& schedule, bool as_sampling,
                   std::uint64_t rng_seed) {
  const NoiseSchedule inference =
      as_sampling ? schedule.absorbing_only() : schedule;
  PianoRoll y(frames);
  for (int t = 0; t < frames; ++t)
    for (int p = 0; p < kNumPitches; ++p) y.set(t, p, NoteState::Mask);

  for (int tau = schedule.steps(); tau >= 1; --tau) {
    Eigen::MatrixXd probs = predict(y, tau);
    PianoRoll next(frames);
    for (int t = 0; t < frames; ++t) {
      for (int p = 0; p < kNumPitches; ++p) {
        const int cell = t * kNumPitches + p;
        Eigen::Vector3d cp = probs.row(cell).transpose();
        Vec4 dist;
        NoteState cur = y.at(t, p);
        if (reverse_kernel(cur, cp, tau, inference, &dist)) {
          Rng rng(mix_seed(rng_seed, 0x67656e21ULL, tau, t, p));
          next.set(t, p, static_cast<NoteState>(
                             rng.categorical(dist.data(), kNumStates)));
        } else if (cur == NoteState::Mask) {
          // forced unmask: argmax of the clean-state prediction
          int best = 0;
          cp.maxCoeff(&best);
          next.set(t, p, static_cast<NoteState>(best));
        } else {
          next.set(t, p, cur);
        }
      }
    }
    y = next;
  }
  if (y.contains_mask())
    throw std::runtime_error("generate: MASK remaining after final step");
  return sustain_repair(y);
}

}  // namespace pianodiff
