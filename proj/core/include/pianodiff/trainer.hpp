#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pianodiff/denoiser.hpp"
#include "pianodiff/diffusion.hpp"
#include "pianodiff/lead_sheet.hpp"

namespace pianodiff {

struct TrainConfig {
  int batch_size = 4;
  int max_steps = 5000;
  double beta1 = 0.9;
  double beta2 = 0.96;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double initial_lr = 1.0e-3;
  double lr_decay_factor = 0.8;
  int plateau_patience_steps = 500;
  double aux_weight = 5.0e-4;
  std::uint64_t seed = 0;
  bool augment = true;
  int transpose_min = -5;
  int transpose_max = 6;
  int val_every = 250;       // 0 disables validation
  bool val_f1 = false;       // F1 needs a full generation pass per item
  int checkpoint_every = 0;  // 0 disables periodic checkpoints

  void validate() const;
};

struct TrainItem {
  LeadSheet lead;
  PianoRoll accompaniment;
};

using Corpus = std::vector<TrainItem>;

// Optimizer moments plus everything needed for bit-identical resume.
struct TrainState {
  std::int64_t step = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  double lr = 0.0;
  std::int64_t steps_since_improve = 0;
  std::map<std::string, Mat> m1, m2;  // AdamW moments keyed by tensor name

  void save(std::ostream& os) const;
  static TrainState load(std::istream& is);
};

struct BatchPair {
  PianoRoll lead_roll;
  PianoRoll accompaniment;
};

// Random 8-bar crop plus a shared transposition per pair. Deterministic in
// (cfg.seed, step).
std::vector<BatchPair> make_batch(const Corpus& corpus, const TrainConfig& cfg,
                                  std::int64_t step);

struct StepLosses {
  double loss = 0.0;  // diffusion term
  double aux = 0.0;
  double total = 0.0;
};

class Trainer {
 public:
  Trainer(Denoiser& model, const NoiseSchedule& schedule, TrainConfig cfg);

  StepLosses train_step(const Corpus& corpus);

  struct Validation {
    double mean_loss = 0.0;
    double onset_f1 = 0.0;
  };
  Validation validate(const Corpus& val_corpus, bool compute_f1,
                      std::uint64_t rng_seed) const;

  // plateau schedule on the monitored loss; steps_elapsed is the number of
  // training steps since the previous observation. Returns the (possibly
  // reduced) learning rate.
  double observe_validation(double val_loss, int steps_elapsed);

  TrainState& state() { return state_; }
  const TrainConfig& config() const { return cfg_; }

  void save_checkpoint(const std::string& path) const;
  void restore_checkpoint(const std::string& path);

  // log line: step,loss,aux,lr,val_loss,val_f1 (empty fields when absent)
  static std::string log_line(std::int64_t step, const StepLosses& losses, double lr,
                              std::optional<Validation> val);

 private:
  Denoiser& model_;
  const NoiseSchedule& schedule_;
  TrainConfig cfg_;
  TrainState state_;

  void adamw_update();
};

// Onset-cell F1 with exact (time, pitch) matching.
struct F1Counts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const;
};
F1Counts onset_f1(const PianoRoll& generated, const PianoRoll& reference);

}  // namespace pianodiff
