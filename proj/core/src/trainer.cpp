#include "pianodiff/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pianodiff/rng.hpp"

namespace pianodiff {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (initial_lr < 0) throw std::invalid_argument("train config: lr must be >= 0");
  if (lr_decay_factor <= 0 || lr_decay_factor >= 1)
    throw std::invalid_argument("train config: decay factor must be in (0,1)");
  if (aux_weight < 0) throw std::invalid_argument("train config: aux_weight must be >= 0");
  if (transpose_min > transpose_max)
    throw std::invalid_argument("train config: bad transpose range");
}

std::vector<BatchPair> make_batch(const Corpus& corpus, const TrainConfig& cfg,
                                  std::int64_t step) {
  if (corpus.empty()) throw std::invalid_argument("make_batch: empty corpus");
  std::vector<BatchPair> batch;
  batch.reserve(cfg.batch_size);
  for (int b = 0; b < cfg.batch_size; ++b) {
    // round-robin item selection; crop and transposition are randomized
    std::size_t idx = static_cast<std::size_t>(
        (step * cfg.batch_size + b) % static_cast<std::int64_t>(corpus.size()));
    const TrainItem& item = corpus[idx];
    int bars = item.accompaniment.frames() / kFramesPerBar;
    if (bars < 8 || item.lead.roll.frames() != item.accompaniment.frames())
      throw std::invalid_argument("make_batch: corpus item shorter than 8 bars");
    Rng rng(mix_seed(cfg.seed, 0x62617463ULL, static_cast<std::uint64_t>(step), b));
    int offset = cfg.augment ? static_cast<int>(rng.below(bars - 8 + 1)) : 0;
    BatchPair pair{crop_bars(item.lead.roll, offset), crop_bars(item.accompaniment, offset)};
    if (cfg.augment) {
      int range = cfg.transpose_max - cfg.transpose_min + 1;
      int semis = cfg.transpose_min + static_cast<int>(rng.below(range));
      pair.lead_roll = transpose(pair.lead_roll, semis).roll;
      pair.accompaniment = transpose(pair.accompaniment, semis).roll;
    }
    batch.push_back(std::move(pair));
  }
  return batch;
}

Trainer::Trainer(Denoiser& model, const NoiseSchedule& schedule, TrainConfig cfg)
    : model_(model), schedule_(schedule), cfg_(std::move(cfg)) {
  cfg_.validate();
  state_.lr = cfg_.initial_lr;
}

StepLosses Trainer::train_step(const Corpus& corpus) {
  auto batch = make_batch(corpus, cfg_, state_.step);
  model_.zero_grads();
  StepLosses losses;
  const double inv_batch = 1.0 / batch.size();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Rng rng(mix_seed(cfg_.seed, 0x74617573ULL,
                     static_cast<std::uint64_t>(state_.step), b));
    int tau = 1 + static_cast<int>(rng.below(schedule_.steps()));
    std::uint64_t noise_seed = mix_seed(cfg_.seed, 0x6e6f6973ULL,
                                        static_cast<std::uint64_t>(state_.step), b);
    EncoderCache ec;
    Mat enc = model_.encode(batch[b].lead_roll, &ec);
    DecoderCache dc;
    auto predict = [&](const PianoRoll& y_tau, int t) {
      return model_.denoise(y_tau, enc, t, &dc);
    };
    VlbLossDetail detail = vlb_loss_detail(batch[b].accompaniment, tau, schedule_,
                                           predict, noise_seed, cfg_.aux_weight);
    losses.loss += detail.value.loss * inv_batch;
    losses.aux += detail.value.aux * inv_batch;
    Mat denc = model_.denoise_backward(detail.dprobs * inv_batch, enc, dc);
    model_.encode_backward(denc, ec);
  }
  losses.total = losses.loss + cfg_.aux_weight * losses.aux;
  if (!std::isfinite(losses.total)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss at step " << state_.step
        << " (loss=" << losses.loss << " aux=" << losses.aux << ")";
    throw std::runtime_error(msg.str());
  }
  adamw_update();
  ++state_.step;
  return losses;
}

void Trainer::adamw_update() {
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double t = static_cast<double>(state_.step + 1);
  const double bc1 = 1.0 - std::pow(b1, t);
  const double bc2 = 1.0 - std::pow(b2, t);
  model_.visit_params([&](const std::string& name, Mat& v, Mat& g) {
    Mat& m = state_.m1.try_emplace(name, Mat::Zero(v.rows(), v.cols())).first->second;
    Mat& s = state_.m2.try_emplace(name, Mat::Zero(v.rows(), v.cols())).first->second;
    m = b1 * m + (1.0 - b1) * g;
    s = (b2 * s.array() + (1.0 - b2) * g.array().square()).matrix();
    Mat mhat = m / bc1;
    Mat update =
        (mhat.array() / ((s.array() / bc2).sqrt() + cfg_.adam_eps)).matrix() +
        cfg_.weight_decay * v;
    v -= state_.lr * update;
  });
}

Trainer::Validation Trainer::validate(const Corpus& val_corpus, bool compute_f1,
                                      std::uint64_t rng_seed) const {
  Validation out;
  if (val_corpus.empty()) return out;
  F1Counts counts;
  for (std::size_t i = 0; i < val_corpus.size(); ++i) {
    const auto& item = val_corpus[i];
    Mat enc = model_.encode(item.lead.roll, nullptr);
    auto predict = [&](const PianoRoll& y_tau, int t) {
      return model_.denoise(y_tau, enc, t, nullptr);
    };
    Rng rng(mix_seed(rng_seed, 0x76616c74ULL, i));
    int tau = 1 + static_cast<int>(rng.below(schedule_.steps()));
    VlbLoss l = vlb_loss(item.accompaniment, tau, schedule_, predict,
                         mix_seed(rng_seed, 0x76616c6eULL, i));
    out.mean_loss += l.total(cfg_.aux_weight) / val_corpus.size();
    if (compute_f1) {
      PianoRoll gen = generate(item.lead.roll.frames(), predict, schedule_, true,
                               mix_seed(rng_seed, 0x76616c67ULL, i));
      F1Counts c = onset_f1(gen, item.accompaniment);
      counts.tp += c.tp;
      counts.fp += c.fp;
      counts.fn += c.fn;
    }
  }
  out.onset_f1 = compute_f1 ? counts.f1() : 0.0;
  return out;
}

double Trainer::observe_validation(double val_loss, int steps_elapsed) {
  if (val_loss < state_.best_val_loss) {
    state_.best_val_loss = val_loss;
    state_.steps_since_improve = 0;
  } else {
    state_.steps_since_improve += steps_elapsed;
    if (state_.steps_since_improve >= cfg_.plateau_patience_steps) {
      state_.lr *= cfg_.lr_decay_factor;
      state_.steps_since_improve = 0;
    }
  }
  return state_.lr;
}

namespace {

constexpr char kStateMagic[8] = {'P', 'D', 'T', 'S', '0', '0', '0', '1'};

void write_mat(std::ostream& os, const Mat& m) {
  std::uint64_t rows = m.rows(), cols = m.cols();
  os.write(reinterpret_cast<const char*>(&rows), 8);
  os.write(reinterpret_cast<const char*>(&cols), 8);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    os.write(reinterpret_cast<const char*>(m.row(r).eval().data()),
             static_cast<std::streamsize>(m.cols() * sizeof(double)));
}

Mat read_mat(std::istream& is) {
  std::uint64_t rows, cols;
  is.read(reinterpret_cast<char*>(&rows), 8);
  is.read(reinterpret_cast<char*>(&cols), 8);
  if (!is) throw std::runtime_error("train state: truncated");
  Mat m(rows, cols);
  std::vector<double> buf(cols);
  for (std::uint64_t r = 0; r < rows; ++r) {
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(cols * sizeof(double)));
    for (std::uint64_t c = 0; c < cols; ++c) m(r, c) = buf[c];
  }
  return m;
}

void write_map(std::ostream& os, const std::map<std::string, Mat>& m) {
  std::uint64_t n = m.size();
  os.write(reinterpret_cast<const char*>(&n), 8);
  for (const auto& [name, mat] : m) {
    std::uint32_t len = static_cast<std::uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&len), 4);
    os.write(name.data(), len);
    write_mat(os, mat);
  }
}

std::map<std::string, Mat> read_map(std::istream& is) {
  std::uint64_t n;
  is.read(reinterpret_cast<char*>(&n), 8);
  std::map<std::string, Mat> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t len;
    is.read(reinterpret_cast<char*>(&len), 4);
    std::string name(len, '\0');
    is.read(name.data(), len);
    out[name] = read_mat(is);
  }
  return out;
}

}  // namespace

void TrainState::save(std::ostream& os) const {
  os.write(kStateMagic, 8);
  os.write(reinterpret_cast<const char*>(&step), 8);
  os.write(reinterpret_cast<const char*>(&best_val_loss), 8);
  os.write(reinterpret_cast<const char*>(&lr), 8);
  os.write(reinterpret_cast<const char*>(&steps_since_improve), 8);
  write_map(os, m1);
  write_map(os, m2);
}

TrainState TrainState::load(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kStateMagic, 8) != 0)
    throw std::runtime_error("train state: bad magic");
  TrainState s;
  is.read(reinterpret_cast<char*>(&s.step), 8);
  is.read(reinterpret_cast<char*>(&s.best_val_loss), 8);
  is.read(reinterpret_cast<char*>(&s.lr), 8);
  is.read(reinterpret_cast<char*>(&s.steps_since_improve), 8);
  s.m1 = read_map(is);
  s.m2 = read_map(is);
  if (!is) throw std::runtime_error("train state: truncated");
  return s;
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  model_.save(f);
  state_.save(f);
}

void Trainer::restore_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  auto loaded = Denoiser::load(f);
  if (!(loaded->config() == model_.config()))
    throw std::runtime_error("restore: config mismatch");
  std::map<std::string, Mat> params;
  loaded->visit_params(
      [&](const std::string& name, Mat& v, Mat&) { params[name] = v; });
  model_.visit_params([&](const std::string& name, Mat& v, Mat&) {
    v = params.at(name);
  });
  state_ = TrainState::load(f);
}

std::string Trainer::log_line(std::int64_t step, const StepLosses& losses, double lr,
                              std::optional<Validation> val) {
  char buf[256];
  if (val) {
    std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g,%.12g,%.12g",
                  static_cast<long long>(step), losses.loss, losses.aux, lr,
                  val->mean_loss, val->onset_f1);
  } else {
    std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g,,",
                  static_cast<long long>(step), losses.loss, losses.aux, lr);
  }
  return buf;
}

double F1Counts::f1() const {
  double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

F1Counts onset_f1(const PianoRoll& generated, const PianoRoll& reference) {
  if (generated.frames() != reference.frames())
    throw std::invalid_argument("onset_f1: frame mismatch");
  F1Counts c;
  for (int t = 0; t < generated.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      bool g = generated.at(t, p) == NoteState::Onset;
      bool r = reference.at(t, p) == NoteState::Onset;
      if (g && r) ++c.tp;
      else if (g) ++c.fp;
      else if (r) ++c.fn;
    }
  }
  return c;
}

}  // namespace pianodiff
