#include "pianodiff/denoiser.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pianodiff/rng.hpp"

namespace pianodiff {

void DenoiserConfig::validate() const {
  if (n_layers < 1) throw std::invalid_argument("config: n_layers must be >= 1");
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("config: window must be odd and >= 1");
  if (static_cast<int>(dilations.size()) != n_layers)
    throw std::invalid_argument("config: dilations length must equal n_layers");
  for (int d : dilations)
    if (d < 1) throw std::invalid_argument("config: dilations must be >= 1");
  if (state_embed_dim < 1 || hidden_dim < 2 || hidden_dim % 2 != 0 ||
      time_embed_dim < 2)
    throw std::invalid_argument("config: bad dimensions");
}

Denoiser::Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  enc_blocks_.resize(cfg_.encoder_layers());
  dec_blocks_.resize(cfg_.n_layers);
}

void Denoiser::init_params(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x64656e6fULL));
  const int e = cfg_.state_embed_dim;
  const int h = cfg_.hidden_dim;
  embed_ = Mat(kNumStates, e);
  for (int i = 0; i < kNumStates; ++i)
    for (int j = 0; j < e; ++j) embed_(i, j) = rng.normal() * 0.5;
  gembed_ = Mat::Zero(kNumStates, e);

  enc_lstm_.init(e, h / 2, rng);
  for (int i = 0; i < cfg_.encoder_layers(); ++i)
    enc_blocks_[i].init(h, cfg_.time_embed_dim, false, rng);
  enc_out_.init(h, h, rng);

  dec_proj_.init(e + h, h, rng);
  dec_lstm_.init(h, h / 2, rng);
  for (int i = 0; i < cfg_.n_layers; ++i)
    dec_blocks_[i].init(h, cfg_.time_embed_dim, true, rng);
  head_.init(h, 3, rng);
}

void Denoiser::visit_params(const ParamVisitor& f) {
  f("embed.table", embed_, gembed_);
  enc_lstm_.visit("enc.lstm", f);
  for (int i = 0; i < static_cast<int>(enc_blocks_.size()); ++i)
    enc_blocks_[i].visit("enc.block" + std::to_string(i), f);
  enc_out_.visit("enc.out", f);
  dec_proj_.visit("dec.proj", f);
  dec_lstm_.visit("dec.lstm", f);
  for (int i = 0; i < static_cast<int>(dec_blocks_.size()); ++i)
    dec_blocks_[i].visit("dec.block" + std::to_string(i), f);
  head_.visit("dec.head", f);
}

std::size_t Denoiser::parameter_count() {
  std::size_t n = 0;
  visit_params([&](const std::string&, Mat& v, Mat&) { n += v.size(); });
  return n;
}

void Denoiser::zero_grads() {
  visit_params([](const std::string&, Mat&, Mat& g) { g.setZero(); });
}

Mat Denoiser::embed_states(const PianoRoll& roll) const {
  const int cells = roll.frames() * kNumPitches;
  Mat out(cells, cfg_.state_embed_dim);
  for (int t = 0; t < roll.frames(); ++t)
    for (int p = 0; p < kNumPitches; ++p)
      out.row(t * kNumPitches + p) = embed_.row(static_cast<int>(roll.at(t, p)));
  return out;
}

void Denoiser::embed_backward(const PianoRoll& roll, const Mat& dE) {
  for (int t = 0; t < roll.frames(); ++t)
    for (int p = 0; p < kNumPitches; ++p)
      gembed_.row(static_cast<int>(roll.at(t, p))) += dE.row(t * kNumPitches + p);
}

Mat Denoiser::encode(const PianoRoll& lead_roll, EncoderCache* cache) const {
  const int frames = lead_roll.frames();
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.lead_roll = lead_roll;
  c.embedded = embed_states(lead_roll);
  c.lstm_out = enc_lstm_.forward(c.embedded, frames, kNumPitches, &c.lstm);
  c.blocks.resize(enc_blocks_.size());
  Mat h = c.lstm_out;
  const Vec no_cond;
  for (std::size_t i = 0; i < enc_blocks_.size(); ++i) {
    const auto& nb = Neighborhood::get(frames, cfg_.window, cfg_.dilations[i]);
    h = enc_blocks_[i].forward(h, nb, no_cond, &c.blocks[i]);
  }
  c.trunk_out = h;
  c.output = enc_out_.forward(h);
  return c.output;
}

Mat Denoiser::denoise(const PianoRoll& y_tau, const Mat& enc, int tau,
                      DecoderCache* cache) const {
  const int frames = y_tau.frames();
  const int cells = frames * kNumPitches;
  if (enc.rows() != cells)
    throw std::invalid_argument("denoise: encoder output frame mismatch");
  DecoderCache local;
  DecoderCache& c = cache ? *cache : local;
  c.tau = tau;
  c.y_tau = y_tau;
  c.embedded = embed_states(y_tau);
  c.concat = Mat(cells, cfg_.state_embed_dim + cfg_.hidden_dim);
  c.concat.leftCols(cfg_.state_embed_dim) = c.embedded;
  c.concat.rightCols(cfg_.hidden_dim) = enc;
  c.proj = dec_proj_.forward(c.concat);
  c.lstm_out = dec_lstm_.forward(c.proj, frames, kNumPitches, &c.lstm);

  const Vec temb = sinusoidal_embedding(tau, cfg_.time_embed_dim);
  c.blocks.resize(dec_blocks_.size());
  Mat h = c.lstm_out;
  for (std::size_t i = 0; i < dec_blocks_.size(); ++i) {
    const auto& nb = Neighborhood::get(frames, cfg_.window, cfg_.dilations[i]);
    h = dec_blocks_[i].forward(h, nb, temb, &c.blocks[i]);
  }
  c.trunk_out = h;
  c.logits = head_.forward(h);
  c.probs = Mat(cells, 3);
  for (int r = 0; r < cells; ++r) {
    double mx = c.logits.row(r).maxCoeff();
    Eigen::RowVector3d ex = (c.logits.row(r).array() - mx).exp();
    c.probs.row(r) = ex / ex.sum();
  }
  return c.probs;
}

Mat Denoiser::denoise_backward(const Mat& dprobs, const Mat& enc,
                               const DecoderCache& c) {
  (void)enc;
  const int frames = c.y_tau.frames();
  const int cells = frames * kNumPitches;
  // softmax backward
  Mat dlogits(cells, 3);
  for (int r = 0; r < cells; ++r) {
    double dot = dprobs.row(r).dot(c.probs.row(r));
    dlogits.row(r) =
        (c.probs.row(r).array() * (dprobs.row(r).array() - dot)).matrix();
  }
  Mat dh = head_.backward(c.trunk_out, dlogits);
  const Vec temb = sinusoidal_embedding(c.tau, cfg_.time_embed_dim);
  for (int i = static_cast<int>(dec_blocks_.size()) - 1; i >= 0; --i) {
    const auto& nb = Neighborhood::get(frames, cfg_.window, cfg_.dilations[i]);
    dh = dec_blocks_[i].backward(dh, nb, temb, c.blocks[i]);
  }
  Mat dproj = dec_lstm_.backward(dh, frames, kNumPitches, c.lstm);
  Mat dconcat = dec_proj_.backward(c.concat, dproj);
  embed_backward(c.y_tau, dconcat.leftCols(cfg_.state_embed_dim));
  return dconcat.rightCols(cfg_.hidden_dim);
}

void Denoiser::encode_backward(const Mat& denc, const EncoderCache& c) {
  const int frames = c.lead_roll.frames();
  Mat dh = enc_out_.backward(c.trunk_out, denc);
  const Vec no_cond;
  for (int i = static_cast<int>(enc_blocks_.size()) - 1; i >= 0; --i) {
    const auto& nb = Neighborhood::get(frames, cfg_.window, cfg_.dilations[i]);
    dh = enc_blocks_[i].backward(dh, nb, no_cond, c.blocks[i]);
  }
  Mat dembed = enc_lstm_.backward(dh, frames, kNumPitches, c.lstm);
  embed_backward(c.lead_roll, dembed);
}

CleanStatePredictor Denoiser::predictor(const PianoRoll& lead_roll) const {
  auto enc = std::make_shared<Mat>(encode(lead_roll, nullptr));
  return [this, enc](const PianoRoll& y_tau, int tau) {
    return denoise(y_tau, *enc, tau, nullptr);
  };
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated");
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  is.read(reinterpret_cast<char*>(&v), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated");
  return v;
}

constexpr char kMagic[8] = {'P', 'D', 'N', 'Z', 'C', 'K', '0', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianTag = 0x01020304;

}  // namespace

void Denoiser::save(std::ostream& os) {
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_u32(os, kEndianTag);
  write_u32(os, static_cast<std::uint32_t>(cfg_.n_layers));
  write_u32(os, static_cast<std::uint32_t>(cfg_.window));
  write_u32(os, static_cast<std::uint32_t>(cfg_.dilations.size()));
  for (int d : cfg_.dilations) write_u32(os, static_cast<std::uint32_t>(d));
  write_u32(os, static_cast<std::uint32_t>(cfg_.state_embed_dim));
  write_u32(os, static_cast<std::uint32_t>(cfg_.hidden_dim));
  write_u32(os, static_cast<std::uint32_t>(cfg_.time_embed_dim));
  write_u64(os, parameter_count());
  visit_params([&](const std::string& name, Mat& v, Mat&) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, static_cast<std::uint64_t>(v.rows()));
    write_u64(os, static_cast<std::uint64_t>(v.cols()));
    // row-major for byte-stable output regardless of Eigen's storage order
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      os.write(reinterpret_cast<const char*>(v.row(r).eval().data()),
               static_cast<std::streamsize>(v.cols() * sizeof(double)));
  });
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

std::unique_ptr<Denoiser> Denoiser::load(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  if (read_u32(is) != kVersion) throw std::runtime_error("checkpoint: bad version");
  if (read_u32(is) != kEndianTag)
    throw std::runtime_error("checkpoint: endianness mismatch");
  DenoiserConfig cfg;
  cfg.n_layers = static_cast<int>(read_u32(is));
  cfg.window = static_cast<int>(read_u32(is));
  std::uint32_t nd = read_u32(is);
  cfg.dilations.assign(nd, 1);
  for (auto& d : cfg.dilations) d = static_cast<int>(read_u32(is));
  cfg.state_embed_dim = static_cast<int>(read_u32(is));
  cfg.hidden_dim = static_cast<int>(read_u32(is));
  cfg.time_embed_dim = static_cast<int>(read_u32(is));
  auto model = std::make_unique<Denoiser>(cfg);
  model->init_params(0);
  std::uint64_t expect = read_u64(is);
  if (expect != model->parameter_count())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  model->visit_params([&](const std::string& name, Mat& v, Mat&) {
    std::uint32_t len = read_u32(is);
    std::string got(len, '\0');
    is.read(got.data(), len);
    if (got != name) throw std::runtime_error("checkpoint: tensor order mismatch at " + name);
    auto rows = static_cast<Eigen::Index>(read_u64(is));
    auto cols = static_cast<Eigen::Index>(read_u64(is));
    if (rows != v.rows() || cols != v.cols())
      throw std::runtime_error("checkpoint: tensor shape mismatch at " + name);
    std::vector<double> buf(static_cast<std::size_t>(cols));
    for (Eigen::Index r = 0; r < rows; ++r) {
      is.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(cols * sizeof(double)));
      for (Eigen::Index cc = 0; cc < cols; ++cc) v(r, cc) = buf[cc];
    }
  });
  if (!is) throw std::runtime_error("checkpoint: truncated");
  return model;
}

void Denoiser::save_file(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  save(f);
}

std::unique_ptr<Denoiser> Denoiser::load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  return load(f);
}

}  // namespace pianodiff
