#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "pianodiff/diffusion.hpp"
#include "pianodiff/layers.hpp"
#include "pianodiff/lead_sheet.hpp"
#include "pianodiff/roll.hpp"

namespace pianodiff {

struct DenoiserConfig {
  int n_layers = 4;                       // decoder blocks
  int window = 5;                         // odd
  std::vector<int> dilations = {1, 2, 4, 8};
  int state_embed_dim = 4;
  int hidden_dim = 32;
  int time_embed_dim = 32;

  // encoder uses half the decoder depth with the leading dilations
  int encoder_layers() const { return std::max(1, n_layers / 2); }

  void validate() const;
  bool operator==(const DenoiserConfig&) const = default;
};

struct EncoderCache {
  Mat embedded;
  BiLstmCache lstm;
  std::vector<BlockCache> blocks;
  Mat lstm_out;
  Mat trunk_out;  // output of the last block, input of the final linear
  Mat output;     // N x hidden
  PianoRoll lead_roll;
};

struct DecoderCache {
  Mat embedded;   // N x E
  Mat concat;     // N x (E + hidden)
  Mat proj;       // N x hidden
  BiLstmCache lstm;
  std::vector<BlockCache> blocks;
  Mat lstm_out;
  Mat trunk_out;  // output of the last block, input of the head
  Mat logits;     // N x 3
  Mat probs;      // N x 3
  int tau = 0;
  PianoRoll y_tau;
};

// Lead-sheet encoder plus timestep-conditioned denoising decoder with a
// shared state-embedding table. All math is double precision; forward and
// backward are deterministic functions of (inputs, parameters).
class Denoiser {
 public:
  explicit Denoiser(const DenoiserConfig& cfg);

  void init_params(std::uint64_t seed);
  const DenoiserConfig& config() const { return cfg_; }

  // enumerates every parameter tensor in a fixed documented order
  void visit_params(const ParamVisitor& f);
  std::size_t parameter_count();
  void zero_grads();

  Mat encode(const PianoRoll& lead_roll, EncoderCache* cache) const;
  // enc is the encoder output for the conditioning lead sheet
  Mat denoise(const PianoRoll& y_tau, const Mat& enc, int tau,
              DecoderCache* cache) const;

  // Backpropagates dprobs (gradient w.r.t. the softmax output) through the
  // decoder; returns the gradient w.r.t. the encoder output.
  Mat denoise_backward(const Mat& dprobs, const Mat& enc, const DecoderCache& cache);
  void encode_backward(const Mat& denc, const EncoderCache& cache);

  // predictor closure over a fixed lead sheet for generation/evaluation
  CleanStatePredictor predictor(const PianoRoll& lead_roll) const;

  void save(std::ostream& os);
  static std::unique_ptr<Denoiser> load(std::istream& is);
  void save_file(const std::string& path);
  static std::unique_ptr<Denoiser> load_file(const std::string& path);

 private:
  DenoiserConfig cfg_;

  Mat embed_;   // 4 x E, shared by encoder and decoder
  Mat gembed_;

  BiLstm enc_lstm_;
  std::vector<NaBlock> enc_blocks_;
  Linear enc_out_;

  Linear dec_proj_;
  BiLstm dec_lstm_;
  std::vector<NaBlock> dec_blocks_;
  Linear head_;

  Mat embed_states(const PianoRoll& roll) const;
  void embed_backward(const PianoRoll& roll, const Mat& dE);
};

}  // namespace pianodiff
