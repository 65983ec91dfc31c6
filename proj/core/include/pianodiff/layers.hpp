#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace pianodiff {

using Mat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Callback receiving (name, value, gradient) for every parameter tensor.
using ParamVisitor = std::function<void(const std::string&, Mat&, Mat&)>;

Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& x, const Mat& dy);

struct Linear {
  Mat W;   // out x in
  Mat b;   // 1 x out
  Mat gW, gb;

  void init(int in, int out, class Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& f);
  Mat forward(const Mat& x) const;
  // accumulates parameter gradients, returns dx
  Mat backward(const Mat& x, const Mat& dy);
};

struct LayerNormCache {
  Mat xhat;
  Vec invstd;
};

// Per-row layer normalization over the feature axis, optionally with a
// learned affine (gamma/beta). The AdaLN path normalizes without affine and
// applies an external scale/shift instead.
struct LayerNorm {
  bool affine = true;
  Mat gamma, beta;  // 1 x dim
  Mat ggamma, gbeta;

  void init(int dim, bool with_affine);
  void visit(const std::string& prefix, const ParamVisitor& f);
  Mat forward(const Mat& x, LayerNormCache* cache) const;
  Mat backward(const Mat& dy, const LayerNormCache& cache);
};

// Modulation y = xhat * (1 + scale) + shift with per-feature vectors shared
// by all cells (the conditioning is a function of the timestep only).
Mat adaln_modulate(const Mat& xhat, const Vec& scale, const Vec& shift);
// returns d_xhat; accumulates into dscale/dshift
Mat adaln_modulate_backward(const Mat& dy, const Mat& xhat, const Vec& scale,
                            Vec& dscale, Vec& dshift);

// Precomputed dilated neighborhoods on a (frames x 88) grid: for each cell a
// window x window key set on the cell's dilation sublattice, shifted inward
// at borders so interior queries always see the full window.
struct Neighborhood {
  int cells = 0;
  std::vector<int> offsets;    // cells + 1
  std::vector<int> neighbors;  // flat key indices
  // reverse map: for each key cell, the flat slots that reference it
  std::vector<int> rev_offsets;
  std::vector<int> rev_slots;
  std::vector<int> slot_query;  // query cell of each flat slot

  static const Neighborhood& get(int frames, int window, int dilation);
};

struct AttentionCache {
  Mat q, k, v, out;
  std::vector<double> weights;  // flat, aligned with Neighborhood::neighbors
};

struct NeighborhoodAttention {
  int dim = 0;
  Linear wq, wk, wv, wo;

  void init(int d, class Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& f);
  Mat forward(const Mat& x, const Neighborhood& nb, AttentionCache* cache) const;
  Mat backward(const Mat& x, const Mat& dy, const Neighborhood& nb,
               const AttentionCache& cache);
};

struct LstmCache {
  // gate activations and cell states, N x H each, rows grouped by timestep
  Mat i, f, g, o, c, tanh_c, h;      // h holds h_t per step
  Mat x;                             // input
};

// One direction of the pitch-wise recurrence: the 88 pitch rows form the
// batch, weights are shared across rows.
struct LstmDirection {
  int in_dim = 0, hidden = 0;
  Mat Wx;  // 4H x in
  Mat Wh;  // 4H x H
  Mat b;   // 1 x 4H
  Mat gWx, gWh, gb;

  void init(int in, int h, class Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& f);
  // reverse_time runs t = T-1 .. 0
  Mat forward(const Mat& x, int frames, int rows, bool reverse_time,
              LstmCache* cache) const;
  Mat backward(const Mat& dy, int frames, int rows, bool reverse_time,
               const LstmCache& cache);
};

struct BiLstmCache {
  LstmCache fw, bw;
};

struct BiLstm {
  LstmDirection fw, bw;

  void init(int in, int hidden_per_dir, class Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& f);
  // output is [h_fw | h_bw], N x 2H
  Mat forward(const Mat& x, int frames, int rows, BiLstmCache* cache) const;
  Mat backward(const Mat& dy, int frames, int rows, const BiLstmCache& cache);
};

struct BlockCache {
  LayerNormCache ln1, ln2;
  Mat x, h;             // block input and post-attention residual
  Mat mod1_in, mod2_in; // modulated (or plain-affine) norm outputs
  Mat ffn_pre, ffn_mid; // pre-activation and activation of the hidden layer
  AttentionCache att;
  // conditioning path
  Mat cond_pre;         // 1 x dim, pre-activation of the cond hidden layer
  Vec s1, t1, s2, t2;   // adaptive scales/shifts
};

// Pre-norm attention + feedforward block. With conditioning the norms are
// adaptive: scale/shift come from a per-block 2-layer perceptron over the
// timestep embedding.
struct NaBlock {
  int dim = 0;
  bool conditioned = false;
  LayerNorm ln1, ln2;
  NeighborhoodAttention attn;
  Linear ffn1, ffn2;
  Linear cond1, cond2;  // time_embed -> dim -> 4*dim (scale1,shift1,scale2,shift2)

  void init(int d, int time_embed_dim, bool with_cond, class Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& f);
  Mat forward(const Mat& x, const Neighborhood& nb, const Vec& time_embed,
              BlockCache* cache) const;
  // dtime may be null when the caller discards the conditioning gradient
  Mat backward(const Mat& dy, const Neighborhood& nb, const Vec& time_embed,
               const BlockCache& cache);
};

Vec sinusoidal_embedding(int tau, int dim);

}  // namespace pianodiff
