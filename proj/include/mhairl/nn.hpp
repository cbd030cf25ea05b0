#pragma once

#include "mhairl/tensor.hpp"

namespace mhairl {

// Parameter registration helpers. Each creates named tensors under `prefix`
// using the shared fan-in uniform init (biases zero).
void add_linear(ParamSet& ps, const std::string& prefix, int out, int in, RngStream& rng);
void add_mlp(ParamSet& ps, const std::string& prefix, int in,
             const std::vector<int>& hidden, int out, RngStream& rng);
void add_gru(ParamSet& ps, const std::string& prefix, int in, int hidden, RngStream& rng);
// Multi-head attention block: per-head query/key projections of size d_k x d_k,
// value projections d_v x d_v, and an output projection d_v x (heads*d_v).
void add_mha(ParamSet& ps, const std::string& prefix, int d_k, int d_v, int heads,
             RngStream& rng);

// Tape-level forwards. All take node ids and return node ids.
int linear(Tape& t, ParamSet& ps, const std::string& prefix, int x);
int mlp_forward(Tape& t, ParamSet& ps, const std::string& prefix, int x, int n_hidden);
// h' = (1-z) ⊙ h + z ⊙ h~ with z = logistic(Wz[x;h]+bz), r = logistic(Wr[x;h]+br),
// h~ = tanh(Wh[x; r⊙h]+bh).
int gru_step(Tape& t, ParamSet& ps, const std::string& prefix, int x, int h);
// q: [d_k] query node; K/V: [n,d_k]/[n,d_v] matrix nodes. Returns [d_v].
int mha_forward(Tape& t, ParamSet& ps, const std::string& prefix, int q, int K, int V,
                int heads);

/// Fixed featurization for grid observations: 11x11 one-hot layouts with the
/// appended 2-dim context (123-dim) collapse to the two normalized cell
/// coordinates plus the context; every other encoding passes through
/// unchanged. Constant transform, no learned parameters. Network input widths
/// must be sized with obs_feat_dim.
int obs_feat_dim(int obs_dim);
Tensor obs_features(const Tensor& s);

int logprob_categorical(Tape& t, int logits, int index);
int logprob_gaussian(Tape& t, int mean, int log_std, int x);

// Plain-value softmax helper for sampling (max-subtracted).
std::vector<double> softmax_values(const std::vector<double>& logits);
int argmax_index(const std::vector<double>& v);

}  // namespace mhairl
