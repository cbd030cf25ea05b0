#include "mhairl/nn.hpp"

#include <cmath>

namespace mhairl {

void add_linear(ParamSet& ps, const std::string& prefix, int out, int in, RngStream& rng) {
    ps.add(prefix + ".W", init_uniform_fanin({out, in}, in, rng));
    ps.add(prefix + ".b", init_zeros({out}));
}

void add_mlp(ParamSet& ps, const std::string& prefix, int in,
             const std::vector<int>& hidden, int out, RngStream& rng) {
    int d = in;
    for (size_t i = 0; i < hidden.size(); ++i) {
        add_linear(ps, prefix + ".l" + std::to_string(i), hidden[i], d, rng);
        d = hidden[i];
    }
    add_linear(ps, prefix + ".out", out, d, rng);
}

void add_gru(ParamSet& ps, const std::string& prefix, int in, int hidden, RngStream& rng) {
    add_linear(ps, prefix + ".z", hidden, in + hidden, rng);
    add_linear(ps, prefix + ".r", hidden, in + hidden, rng);
    add_linear(ps, prefix + ".h", hidden, in + hidden, rng);
}

void add_mha(ParamSet& ps, const std::string& prefix, int d_k, int d_v, int heads,
             RngStream& rng) {
    for (int i = 0; i < heads; ++i) {
        std::string hp = prefix + ".h" + std::to_string(i);
        ps.add(hp + ".Wq", init_uniform_fanin({d_k, d_k}, d_k, rng));
        ps.add(hp + ".Wk", init_uniform_fanin({d_k, d_k}, d_k, rng));
        ps.add(hp + ".Wv", init_uniform_fanin({d_v, d_v}, d_v, rng));
    }
    ps.add(prefix + ".Wo", init_uniform_fanin({d_v, heads * d_v}, heads * d_v, rng));
}

int linear(Tape& t, ParamSet& ps, const std::string& prefix, int x) {
    int W = t.param(ps, prefix + ".W");
    int b = t.param(ps, prefix + ".b");
    return t.add(t.matvec(W, x), b);
}

int mlp_forward(Tape& t, ParamSet& ps, const std::string& prefix, int x, int n_hidden) {
    int h = x;
    for (int i = 0; i < n_hidden; ++i)
        h = t.tanh_(linear(t, ps, prefix + ".l" + std::to_string(i), h));
    return linear(t, ps, prefix + ".out", h);
}

int gru_step(Tape& t, ParamSet& ps, const std::string& prefix, int x, int h) {
    int xh = t.concat({x, h});
    int z = t.sigmoid_(linear(t, ps, prefix + ".z", xh));
    int r = t.sigmoid_(linear(t, ps, prefix + ".r", xh));
    int xrh = t.concat({x, t.mul(r, h)});
    int hc = t.tanh_(linear(t, ps, prefix + ".h", xrh));
    // h' = (1-z)*h + z*hc
    int one_minus_z = t.add_const(t.neg(z), 1.0);
    return t.add(t.mul(one_minus_z, h), t.mul(z, hc));
}

int mha_forward(Tape& t, ParamSet& ps, const std::string& prefix, int q, int K, int V,
                int heads) {
    const auto& kshape = t.node(K).shape;
    if (kshape.size() != 2 || t.node(V).shape.size() != 2 ||
        t.node(q).shape.size() != 1 || t.node(q).shape[0] != kshape[1] ||
        t.node(V).shape[0] != kshape[0])
        throw ContractViolation("mha_forward: shape mismatch");
    int d_k = kshape[1];
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_k));
    std::vector<int> head_outs;
    for (int i = 0; i < heads; ++i) {
        std::string hp = prefix + ".h" + std::to_string(i);
        int qp = t.matvec(t.param(ps, hp + ".Wq"), q);
        int Kp = t.matmul_nt(K, t.param(ps, hp + ".Wk"));  // rows: Wk k_j
        int Vp = t.matmul_nt(V, t.param(ps, hp + ".Wv"));  // rows: Wv v_j
        int scores = t.scale(t.matvec(Kp, qp), inv_sqrt);
        int att = t.softmax(scores);
        head_outs.push_back(t.vecmat(att, Vp));
    }
    int cat = heads == 1 ? head_outs[0] : t.concat(head_outs);
    return t.matvec(t.param(ps, prefix + ".Wo"), cat);
}

int logprob_categorical(Tape& t, int logits, int index) {
    return t.pick(t.log_softmax(logits), index);
}

int logprob_gaussian(Tape& t, int mean, int log_std, int x) {
    // sum_i [ -log_std_i - 0.5*ln(2*pi) - 0.5*((x-mean)/std)^2 ]
    int diff = t.sub(x, mean);
    int inv_std = t.exp_(t.neg(log_std));
    int zscore = t.mul(diff, inv_std);
    int quad = t.scale(t.sum(t.square(zscore)), -0.5);
    int n = static_cast<int>(t.node(x).val.size());
    int norm = t.add_const(t.neg(t.sum(log_std)), -0.5 * std::log(2.0 * M_PI) * n);
    return t.add(quad, norm);
}

std::vector<double> softmax_values(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (auto& v : out) v /= z;
    return out;
}

int argmax_index(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

int obs_feat_dim(int obs_dim) { return obs_dim == 123 ? 4 : obs_dim; }

Tensor obs_features(const Tensor& s) {
    if (s.size() != 123) return s;
    int idx = 0;
    for (int i = 1; i < 121; ++i)
        if (s.data[i] > s.data[idx]) idx = i;
    return Tensor({4}, {(idx % 11 - 5.0) / 5.0, (idx / 11 - 5.0) / 5.0,
                        s.data[121], s.data[122]});
}

}  // namespace mhairl
