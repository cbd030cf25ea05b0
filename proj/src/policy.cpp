#include "mhairl/policy.hpp"

#include <cmath>

namespace mhairl {

HierPolicy make_hier_policy(int obs_dim, int act_count, int ctx_dim, int N, int E,
                            int heads, int hidden, RngStream& rng, bool low_ctx) {
    HierPolicy p;
    p.N = N;
    p.E = E;
    p.obs_dim = obs_dim;
    p.act_count = act_count;
    p.ctx_dim = ctx_dim;
    p.heads = heads;
    p.hidden = hidden;
    p.low_ctx = low_ctx;
    p.params.add("wc", init_uniform_fanin({N, E}, E, rng));
    int in_dim = obs_feat_dim(obs_dim) + ctx_dim + E;
    add_linear(p.params, "high.query", E, in_dim, rng);
    add_mha(p.params, "high.mha", E, E, heads, rng);
    add_linear(p.params, "high.out", N, E, rng);
    // Observations append the context, so a context-free low level also drops
    // the trailing ctx_dim observation features.
    int low_in = low_ctx ? in_dim : obs_feat_dim(obs_dim) - ctx_dim + E;
    add_mlp(p.params, "low", low_in, {hidden, hidden}, act_count, rng);
    return p;
}

Tensor ctx_input(const HierPolicy& p, const std::vector<double>& ctx) {
    if (p.ctx_dim == 0) return Tensor();
    if (static_cast<int>(ctx.size()) != p.ctx_dim)
        throw ContractViolation("context dimension mismatch");
    return Tensor({p.ctx_dim}, ctx);
}

namespace {
int onehot_node(Tape& t, int dim, int idx) {
    Tensor o = Tensor::zeros({dim});
    o.at(idx) = 1.0;
    return t.input(o);
}

int concat_in(Tape& t, const Tensor& obs, const Tensor& ctx, int tail) {
    int o = t.input(obs_features(obs));
    if (ctx.size() == 0) return t.concat({o, tail});
    return t.concat({o, t.input(ctx), tail});
}
}  // namespace

int high_logits(Tape& t, HierPolicy& p, const Tensor& obs, int z_prev, const Tensor& ctx) {
    if (z_prev < 0 || z_prev >= p.N) throw ContractViolation("option index out of range");
    int wc = t.param(p.params, "wc");
    int zembed = t.vecmat(onehot_node(t, p.N, z_prev), wc);
    int qin = concat_in(t, obs, ctx, zembed);
    int q = linear(t, p.params, "high.query", qin);
    int att = mha_forward(t, p.params, "high.mha", q, wc, wc, p.heads);
    return linear(t, p.params, "high.out", att);
}

int low_logits(Tape& t, HierPolicy& p, const Tensor& obs, int z, const Tensor& ctx) {
    if (z < 0 || z >= p.N) throw ContractViolation("option index out of range");
    int wc = t.param(p.params, "wc");
    int zembed = t.vecmat(onehot_node(t, p.N, z), wc);
    int in;
    if (p.low_ctx) {
        in = concat_in(t, obs, ctx, zembed);
    } else {
        // Context-free low level: drop the appended ctx features so the task
        // reaches actions only through the selected option.
        int o = t.input(obs_features(obs));
        int keep = obs_feat_dim(p.obs_dim) - p.ctx_dim;
        in = t.concat({t.slice(o, 0, keep), zembed});
    }
    return mlp_forward(t, p.params, "low", in, 2);
}

HierTrajectory rollout(HierPolicy& p, const TaskSpec& spec, const TaskContext& c,
                       RngStream& rng, bool argmax) {
    HierTrajectory tr;
    tr.ctx = c.vec;
    tr.ctx_index = c.discrete ? c.index : -1;
    Tensor ctx = ctx_input(p, c.vec);
    EnvState s = reset(spec, c);
    tr.states.push_back(observe(spec, s));
    tr.options.push_back(0);
    while (!s.done) {
        const Tensor& obs = tr.states.back();
        Tape t;
        t.grad_enabled = false;
        int hl = high_logits(t, p, obs, tr.options.back(), ctx);
        std::vector<double> ph = softmax_values(t.val(hl));
        int z = argmax ? argmax_index(ph) : rng.categorical(ph);
        int ll = low_logits(t, p, obs, z, ctx);
        std::vector<double> pl = softmax_values(t.val(ll));
        int a = argmax ? argmax_index(pl) : rng.categorical(pl);
        tr.logp_high.push_back(std::log(ph[z]));
        tr.logp_low.push_back(std::log(pl[a]));
        StepResult r = step(spec, s, a);
        tr.options.push_back(z);
        tr.actions.push_back(a);
        tr.env_rewards.push_back(r.reward);
        tr.states.push_back(observe(spec, s));
    }
    return tr;
}

int joint_logprob(Tape& t, HierPolicy& p, const HierTrajectory& traj) {
    Tensor ctx = ctx_input(p, traj.ctx);
    std::vector<int> terms;
    for (int i = 0; i < traj.T(); ++i) {
        int hl = high_logits(t, p, traj.states[i], traj.options[i], ctx);
        terms.push_back(logprob_categorical(t, hl, traj.options[i + 1]));
        int ll = low_logits(t, p, traj.states[i], traj.options[i + 1], ctx);
        terms.push_back(logprob_categorical(t, ll, traj.actions[i]));
    }
    return t.sum(t.concat(terms));
}

}  // namespace mhairl
