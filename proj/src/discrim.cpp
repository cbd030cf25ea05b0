#include "mhairl/discrim.hpp"

#include <cmath>

namespace mhairl {

Discriminator make_discriminator(DiscMode mode, int obs_dim, int act_count, int N,
                                 int ctx_dim, int hidden, double gamma, RngStream& rng) {
    Discriminator d;
    d.mode = mode;
    d.gamma = gamma;
    d.obs_dim = obs_dim;
    d.act_count = act_count;
    d.N = N;
    d.ctx_dim = ctx_dim;
    d.hidden = hidden;
    int pair_in = obs_feat_dim(obs_dim) + 2 * N + act_count + ctx_dim;
    int state_in = obs_feat_dim(obs_dim) + N + ctx_dim;
    switch (mode) {
        case DiscMode::AirlRaw:
            add_mlp(d.params, "f", pair_in, {hidden, hidden}, 1, rng);
            break;
        case DiscMode::AirlStateOnly:
            add_mlp(d.params, "g", state_in, {hidden, hidden}, 1, rng);
            add_mlp(d.params, "h", state_in, {hidden, hidden}, 1, rng);
            break;
        case DiscMode::Gail:
            add_mlp(d.params, "dnet", pair_in, {hidden, hidden}, 1, rng);
            break;
    }
    return d;
}

namespace {
int onehot_node(Tape& t, int dim, int idx) {
    Tensor o = Tensor::zeros({dim});
    o.at(idx) = 1.0;
    return t.input(o);
}

int pair_input(Tape& t, const Discriminator& d, const ExtendedPair& p) {
    std::vector<int> parts{t.input(obs_features(p.s)), onehot_node(t, d.N, p.z),
                           onehot_node(t, d.N, p.z_next),
                           onehot_node(t, d.act_count, p.a)};
    if (d.ctx_dim > 0) {
        if (static_cast<int>(p.ctx.size()) != d.ctx_dim)
            throw ContractViolation("discriminator: context dimension mismatch");
        parts.push_back(t.input(Tensor({d.ctx_dim}, p.ctx)));
    }
    return t.concat(parts);
}

int state_input(Tape& t, const Discriminator& d, const Tensor& s, int z,
                const std::vector<double>& ctx) {
    std::vector<int> parts{t.input(obs_features(s)), onehot_node(t, d.N, z)};
    if (d.ctx_dim > 0) {
        if (static_cast<int>(ctx.size()) != d.ctx_dim)
            throw ContractViolation("discriminator: context dimension mismatch");
        parts.push_back(t.input(Tensor({d.ctx_dim}, ctx)));
    }
    return t.concat(parts);
}
}  // namespace

int f_value(Tape& t, Discriminator& d, const ExtendedPair& pair) {
    if (d.mode == DiscMode::Gail)
        throw ContractViolation("f_value is undefined in GAIL mode");
    if (d.mode == DiscMode::AirlRaw)
        return mlp_forward(t, d.params, "f", pair_input(t, d, pair), 2);
    if (pair.s_next.size() == 0)
        throw ContractViolation("state-only discriminator needs the successor pair");
    int g = mlp_forward(t, d.params, "g", state_input(t, d, pair.s, pair.z, pair.ctx), 2);
    int h_cur =
        mlp_forward(t, d.params, "h", state_input(t, d, pair.s, pair.z, pair.ctx), 2);
    int h_next = mlp_forward(t, d.params, "h",
                             state_input(t, d, pair.s_next, pair.z_next, pair.ctx), 2);
    return t.add(g, t.sub(t.scale(h_next, d.gamma), h_cur));
}

namespace {
double clamp_prob(double p) { return std::min(1.0 - 1e-8, std::max(1e-8, p)); }

double logistic(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double gail_logit(Discriminator& d, const ExtendedPair& pair) {
    Tape t;
    t.grad_enabled = false;
    return t.scalar_val(mlp_forward(t, d.params, "dnet", pair_input(t, d, pair), 2));
}
}  // namespace

double d_prob(Discriminator& d, const ExtendedPair& pair) {
    if (d.mode == DiscMode::Gail) return clamp_prob(logistic(gail_logit(d, pair)));
    Tape t;
    t.grad_enabled = false;
    double f = t.scalar_val(f_value(t, d, pair));
    return logistic(f - pair.policy_logprob);
}

double airl_reward(Discriminator& d, const ExtendedPair& pair) {
    if (d.mode == DiscMode::Gail)
        throw ContractViolation("airl_reward undefined in GAIL mode");
    Tape t;
    t.grad_enabled = false;
    double f = t.scalar_val(f_value(t, d, pair));
    return f - pair.policy_logprob;  // = log D - log(1-D)
}

double gail_reward(Discriminator& d, const ExtendedPair& pair) {
    if (d.mode != DiscMode::Gail)
        throw ContractViolation("gail_reward requires GAIL mode");
    return -std::log(clamp_prob(logistic(gail_logit(d, pair))));
}

double il_reward(Discriminator& d, const ExtendedPair& pair) {
    return d.mode == DiscMode::Gail ? gail_reward(d, pair) : airl_reward(d, pair);
}

double disc_loss_backward(Tape& t, Discriminator& d,
                          const std::vector<ExtendedPair>& expert_batch,
                          const std::vector<ExtendedPair>& gen_batch,
                          const std::vector<double>* expert_weights,
                          const std::vector<double>* gen_weights) {
    if (expert_batch.empty() || gen_batch.empty())
        throw ContractViolation("disc_loss: empty batch");
    bool gail = d.mode == DiscMode::Gail;
    auto side_loss = [&](const std::vector<ExtendedPair>& batch,
                         const std::vector<double>* weights, bool expert) {
        std::vector<int> terms;
        double wsum = 0.0;
        for (size_t i = 0; i < batch.size(); ++i) {
            const auto& p = batch[i];
            int u;
            if (gail) {
                u = mlp_forward(t, d.params, "dnet", pair_input(t, d, p), 2);
            } else {
                u = t.add_const(f_value(t, d, p), -p.policy_logprob);
            }
            // AIRL: expert -log D = softplus(-u); gen -log(1-D) = softplus(u).
            // GAIL labels are flipped (D = P(generated), expert label 0).
            bool negate = expert != gail;
            int term = t.softplus_(negate ? t.neg(u) : u);
            double w = weights ? (*weights)[i] : 1.0;
            terms.push_back(t.scale(term, w));
            wsum += w;
        }
        return t.scale(t.sum(t.concat(terms)), 1.0 / wsum);
    };
    int loss = t.add(side_loss(expert_batch, expert_weights, true),
                     side_loss(gen_batch, gen_weights, false));
    t.backward(loss);
    return t.scalar_val(loss);
}

std::vector<ExtendedPair> extended_pairs(const HierTrajectory& tr) {
    std::vector<ExtendedPair> out;
    for (int i = 0; i < tr.T(); ++i) {
        ExtendedPair p;
        p.s = tr.states[i];
        p.z = tr.options[i];
        p.z_next = tr.options[i + 1];
        p.a = tr.actions[i];
        p.s_next = tr.states[i + 1];
        p.ctx = tr.ctx;
        p.policy_logprob = tr.logp_high[i] + tr.logp_low[i];
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mhairl
