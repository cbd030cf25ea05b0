#include "mhairl/hppo.hpp"

#include <cmath>

namespace mhairl {

Baselines make_baselines(int obs_dim, int N, int ctx_dim, int hidden, RngStream& rng) {
    Baselines b;
    b.obs_dim = obs_dim;
    b.N = N;
    b.ctx_dim = ctx_dim;
    b.hidden = hidden;
    int in = obs_feat_dim(obs_dim) + N + ctx_dim;
    add_mlp(b.params, "bh", in, {hidden, hidden}, 1, rng);
    add_mlp(b.params, "bl", in, {hidden, hidden}, 1, rng);
    return b;
}

namespace {
int baseline_node(Tape& t, Baselines& b, const std::string& prefix, const Tensor& s,
                  int z, const std::vector<double>& ctx) {
    Tensor zoh = Tensor::zeros({b.N});
    zoh.at(z) = 1.0;
    std::vector<int> parts{t.input(obs_features(s)), t.input(zoh)};
    if (b.ctx_dim > 0) parts.push_back(t.input(Tensor({b.ctx_dim}, ctx)));
    return mlp_forward(t, b.params, prefix, t.concat(parts), 2);
}
}  // namespace

double baseline_high(Baselines& b, const Tensor& s, int z_prev,
                     const std::vector<double>& ctx) {
    Tape t;
    t.grad_enabled = false;
    return t.scalar_val(baseline_node(t, b, "bh", s, z_prev, ctx));
}

double baseline_low(Baselines& b, const Tensor& s, int z,
                    const std::vector<double>& ctx) {
    Tape t;
    t.grad_enabled = false;
    return t.scalar_val(baseline_node(t, b, "bl", s, z, ctx));
}

namespace {
void standardize(std::vector<std::vector<double>>& rows) {
    double sum = 0.0, sq = 0.0;
    size_t n = 0;
    for (auto& r : rows)
        for (double v : r) {
            sum += v;
            sq += v * v;
            ++n;
        }
    if (n < 2) return;
    double mean = sum / n;
    double var = sq / n - mean * mean;
    double sd = std::sqrt(std::max(var, 0.0));
    if (sd < 1e-12) sd = 1.0;
    for (auto& r : rows)
        for (double& v : r) v = (v - mean) / sd;
}
}  // namespace

AdvantageTable compute_advantages(const std::vector<HierTrajectory>& batch,
                                  const std::vector<ReturnTable>& returns,
                                  Baselines* baselines, bool standardize_adv) {
    if (batch.size() != returns.size())
        throw ContractViolation("compute_advantages: batch/returns size mismatch");
    AdvantageTable adv;
    for (size_t k = 0; k < batch.size(); ++k) {
        const auto& tr = batch[k];
        const auto& ret = returns[k].ret;
        std::vector<double> ah(tr.T()), al(tr.T());
        for (int t = 1; t <= tr.T(); ++t) {
            double bh = 0.0, bl = 0.0;
            if (baselines) {
                bh = baseline_high(*baselines, tr.states[t - 1], tr.options[t - 1], tr.ctx);
                bl = baseline_low(*baselines, tr.states[t - 1], tr.options[t], tr.ctx);
            }
            ah[t - 1] = ret[t - 1] - bh;
            al[t - 1] = ret[t - 1] - bl;
        }
        adv.high.push_back(std::move(ah));
        adv.low.push_back(std::move(al));
    }
    if (standardize_adv) {
        standardize(adv.high);
        standardize(adv.low);
    }
    return adv;
}

PPOLosses ppo_update(HierPolicy& p, const std::vector<HierTrajectory>& batch,
                     const AdvantageTable& adv, const PPOConfig& cfg, Optimizer& opt) {
    PPOLosses out;
    int total_steps = 0;
    for (const auto& tr : batch) total_steps += tr.T();
    if (total_steps == 0) throw ContractViolation("ppo_update: empty batch");
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape t;
        std::vector<int> high_terms, low_terms;
        for (size_t k = 0; k < batch.size(); ++k) {
            const auto& tr = batch[k];
            Tensor ctx = ctx_input(p, tr.ctx);
            for (int i = 0; i < tr.T(); ++i) {
                // High level: ratio on pi_theta(Z_t | S_{t-1}, Z_{t-1}, C).
                {
                    int lp = logprob_categorical(
                        t, high_logits(t, p, tr.states[i], tr.options[i], ctx),
                        tr.options[i + 1]);
                    double a = adv.high[k][i];
                    double r = std::exp(t.scalar_val(lp) - tr.logp_high[i]);
                    bool clipped = (a >= 0 && r > 1 + cfg.clip_eps) ||
                                   (a < 0 && r < 1 - cfg.clip_eps);
                    if (clipped) {
                        double rc = r > 1 ? 1 + cfg.clip_eps : 1 - cfg.clip_eps;
                        high_terms.push_back(t.constant(rc * a));
                    } else {
                        int ratio = t.exp_(t.add_const(lp, -tr.logp_high[i]));
                        high_terms.push_back(t.scale(ratio, a));
                    }
                }
                // Low level: ratio on pi_phi(A_{t-1} | S_{t-1}, Z_t, C).
                {
                    int lp = logprob_categorical(
                        t, low_logits(t, p, tr.states[i], tr.options[i + 1], ctx),
                        tr.actions[i]);
                    double a = adv.low[k][i];
                    double r = std::exp(t.scalar_val(lp) - tr.logp_low[i]);
                    bool clipped = (a >= 0 && r > 1 + cfg.clip_eps) ||
                                   (a < 0 && r < 1 - cfg.clip_eps);
                    if (clipped) {
                        double rc = r > 1 ? 1 + cfg.clip_eps : 1 - cfg.clip_eps;
                        low_terms.push_back(t.constant(rc * a));
                    } else {
                        int ratio = t.exp_(t.add_const(lp, -tr.logp_low[i]));
                        low_terms.push_back(t.scale(ratio, a));
                    }
                }
            }
        }
        int surr_high = t.scale(t.sum(t.concat(high_terms)), 1.0 / total_steps);
        int surr_low = t.scale(t.sum(t.concat(low_terms)), 1.0 / total_steps);
        int surr = t.add(surr_high, surr_low);
        t.backward(surr);
        opt.step(p.params, true);
        out.loss_high = -t.scalar_val(surr_high);
        out.loss_low = -t.scalar_val(surr_low);
    }
    return out;
}

double fit_baselines(Baselines& b, const std::vector<HierTrajectory>& batch,
                     const std::vector<ReturnTable>& returns, int steps, Optimizer& opt) {
    if (batch.empty()) throw ContractViolation("fit_baselines: empty batch");
    double loss_val = 0.0;
    for (int s = 0; s < std::max(steps, 1); ++s) {
        Tape t;
        std::vector<int> terms;
        for (size_t k = 0; k < batch.size(); ++k) {
            const auto& tr = batch[k];
            for (int i = 1; i <= tr.T(); ++i) {
                double target = returns[k].ret[i - 1];
                int bh = baseline_node(t, b, "bh", tr.states[i - 1], tr.options[i - 1],
                                       tr.ctx);
                int bl = baseline_node(t, b, "bl", tr.states[i - 1], tr.options[i],
                                       tr.ctx);
                terms.push_back(t.square(t.add_const(bh, -target)));
                terms.push_back(t.square(t.add_const(bl, -target)));
            }
        }
        int loss = t.mean(t.concat(terms));
        loss_val = t.scalar_val(loss);
        if (steps == 0) break;
        t.backward(loss);
        opt.step(b.params, false);
    }
    return loss_val;
}

RlResult hppo_rl(HierPolicy& p, const TaskSpec& spec, const TaskContext& c,
                 const PPOConfig& cfg, int episodes, std::uint64_t seed) {
    RngStream rng(seed);
    RngStream base_rng(seed + 17);
    Baselines base = make_baselines(p.obs_dim, p.N, p.ctx_dim, 64, base_rng);
    Optimizer opt_pol(Optimizer::Kind::Adam, cfg.lr_policy);
    Optimizer opt_base(Optimizer::Kind::Adam, cfg.lr_baseline);
    ObjectiveWeights w{0.0, 0.0, 1.0};
    RlResult res;
    for (int ep = 0; ep < episodes; ++ep) {
        std::vector<HierTrajectory> batch;
        double mean_ret = 0.0;
        for (int m = 0; m < cfg.traj_per_episode; ++m) {
            HierTrajectory tr = rollout(p, spec, c, rng, false);
            tr.r_il = tr.env_rewards;  // environment reward in place of R_IL
            tr.r_di.assign(tr.T(), 0.0);
            tr.r_mi = 0.0;
            mean_ret += tr.env_return();
            batch.push_back(std::move(tr));
        }
        mean_ret /= cfg.traj_per_episode;
        res.returns.push_back(mean_ret);
        if (res.first_success < 0 && mean_ret > 0) res.first_success = ep;
        std::vector<ReturnTable> rets;
        for (const auto& tr : batch) rets.push_back(assemble_returns(tr, w));
        fit_baselines(base, batch, rets, 3, opt_base);
        AdvantageTable adv =
            compute_advantages(batch, rets, &base, cfg.standardize_adv);
        ppo_update(p, batch, adv, cfg, opt_pol);
    }
    return res;
}

}  // namespace mhairl
