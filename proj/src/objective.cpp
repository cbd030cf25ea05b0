#include "mhairl/objective.hpp"

#include <cmath>

namespace mhairl {

double context_entropy(bool discrete, int c_dim) {
    if (discrete) return std::log(static_cast<double>(c_dim));
    return 0.5 * c_dim * std::log(2.0 * M_PI * M_E);
}

void fill_info_rewards(std::vector<HierTrajectory>& batch, TaskPosterior* tp,
                       OptionPosterior* op) {
    for (auto& tr : batch) {
        if (tp) {
            Tape t;
            t.grad_enabled = false;
            tr.r_mi = t.scalar_val(task_logprob(t, *tp, tr.states, tr.actions, tr.ctx));
        } else {
            tr.r_mi = 0.0;
        }
        tr.r_di.assign(tr.T(), 0.0);
        if (op && op->N > 1) {
            Tape t;
            t.grad_enabled = false;
            auto nodes = option_logprob_seq(t, *op, tr.states, tr.actions, tr.options,
                                            tr.ctx);
            for (int i = 0; i < tr.T(); ++i)
                tr.r_di[i] = t.scalar_val(nodes[i]) - tr.logp_high[i];
        }
    }
}

double l_mi(const std::vector<HierTrajectory>& batch, bool discrete, int c_dim) {
    if (batch.empty()) throw ContractViolation("l_mi: empty batch");
    double s = 0.0;
    for (const auto& tr : batch) s += tr.r_mi;
    return s / batch.size() + context_entropy(discrete, c_dim);
}

double l_di(const std::vector<HierTrajectory>& batch) {
    if (batch.empty()) throw ContractViolation("l_di: empty batch");
    double s = 0.0;
    for (const auto& tr : batch)
        for (double v : tr.r_di) s += v;
    return s / batch.size();
}

ReturnTable assemble_returns(const HierTrajectory& traj, const ObjectiveWeights& w) {
    if (w.a_il <= 0.0) throw ContractViolation("alpha_il must be positive");
    int T = traj.T();
    if (static_cast<int>(traj.r_di.size()) != T || static_cast<int>(traj.r_il.size()) != T)
        throw ContractViolation("assemble_returns: reward components missing");
    ReturnTable rt;
    rt.r_mi = traj.r_mi;
    rt.r_di = traj.r_di;
    rt.r_il = traj.r_il;
    rt.ret.assign(T, 0.0);
    double suffix = 0.0;
    for (int t = T; t >= 1; --t) {
        // Ret_t = a1*logPpsi + sum_{i=t}^{T} [ a2*r_di_i + a3*R_IL^{i-1} ]
        suffix += w.a_di * traj.r_di[t - 1] + w.a_il * traj.r_il[t - 1];
        rt.ret[t - 1] = w.a_mi * traj.r_mi + suffix;
    }
    return rt;
}

}  // namespace mhairl
