#pragma once

#include "mhairl/env.hpp"
#include "mhairl/nn.hpp"

namespace mhairl {

/// Task-conditioned one-step-option policy. The high level scores options by
/// attending over the option context matrix W_C; the low level is an MLP on
/// [S, C, W_C^T Z], or [S-without-C, W_C^T Z] when low_ctx is false: the
/// context then reaches actions only through the selected option, which turns
/// options into task-agnostic transferable skills.
struct HierPolicy {
    ParamSet params;
    int N = 4;         // option count (dummy initial option is index 0)
    int E = 16;        // option embedding width
    int obs_dim = 0;
    int act_count = 0;
    int ctx_dim = 0;   // 0 strips the task context from all inputs
    int heads = 2;
    int hidden = 64;
    bool low_ctx = true;  // condition the low level on the task context
};

HierPolicy make_hier_policy(int obs_dim, int act_count, int ctx_dim, int N, int E,
                            int heads, int hidden, RngStream& rng,
                            bool low_ctx = true);

/// Context vector as a Tensor honoring the policy's ctx_dim (empty when 0).
Tensor ctx_input(const HierPolicy& p, const std::vector<double>& ctx);

// Both return the logits node; softmax of it is the distribution.
int high_logits(Tape& t, HierPolicy& p, const Tensor& obs, int z_prev, const Tensor& ctx);
int low_logits(Tape& t, HierPolicy& p, const Tensor& obs, int z, const Tensor& ctx);

struct HierTrajectory {
    std::vector<double> ctx;   // context vector (one-hot for discrete tasks)
    int ctx_index = -1;        // discrete context index, -1 otherwise
    std::vector<Tensor> states;   // T+1 raw observations
    std::vector<int> options;     // T+1, options[0] = 0 (dummy)
    std::vector<int> actions;     // T
    std::vector<double> logp_high;  // T: log pi_theta(Z_t | S_{t-1}, Z_{t-1}, C)
    std::vector<double> logp_low;   // T: log pi_phi(A_{t-1} | S_{t-1}, Z_t, C)
    std::vector<double> env_rewards;  // T hidden rewards (never shown to the learner)
    // Filled by the objective/discriminator stages:
    std::vector<double> r_il;  // T, index i = R_IL at transition i (0-based)
    std::vector<double> r_di;  // T, index t-1 = log P_omega - log pi_theta at step t
    double r_mi = 0.0;

    int T() const { return static_cast<int>(actions.size()); }
    double env_return() const {
        double s = 0;
        for (double r : env_rewards) s += r;
        return s;
    }
};

HierTrajectory rollout(HierPolicy& p, const TaskSpec& spec, const TaskContext& c,
                       RngStream& rng, bool argmax = false);

/// Sum over steps of stored-transition log-probs re-evaluated on the tape.
int joint_logprob(Tape& t, HierPolicy& p, const HierTrajectory& traj);

}  // namespace mhairl
