#pragma once

#include "mhairl/policy.hpp"

namespace mhairl {

/// Bidirectional GRU encoder over X_{0:T} with a categorical or diagonal
/// Gaussian head for the task variable.
struct TaskPosterior {
    ParamSet params;
    int obs_dim = 0;
    int act_count = 0;
    int hidden = 64;
    bool discrete = true;
    int c_dim = 2;  // cardinality (discrete) or dimension (continuous)
};

/// Causal GRU over (X_t, Z_{t-1}) with a per-step head over N options.
struct OptionPosterior {
    ParamSet params;
    int obs_dim = 0;
    int act_count = 0;
    int hidden = 64;
    int N = 4;
    int ctx_dim = 0;
};

TaskPosterior make_task_posterior(int obs_dim, int act_count, bool discrete, int c_dim,
                                  int hidden, RngStream& rng);
OptionPosterior make_option_posterior(int obs_dim, int act_count, int N, int ctx_dim,
                                      int hidden, RngStream& rng);

/// log P_psi(c | X_{0:T}). states has length T+1, actions length T.
int task_logprob(Tape& t, TaskPosterior& tp, const std::vector<Tensor>& states,
                 const std::vector<int>& actions, const std::vector<double>& c);

/// Per-step nodes log P_omega(Z_t | X_{0:t}, Z_{0:t-1}, C), t = 1..T.
std::vector<int> option_logprob_seq(Tape& t, OptionPosterior& op,
                                    const std::vector<Tensor>& states,
                                    const std::vector<int>& actions,
                                    const std::vector<int>& options,
                                    const std::vector<double>& ctx);

/// E-step draws (no-grad).
std::vector<double> sample_context(TaskPosterior& tp, const std::vector<Tensor>& states,
                                   const std::vector<int>& actions, RngStream& rng);
std::vector<int> sample_options(OptionPosterior& op, const std::vector<Tensor>& states,
                                const std::vector<int>& actions,
                                const std::vector<double>& ctx, RngStream& rng);

/// Independent likelihood-ascent steps for both posteriors on a batch carrying
/// C and Z. Returns (mean task NLL, mean per-step option NLL) from the last
/// pass. Either posterior pointer may be null (skipped).
std::pair<double, double> fit_posteriors(TaskPosterior* tp, OptionPosterior* op,
                                         const std::vector<HierTrajectory>& batch,
                                         int steps, Optimizer& opt_task,
                                         Optimizer& opt_option);

}  // namespace mhairl
