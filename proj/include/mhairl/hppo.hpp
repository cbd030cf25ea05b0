#pragma once

#include "mhairl/objective.hpp"

namespace mhairl {

/// Level-specific value networks regressed onto Ret_t.
struct Baselines {
    ParamSet params;
    int obs_dim = 0;
    int N = 4;
    int ctx_dim = 0;
    int hidden = 64;
};

Baselines make_baselines(int obs_dim, int N, int ctx_dim, int hidden, RngStream& rng);

struct PPOConfig {
    double clip_eps = 0.2;
    int epochs = 4;
    double lr_policy = 3e-4;
    double lr_baseline = 1e-3;
    int traj_per_episode = 32;  // M
    bool standardize_adv = true;
};

struct AdvantageTable {
    std::vector<std::vector<double>> high;  // per traj, t=1..T
    std::vector<std::vector<double>> low;
};

/// b_high(S_{t-1}, Z_{t-1} | C) and b_low(S_{t-1}, Z_t | C) evaluated no-grad.
double baseline_high(Baselines& b, const Tensor& s, int z_prev,
                     const std::vector<double>& ctx);
double baseline_low(Baselines& b, const Tensor& s, int z,
                    const std::vector<double>& ctx);

AdvantageTable compute_advantages(const std::vector<HierTrajectory>& batch,
                                  const std::vector<ReturnTable>& returns,
                                  Baselines* baselines, bool standardize);

struct PPOLosses {
    double loss_high = 0.0;
    double loss_low = 0.0;
};

/// K epochs of clipped-surrogate ascent for both levels (W_C shared).
PPOLosses ppo_update(HierPolicy& p, const std::vector<HierTrajectory>& batch,
                     const AdvantageTable& adv, const PPOConfig& cfg, Optimizer& opt);

double fit_baselines(Baselines& b, const std::vector<HierTrajectory>& batch,
                     const std::vector<ReturnTable>& returns, int steps, Optimizer& opt);

/// Standalone sparse-reward RL (transfer protocol): alpha_1 = alpha_2 = 0 and
/// the environment reward substituted for R_IL.
struct RlResult {
    std::vector<double> returns;  // per-episode mean return
    int first_success = -1;       // first episode with any positive return
};

RlResult hppo_rl(HierPolicy& p, const TaskSpec& spec, const TaskContext& c,
                 const PPOConfig& cfg, int episodes, std::uint64_t seed);

}  // namespace mhairl
