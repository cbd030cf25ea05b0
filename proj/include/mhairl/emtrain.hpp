#pragma once

#include <memory>
#include <optional>

#include "mhairl/config.hpp"
#include "mhairl/discrim.hpp"
#include "mhairl/expert.hpp"
#include "mhairl/hppo.hpp"

namespace mhairl {

struct MetricsRow {
    int iteration = 0;
    long env_steps = 0;
    double mean_return = 0, disc_loss = 0, l_mi = 0, l_di = 0;
    double loss_high = 0, loss_low = 0, post_task_nll = 0, post_option_nll = 0;
};
std::string metrics_header();
std::string metrics_line(const MetricsRow& r);

struct TrainState {
    TrainConfig cfg;
    TaskSpec spec;
    HierPolicy policy;
    std::optional<TaskPosterior> task_post;   // absent for the H-AIRL variant
    OptionPosterior opt_post;
    Discriminator disc;
    Baselines baselines;
    Optimizer opt_policy{Optimizer::Kind::Adam, 3e-4};
    Optimizer opt_baseline{Optimizer::Kind::Adam, 1e-3};
    Optimizer opt_disc{Optimizer::Kind::Adam, 1e-3};
    Optimizer opt_task{Optimizer::Kind::Adam, 1e-3};
    Optimizer opt_option{Optimizer::Kind::Adam, 1e-3};
    RngStream env_rng{1}, policy_rng{2}, estep_rng{3}, minibatch_rng{4};
    DemoSet demos;
    bool demos_preannotated = false;
    int episode = 0;
    long env_steps = 0;
};

TrainState init_train(const TrainConfig& cfg);

/// Network-input context for a demo/trajectory under the configured variant
/// (empty for H-AIRL).
std::vector<double> effective_ctx(const TrainState& st, const std::vector<double>& ctx);

/// E-step on a set of demonstrations using frozen posterior snapshots: samples
/// C from the task snapshot (unless pre-annotated and override off) and
/// Z_{0:T} causally from the option snapshot. Returns hierarchical
/// trajectories ready for discriminator pair extraction.
std::vector<HierTrajectory> e_step(const TrainState& st, TaskPosterior* snap_task,
                                   OptionPosterior* snap_option,
                                   const std::vector<const Demonstration*>& demos,
                                   RngStream& rng);

/// One EM iteration: rollouts, posterior fitting, expert E-step, discriminator
/// updates, and the policy update, with the configured ratio as inner-step
/// counts.
MetricsRow train_episode(TrainState& st);

/// Argmax-policy evaluation on freshly sampled tasks.
double evaluate(TrainState& st, int n_tasks, std::uint64_t eval_seed);

struct OptionStats {
    double nmi = 0.0;           // option vs expert-direction label
    int majority[4] = {-1, -1, -1, -1};  // majority option per direction
    int distinct_majorities = 0;
};
OptionStats option_direction_stats(TrainState& st, int n_tasks, std::uint64_t seed);

struct RunResult {
    std::vector<MetricsRow> rows;
    double final_eval_return = 0.0;
    OptionStats option_stats;
};

/// Full training run; writes metrics.csv, ckpt_* and report.json into out_dir
/// (plus config.echo when provided).
RunResult run(const TrainConfig& cfg, const std::string& out_dir,
              const std::string& config_echo = "");

/// Load low-level parameters + W_C from a policy checkpoint (transfer init);
/// the high level keeps its fresh initialization.
void load_transfer(HierPolicy& policy, const std::string& ckpt_path);

}  // namespace mhairl
