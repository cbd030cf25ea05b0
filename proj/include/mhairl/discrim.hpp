#pragma once

#include "mhairl/policy.hpp"

namespace mhairl {

enum class DiscMode { AirlRaw, AirlStateOnly, Gail };

struct Discriminator {
    DiscMode mode = DiscMode::AirlStateOnly;
    double gamma = 0.99;
    ParamSet params;
    int obs_dim = 0;
    int act_count = 0;
    int N = 4;
    int ctx_dim = 0;
    int hidden = 64;
};

/// Extended transition: S~_t = (S_t, Z_t), A~_t = (Z_{t+1}, A_t), plus the
/// successor pair for the state-only decomposition.
struct ExtendedPair {
    Tensor s;       // S_t observation
    int z = 0;      // Z_t
    int z_next = 0; // Z_{t+1}
    int a = 0;      // A_t
    Tensor s_next;  // S_{t+1} (state-only mode)
    std::vector<double> ctx;
    double policy_logprob = 0.0;  // log pi_theta(Z_{t+1}|.) + log pi_phi(A_t|.)
};

Discriminator make_discriminator(DiscMode mode, int obs_dim, int act_count, int N,
                                 int ctx_dim, int hidden, double gamma, RngStream& rng);

/// f_theta (AIRL modes): raw network value, or g + gamma*h(next) - h(cur).
int f_value(Tape& t, Discriminator& d, const ExtendedPair& pair);

/// D = logistic(f - policy_logprob) for AIRL modes; classifier probability of
/// the "generated" label for GAIL mode.
double d_prob(Discriminator& d, const ExtendedPair& pair);

/// AIRL reward log D - log(1-D) = f - policy_logprob (stable direct form).
double airl_reward(Discriminator& d, const ExtendedPair& pair);
/// GAIL reward -log D with D clamped to [1e-8, 1-1e-8].
double gail_reward(Discriminator& d, const ExtendedPair& pair);
/// Reward per the configured mode.
double il_reward(Discriminator& d, const ExtendedPair& pair);

/// Cross-entropy discriminator objective; gradients flow to the discriminator
/// parameters only (policy log-probs are constants). Weighted variants allow
/// exact-occupancy training in tests. Performs backward; caller steps.
double disc_loss_backward(Tape& t, Discriminator& d,
                          const std::vector<ExtendedPair>& expert_batch,
                          const std::vector<ExtendedPair>& gen_batch,
                          const std::vector<double>* expert_weights = nullptr,
                          const std::vector<double>* gen_weights = nullptr);

/// Extract extended pairs from a trajectory (policy log-probs from stored
/// per-step values).
std::vector<ExtendedPair> extended_pairs(const HierTrajectory& tr);

}  // namespace mhairl
