#pragma once

#include <map>

#include "mhairl/objective.hpp"

namespace mhairl {

/// One weighted hierarchical path (C, Z_{1:T}, A_{0:T-1}) with its implied
/// state sequence and exact probability.
struct JointEntry {
    int c = 0;
    std::vector<int> z;      // Z_1..Z_T
    std::vector<int> a;      // A_0..A_{T-1}
    std::vector<int> cells;  // S_0..S_T
    double prob = 0.0;
    std::vector<double> logp_high;  // per step, under the enumerated policy
    std::vector<double> logp_low;
};

struct JointTable {
    TaskSpec spec;
    int N = 2;
    int T = 0;
    std::vector<JointEntry> entries;
};

/// Exhaustive enumeration of the tabular family (budget-guarded).
JointTable enumerate_joint(const TaskSpec& spec, HierPolicy& policy,
                           long budget = 1000000);

// Keys for grouping: X_{0:t} is (S_0..S_t, A_0..A_{t-1}); Z-prefix is Z_1..Z_{t-1}.
std::string x_key(const JointEntry& e, int t);
std::string z_prefix_key(const JointEntry& e, int t);

double exact_mutual_info(const JointTable& table);
double exact_directed_info(const JointTable& table);

struct OraclePosteriors {
    // P(C | X_{0:T}) keyed by full-trajectory x_key.
    std::map<std::string, std::vector<double>> task;
    // P(Z_t | X_{0:t}, Z_{0:t-1}, C) keyed by "c|t|x_key|z_prefix".
    std::map<std::string, std::vector<double>> option;
};
OraclePosteriors exact_posteriors(const JointTable& table);
std::string option_key(const JointEntry& e, int t);

/// Exact-expectation lower bounds for arbitrary per-entry log-posterior
/// evaluators (network posteriors or the Bayes tables above).
double exact_lmi(const JointTable& table,
                 const std::function<double(const JointEntry&)>& log_task_post);
double exact_ldi(const JointTable& table,
                 const std::function<double(const JointEntry&, int)>& log_opt_post);

/// Adapters evaluating the recurrent posteriors on enumerated paths.
std::function<double(const JointEntry&)> network_task_logprob(const TaskSpec& spec,
                                                              TaskPosterior& tp);
std::function<double(const JointEntry&, int)> network_option_logprob(
    const TaskSpec& spec, OptionPosterior& op);

/// Exact gradient of the hierarchical surrogate w.r.t. the policy parameters, with the
/// posterior/discriminator terms supplied as constants. Results are left in
/// policy.params gradient accumulators.
struct GradOracleInputs {
    std::function<double(const JointEntry&)> log_task_post;       // per entry
    std::function<double(const JointEntry&, int)> log_opt_post;   // t = 1..T
    std::function<double(const JointEntry&, int)> r_il;           // i = 0..T-1
};
void exact_gradient(const TaskSpec& spec, HierPolicy& policy,
                    const GradOracleInputs& in, const ObjectiveWeights& w,
                    long budget = 1000000);

/// Occupancy of extended pairs (S_t, Z_t, Z_{t+1}, A_t, C), normalized over
/// (entries x steps).
std::map<std::string, double> occupancies(const JointTable& table);
std::string pair_key(int cell, int z, int z_next, int a, int c);
/// D* = occ_E / (occ_E + occ_G) on the union of supports.
std::map<std::string, double> exact_disc_optimum(
    const std::map<std::string, double>& occ_expert,
    const std::map<std::string, double>& occ_gen);

/// States of an enumerated path as observation tensors.
std::vector<Tensor> entry_states(const TaskSpec& spec, const JointEntry& e);
std::vector<double> context_vec(const TaskSpec& spec, int c);

}  // namespace mhairl
