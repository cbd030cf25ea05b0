#pragma once

#include "mhairl/posterior.hpp"

namespace mhairl {

struct ObjectiveWeights {
    double a_mi = 1.0;   // alpha_1
    double a_di = 0.01;  // alpha_2
    double a_il = 1.0;   // alpha_3
};

struct ReturnTable {
    double r_mi = 0.0;
    std::vector<double> r_di;   // t = 1..T
    std::vector<double> r_il;   // i = 0..T-1
    std::vector<double> ret;    // Ret_t, t = 1..T (index t-1)
};

/// Entropy of the task prior: exact ln|C| for uniform discrete contexts,
/// analytic differential entropy of N(0, I_d) for continuous ones.
double context_entropy(bool discrete, int c_dim);

/// Fills r_mi and r_di on each trajectory from the posteriors (no-grad
/// evaluation; values are treated as constants by HPPO).
void fill_info_rewards(std::vector<HierTrajectory>& batch, TaskPosterior* tp,
                       OptionPosterior* op);

/// Monte-Carlo lower-bound estimates over a batch whose r_mi/r_di are filled.
double l_mi(const std::vector<HierTrajectory>& batch, bool discrete, int c_dim);
double l_di(const std::vector<HierTrajectory>& batch);

ReturnTable assemble_returns(const HierTrajectory& traj, const ObjectiveWeights& w);

}  // namespace mhairl
