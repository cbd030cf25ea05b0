#pragma once

#include "mhairl/env.hpp"

namespace mhairl {

struct Demonstration {
    std::vector<std::vector<double>> states;  // T+1 observations
    std::vector<int> actions;                 // T
    std::vector<double> context;              // empty when unannotated
    std::vector<int> options;                 // empty when unannotated; else T+1, Z_0=0
    double hidden_return = 0.0;               // generation metadata, not serialized

    bool annotated() const { return !context.empty() || !options.empty(); }
};

struct DemoSet {
    std::string env_name;
    std::uint64_t seed = 0;
    std::vector<Demonstration> demos;
};

/// Deterministic scripted action (greedy toward the task goal; grids move the
/// horizontal leg first, then vertical, then stay).
int script_expert_action(const TaskSpec& spec, const EnvState& s, const TaskContext& c);

DemoSet generate_dataset(const TaskSpec& spec, int n, std::uint64_t seed, bool annotate);

void write_demos(const DemoSet& set, const std::string& path);
DemoSet read_demos(const std::string& path);

}  // namespace mhairl
