#pragma once

#include "mhairl/tensor.hpp"

namespace mhairl {

enum class EnvFamily { TinyChain, GridMultiGoal, PointRoom, PointMaze };

/// Task variable C. Discrete tasks carry a one-hot `vec` and its `index`;
/// continuous tasks carry the raw vector with index = -1.
struct TaskContext {
    bool discrete = true;
    int index = -1;
    std::vector<double> vec;
};

struct TaskSpec {
    EnvFamily family;
    std::string name;
    int obs_dim;        // one-hot agent state size plus appended context
    int action_count;
    int horizon;
    int ctx_dim;        // dimension of the context vector fed to networks
    bool ctx_discrete;
    int ctx_cardinality;  // discrete families only
    int grid_w = 11, grid_h = 11;
};

struct EnvState {
    int cell = 0;       // chain position or y*grid_w+x
    int goal = -1;      // resolved goal cell (grid families); chain end for tinychain
    int step = 0;
    bool done = false;
    std::vector<double> ctx;  // task context, appended to every observation
};

TaskSpec make_spec(const std::string& name);

TaskContext sample_task(const TaskSpec& spec, RngStream& rng);
/// Fixed evaluation goal for the transfer families (goal_index in 0..3).
TaskContext make_goal_context(const TaskSpec& spec, int goal_index);

EnvState reset(const TaskSpec& spec, const TaskContext& c);

struct StepResult {
    double reward = 0.0;
    bool done = false;
};
StepResult step(const TaskSpec& spec, EnvState& s, int action);

/// Observation: one-hot of the agent cell with the task context vector
/// appended. The goal itself is never encoded.
Tensor observe(const TaskSpec& spec, const EnvState& s);

/// Grid helpers.
int grid_cell(const TaskSpec& spec, int x, int y);
bool is_wall(const TaskSpec& spec, int x, int y);
int goal_cell_for_context(const TaskSpec& spec, const TaskContext& c);

}  // namespace mhairl
