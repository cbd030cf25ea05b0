#include "mhairl/env.hpp"

#include <cmath>

namespace mhairl {

namespace {
int clamp_int(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
}

TaskSpec make_spec(const std::string& name) {
    TaskSpec s;
    s.name = name;
    if (name == "tinychain") {
        s.family = EnvFamily::TinyChain;
        s.obs_dim = 4 + 2;  // position one-hot + appended context
        s.action_count = 2;
        s.horizon = 3;
        s.ctx_dim = 2;
        s.ctx_discrete = true;
        s.ctx_cardinality = 2;
    } else if (name == "grid_multigoal" || name == "point_room" || name == "point_maze") {
        s.family = name == "grid_multigoal" ? EnvFamily::GridMultiGoal
                 : name == "point_room"     ? EnvFamily::PointRoom
                                            : EnvFamily::PointMaze;
        s.obs_dim = 121 + 2;  // cell one-hot + appended context
        s.action_count = 5;
        s.horizon = s.family == EnvFamily::GridMultiGoal ? 24 : 60;
        s.ctx_dim = 2;
        s.ctx_discrete = false;
        s.ctx_cardinality = 0;
    } else {
        throw ContractViolation("unknown environment family: " + name);
    }
    return s;
}

int grid_cell(const TaskSpec& spec, int x, int y) { return y * spec.grid_w + x; }

bool is_wall(const TaskSpec& spec, int x, int y) {
    if (spec.family == EnvFamily::PointRoom) {
        // Four rooms separated by a cross of walls with a center hub:
        // open cells on the cross are (5,4),(5,5),(5,6),(4,5),(6,5).
        if (x == 5 && (y <= 3 || y >= 7)) return true;
        if (y == 5 && (x <= 3 || x >= 7)) return true;
        return false;
    }
    if (spec.family == EnvFamily::PointMaze) {
        // Serpentine: horizontal walls at y=3 (gap at x=10) and y=7 (gap at x=0).
        if (y == 3 && x <= 9) return true;
        if (y == 7 && x >= 1) return true;
        return false;
    }
    return false;
}

int goal_cell_for_context(const TaskSpec& spec, const TaskContext& c) {
    int gx = clamp_int(static_cast<int>(std::lround(5.0 + 2.5 * c.vec.at(0))), 0,
                       spec.grid_w - 1);
    int gy = clamp_int(static_cast<int>(std::lround(5.0 + 2.5 * c.vec.at(1))), 0,
                       spec.grid_h - 1);
    return grid_cell(spec, gx, gy);
}

namespace {
const int kRoomGoalsX[4] = {1, 1, 9, 9};
const int kRoomGoalsY[4] = {1, 9, 1, 9};
const int kMazeGoalsX[4] = {0, 10, 0, 10};
const int kMazeGoalsY[4] = {0, 0, 10, 10};
}

TaskContext make_goal_context(const TaskSpec& spec, int goal_index) {
    if (goal_index < 0 || goal_index > 3)
        throw ContractViolation("goal index out of range");
    int gx, gy;
    if (spec.family == EnvFamily::PointRoom) {
        gx = kRoomGoalsX[goal_index];
        gy = kRoomGoalsY[goal_index];
    } else if (spec.family == EnvFamily::PointMaze) {
        gx = kMazeGoalsX[goal_index];
        gy = kMazeGoalsY[goal_index];
    } else {
        throw ContractViolation("fixed goals only exist for the transfer families");
    }
    TaskContext c;
    c.discrete = false;
    c.index = goal_index;
    // Same context-to-goal scale as GridMultiGoal so low levels transfer.
    c.vec = {(gx - 5.0) / 2.5, (gy - 5.0) / 2.5};
    return c;
}

TaskContext sample_task(const TaskSpec& spec, RngStream& rng) {
    TaskContext c;
    switch (spec.family) {
        case EnvFamily::TinyChain: {
            c.discrete = true;
            c.index = rng.uniform() < 0.5 ? 0 : 1;
            c.vec.assign(2, 0.0);
            c.vec[c.index] = 1.0;
            return c;
        }
        case EnvFamily::GridMultiGoal: {
            c.discrete = false;
            c.index = -1;
            for (;;) {
                c.vec = {rng.normal(), rng.normal()};
                if (goal_cell_for_context(spec, c) != grid_cell(spec, 5, 5)) return c;
            }
        }
        case EnvFamily::PointRoom:
        case EnvFamily::PointMaze: {
            int g = static_cast<int>(rng.uniform() * 4.0);
            if (g > 3) g = 3;
            return make_goal_context(spec, g);
        }
    }
    throw ContractViolation("unreachable");
}

EnvState reset(const TaskSpec& spec, const TaskContext& c) {
    if (spec.ctx_discrete != c.discrete ||
        static_cast<int>(c.vec.size()) != spec.ctx_dim)
        throw ContractViolation("context does not match spec");
    EnvState s;
    s.step = 0;
    s.done = false;
    s.ctx = c.vec;
    if (spec.family == EnvFamily::TinyChain) {
        s.cell = 1;
        s.goal = c.index == 0 ? 0 : 3;
    } else {
        s.cell = grid_cell(spec, 5, 5);
        if (spec.family == EnvFamily::GridMultiGoal) {
            s.goal = goal_cell_for_context(spec, c);
        } else {
            int gi = c.index;
            if (gi < 0) throw ContractViolation("transfer context missing goal index");
            if (spec.family == EnvFamily::PointRoom)
                s.goal = grid_cell(spec, kRoomGoalsX[gi], kRoomGoalsY[gi]);
            else
                s.goal = grid_cell(spec, kMazeGoalsX[gi], kMazeGoalsY[gi]);
        }
    }
    return s;
}

StepResult step(const TaskSpec& spec, EnvState& s, int action) {
    if (s.done) throw ContractViolation("step on a finished episode");
    if (action < 0 || action >= spec.action_count)
        throw ContractViolation("action out of range");
    StepResult r;
    if (spec.family == EnvFamily::TinyChain) {
        int next = s.cell + (action == 0 ? -1 : 1);
        if (next >= 0 && next <= 3) s.cell = next;
        r.reward = s.cell == s.goal ? 1.0 : 0.0;
    } else {
        int x = s.cell % spec.grid_w, y = s.cell / spec.grid_w;
        int nx = x, ny = y;
        switch (action) {
            case 0: ny = y + 1; break;  // up
            case 1: ny = y - 1; break;  // down
            case 2: nx = x - 1; break;  // left
            case 3: nx = x + 1; break;  // right
            case 4: break;              // stay
        }
        bool blocked = nx < 0 || nx >= spec.grid_w || ny < 0 || ny >= spec.grid_h ||
                       is_wall(spec, nx, ny);
        if (!blocked) s.cell = grid_cell(spec, nx, ny);
        bool at_goal = s.cell == s.goal;
        if (spec.family == EnvFamily::GridMultiGoal) {
            r.reward = at_goal ? 1.0 : 0.0;
        } else {
            r.reward = at_goal ? 1.0 : 0.0;
            if (at_goal) s.done = true;  // sparse transfer task ends on goal entry
        }
    }
    s.step += 1;
    if (s.step >= spec.horizon) s.done = true;
    r.done = s.done;
    return r;
}

Tensor observe(const TaskSpec& spec, const EnvState& s) {
    if (static_cast<int>(s.ctx.size()) != spec.ctx_dim)
        throw ContractViolation("observe: state is missing its task context");
    Tensor o = Tensor::zeros({spec.obs_dim});
    o.at(s.cell) = 1.0;
    int base = spec.obs_dim - spec.ctx_dim;
    for (int i = 0; i < spec.ctx_dim; ++i) o.at(base + i) = s.ctx[i];
    return o;
}

}  // namespace mhairl
