#include "mhairl/expert.hpp"

#include <fstream>

#include "json.hpp"

namespace mhairl {

int script_expert_action(const TaskSpec& spec, const EnvState& s, const TaskContext& c) {
    if (s.done) throw ContractViolation("expert queried on a finished episode");
    if (spec.family == EnvFamily::TinyChain) return c.index == 0 ? 0 : 1;
    if (spec.family != EnvFamily::GridMultiGoal)
        throw ContractViolation("no scripted expert for environment " + spec.name);
    int x = s.cell % spec.grid_w, y = s.cell / spec.grid_w;
    int gx = s.goal % spec.grid_w, gy = s.goal / spec.grid_w;
    if (x < gx) return 3;
    if (x > gx) return 2;
    if (y < gy) return 0;
    if (y > gy) return 1;
    return 4;
}

DemoSet generate_dataset(const TaskSpec& spec, int n, std::uint64_t seed, bool annotate) {
    if (n < 1) throw ContractViolation("dataset size must be >= 1");
    DemoSet set;
    set.env_name = spec.name;
    set.seed = seed;
    RngStream rng(seed);
    for (int k = 0; k < n; ++k) {
        TaskContext c = sample_task(spec, rng);
        EnvState s = reset(spec, c);
        Demonstration d;
        d.states.push_back(observe(spec, s).data);
        int prev_dir = 0;
        std::vector<int> options{0};
        while (!s.done) {
            int a = script_expert_action(spec, s, c);
            StepResult r = step(spec, s, a);
            d.actions.push_back(a);
            d.states.push_back(observe(spec, s).data);
            d.hidden_return += r.reward;
            int dir = a < 4 ? a : prev_dir;  // 'stay' keeps the previous label
            if (spec.family == EnvFamily::TinyChain) dir = a;
            options.push_back(dir);
            prev_dir = dir;
        }
        if (annotate) {
            d.context = c.vec;
            d.options = std::move(options);
        }
        set.demos.push_back(std::move(d));
    }
    return set;
}

void write_demos(const DemoSet& set, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& d : set.demos) {
        nlohmann::json j;
        j["version"] = 1;
        j["states"] = d.states;
        j["actions"] = d.actions;
        if (!d.context.empty()) j["context"] = d.context;
        if (!d.options.empty()) j["options"] = d.options;
        f << j.dump() << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

DemoSet read_demos(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open demo file: " + path);
    DemoSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("demo parse error at line " + std::to_string(lineno) +
                                     ": " + e.what());
        }
        auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error("demo error at line " + std::to_string(lineno) +
                                      ": " + msg);
        };
        if (!j.contains("version")) throw fail("missing version");
        if (j["version"].get<int>() != 1)
            throw fail("unsupported version " + j["version"].dump());
        Demonstration d;
        try {
            d.states = j.at("states").get<std::vector<std::vector<double>>>();
            d.actions = j.at("actions").get<std::vector<int>>();
            if (j.contains("context")) d.context = j["context"].get<std::vector<double>>();
            if (j.contains("options")) d.options = j["options"].get<std::vector<int>>();
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
        if (d.states.size() != d.actions.size() + 1)
            throw fail("states/actions length mismatch");
        if (!d.options.empty()) {
            if (d.options.size() != d.states.size())
                throw fail("options length mismatch");
            if (d.options[0] != 0) throw fail("initial option must be the dummy index 0");
        }
        set.demos.push_back(std::move(d));
    }
    return set;
}

}  // namespace mhairl
