#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhairl/emtrain.hpp"
#include "mhairl/oracle.hpp"

using namespace mhairl;

namespace {

int usage() {
    std::cerr
        << "usage: mhairl <command> [--key value ...]\n"
           "commands:\n"
           "  gen-expert   --env E --count N --seed S --out PATH [--annotate true]\n"
           "  train        --config PATH [--out DIR] [--<config-key> value ...]\n"
           "  eval         --run DIR [--tasks N] [--seed S] [--dump PATH --dump-n N]\n"
           "  transfer     --env point_room|point_maze --ckpt PATH --episodes N\n"
           "               [--seeds K] [--out PATH]\n"
           "  oracle-check [--samples N] [--inject-fault true]\n";
    return 2;
}

std::map<std::string, std::string> parse_flags(int argc, char** argv, int start) {
    std::map<std::string, std::string> flags;
    for (int i = start; i < argc; i += 2) {
        std::string k = argv[i];
        if (k.rfind("--", 0) != 0 || i + 1 >= argc)
            throw ConfigError("expected --key value pairs, got: " + k);
        flags[k.substr(2)] = argv[i + 1];
    }
    return flags;
}

std::string take(std::map<std::string, std::string>& flags, const std::string& key,
                 const std::string& fallback = "") {
    auto it = flags.find(key);
    if (it == flags.end()) {
        if (fallback.empty())
            throw ConfigError("missing required flag --" + key);
        return fallback;
    }
    std::string v = it->second;
    flags.erase(it);
    return v;
}

void reject_leftover(const std::map<std::string, std::string>& flags) {
    if (flags.empty()) return;
    std::string keys;
    for (const auto& [k, v] : flags) {
        (void)v;
        keys += (keys.empty() ? "" : ", ") + k;
    }
    throw ConfigError("unknown flags: " + keys);
}

int cmd_gen_expert(std::map<std::string, std::string> flags) {
    std::string env = take(flags, "env");
    int count = std::stoi(take(flags, "count"));
    std::uint64_t seed = std::stoull(take(flags, "seed"));
    std::string out = take(flags, "out");
    bool annotate = take(flags, "annotate", "false") == "true";
    reject_leftover(flags);
    TaskSpec spec = make_spec(env);
    DemoSet set = generate_dataset(spec, count, seed, annotate);
    write_demos(set, out);
    double mean = 0;
    for (const auto& d : set.demos) mean += d.hidden_return;
    mean /= set.demos.size();
    std::cout << "wrote " << set.demos.size() << " demonstrations to " << out
              << " (mean hidden return " << mean << ")\n";
    return 0;
}

int cmd_train(std::map<std::string, std::string> flags) {
    std::string cfg_path = take(flags, "config");
    std::string out_dir = take(flags, "out", "runs/run");
    Config cfg = Config::from_file(cfg_path);
    for (const auto& [k, v] : flags) cfg.set(k, v);  // overrides win
    TrainConfig tc = make_train_config(cfg);
    if (!std::filesystem::exists(tc.demos))
        throw ConfigError("demo file not found: " + tc.demos);
    if (cfg.has("run_name")) out_dir = "runs/" + cfg.get("run_name", "run");
    RunResult res = run(tc, out_dir, cfg.echo());
    std::cout << "final_eval_return " << res.final_eval_return << "\n";
    return 0;
}

HierPolicy policy_from_run(const std::string& run_dir, TaskSpec& spec_out,
                           TrainConfig& tc_out) {
    Config cfg = Config::from_file(run_dir + "/config.echo");
    TrainConfig tc = make_train_config(cfg);
    TaskSpec spec = make_spec(tc.env);
    int ctx_dim = tc.variant == Variant::HAirl ? 0 : spec.ctx_dim;
    RngStream rng(tc.seed);
    HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, ctx_dim,
                                    tc.num_options, tc.embed_dim, tc.heads, tc.hidden,
                                    rng);
    p.params.load(run_dir + "/ckpt_policy.txt");
    spec_out = spec;
    tc_out = tc;
    return p;
}

void dump_trajectories(HierPolicy& p, const TaskSpec& spec, int n,
                       const std::string& path, std::uint64_t seed) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    RngStream rng(seed);
    for (int i = 0; i < n; ++i) {
        TaskContext c = sample_task(spec, rng);
        HierTrajectory tr = rollout(p, spec, c, rng, true);
        nlohmann::json j;
        std::vector<std::vector<double>> states;
        for (const auto& s : tr.states) states.push_back(s.data);
        j["states"] = states;
        j["actions"] = tr.actions;
        j["options"] = tr.options;
        j["context"] = c.vec;
        j["rewards"] = tr.env_rewards;
        f << j.dump() << "\n";
    }
}

int cmd_eval(std::map<std::string, std::string> flags) {
    std::string run_dir = take(flags, "run");
    int tasks = std::stoi(take(flags, "tasks", "16"));
    std::uint64_t seed = std::stoull(take(flags, "seed", "7"));
    std::string dump = take(flags, "dump", "-");
    int dump_n = std::stoi(take(flags, "dump-n", "8"));
    reject_leftover(flags);
    TaskSpec spec;
    TrainConfig tc;
    HierPolicy p = policy_from_run(run_dir, spec, tc);
    RngStream rng(seed);
    nlohmann::json per_task = nlohmann::json::array();
    double total = 0;
    for (int i = 0; i < tasks; ++i) {
        TaskContext c = sample_task(spec, rng);
        HierTrajectory tr = rollout(p, spec, c, rng, true);
        total += tr.env_return();
        nlohmann::json e;
        e["context"] = c.vec;
        e["return"] = tr.env_return();
        e["options"] = tr.options;
        per_task.push_back(e);
    }
    nlohmann::json rep;
    rep["mean_return"] = total / tasks;
    rep["tasks"] = per_task;
    std::cout << rep.dump(2) << "\n";
    if (dump != "-") dump_trajectories(p, spec, dump_n, dump, seed + 1);
    return 0;
}

int cmd_transfer(std::map<std::string, std::string> flags) {
    std::string env = take(flags, "env");
    std::string ckpt = take(flags, "ckpt");
    int episodes = std::stoi(take(flags, "episodes"));
    int seeds = std::stoi(take(flags, "seeds", "5"));
    std::string out = take(flags, "out", "-");
    int M = std::stoi(take(flags, "traj", "8"));
    reject_leftover(flags);
    TaskSpec spec = make_spec(env);
    PPOConfig pcfg;
    pcfg.traj_per_episode = M;
    nlohmann::json rep = nlohmann::json::array();
    for (int goal = 0; goal < 4; ++goal) {
        TaskContext c = make_goal_context(spec, goal);
        for (int s = 0; s < seeds; ++s) {
            std::uint64_t seed = 1000 * (goal + 1) + s;
            for (bool init : {true, false}) {
                RngStream rng(seed);
                HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count,
                                                spec.ctx_dim, 4, 16, 2, 64, rng);
                if (init) load_transfer(p, ckpt);
                RlResult r = hppo_rl(p, spec, c, pcfg, episodes, seed + 7);
                nlohmann::json e;
                e["goal"] = goal;
                e["seed"] = s;
                e["init"] = init ? "transfer" : "scratch";
                e["first_success"] = r.first_success < 0 ? episodes : r.first_success;
                e["returns"] = r.returns;
                rep.push_back(e);
            }
        }
    }
    if (out == "-") {
        std::cout << rep.dump(2) << "\n";
    } else {
        std::ofstream f(out);
        f << rep.dump(2) << "\n";
    }
    return 0;
}

int cmd_oracle_check(std::map<std::string, std::string> flags) {
    int draws = std::stoi(take(flags, "draws", "20"));
    bool inject = take(flags, "inject-fault", "false") == "true";
    reject_leftover(flags);
    TaskSpec spec = make_spec("tinychain");
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok) {
        all_ok = all_ok && ok;
        std::printf("%-42s %s\n", name.c_str(), ok ? "pass" : "FAIL");
    };

    RngStream rng(123);
    {
        HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim, 2,
                                        8, 2, 16, rng);
        JointTable table = enumerate_joint(spec, p);
        double mass = 0;
        for (const auto& e : table.entries) mass += e.prob;
        report("joint table normalization", std::fabs(mass - 1.0) < 1e-10);
    }
    {
        bool mi_ok = true, di_ok = true;
        for (int d = 0; d < draws; ++d) {
            RngStream r2(500 + d);
            HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim,
                                            2, 8, 2, 16, r2);
            TaskPosterior tp = make_task_posterior(spec.obs_dim, spec.action_count, true,
                                                   2, 16, r2);
            OptionPosterior op = make_option_posterior(spec.obs_dim, spec.action_count, 2,
                                                       spec.ctx_dim, 16, r2);
            JointTable table = enumerate_joint(spec, p);
            double mi = exact_mutual_info(table);
            double di = exact_directed_info(table);
            double lmi = exact_lmi(table, network_task_logprob(spec, tp));
            double ldi = exact_ldi(table, network_option_logprob(spec, op));
            if (inject) lmi = mi + 1.0;  // deliberate violation for harness tests
            mi_ok = mi_ok && lmi <= mi + 1e-9;
            di_ok = di_ok && ldi <= di + 1e-9;
        }
        report("L^MI lower bound", mi_ok);
        report("L^DI lower bound", di_ok);
    }
    {
        RngStream r2(901);
        HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim, 2,
                                        8, 2, 16, r2);
        JointTable table = enumerate_joint(spec, p);
        OraclePosteriors post = exact_posteriors(table);
        double mi = exact_mutual_info(table);
        double lmi = exact_lmi(table, [&](const JointEntry& e) {
            return std::log(post.task.at(x_key(e, table.T))[e.c]);
        });
        report("Bayes posterior attains I(X;C)", std::fabs(lmi - mi) < 1e-9);
    }
    {
        // alpha = (0,0,1) with R_IL == 0 must give an exactly zero gradient.
        RngStream r2(902);
        HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim, 2,
                                        8, 2, 16, r2);
        GradOracleInputs in;
        in.log_task_post = [](const JointEntry&) { return 0.0; };
        in.log_opt_post = [](const JointEntry&, int) { return 0.0; };
        in.r_il = [](const JointEntry&, int) { return 0.0; };
        exact_gradient(spec, p, in, ObjectiveWeights{0.0, 0.0, 1.0});
        double mx = 0;
        for (const auto& n : p.params.names())
            for (double g : p.params.grad(n).data) mx = std::max(mx, std::fabs(g));
        report("zero-reward exact gradient is zero", mx < 1e-12);
    }
    return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) return usage();
    std::string cmd = argv[1];
    try {
        auto flags = parse_flags(argc, argv, 2);
        if (cmd == "gen-expert") return cmd_gen_expert(std::move(flags));
        if (cmd == "train") return cmd_train(std::move(flags));
        if (cmd == "eval") return cmd_eval(std::move(flags));
        if (cmd == "transfer") return cmd_transfer(std::move(flags));
        if (cmd == "oracle-check") return cmd_oracle_check(std::move(flags));
        std::cerr << "unknown command: " << cmd << "\n";
        return usage();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
