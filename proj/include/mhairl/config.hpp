#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhairl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// `key = value` lines, `#` comments, UTF-8. Later assignments win.
class Config {
public:
    static Config from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    std::string require(const std::string& key) const;
    double get_num(const std::string& key, double fallback) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string echo() const;  // canonical key-sorted rendering
    const std::map<std::string, std::string>& items() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

enum class Variant { MhAirl, MhGail, HAirl };

struct TrainConfig {
    std::string env = "grid_multigoal";
    Variant variant = Variant::MhAirl;
    std::string demos;
    int episodes = 200;
    std::uint64_t seed = 0;
    int num_options = 4;
    double alpha_mi = 1.0, alpha_di = 0.01, alpha_il = 1.0;
    int ratio_disc = 1, ratio_policy = 3, ratio_post = 10;
    int embed_dim = 16, hidden = 64, heads = 2;
    std::string disc_mode = "state_only";  // raw | state_only (gail set by variant)
    double gamma = 0.99, clip_eps = 0.2;
    double lr_policy = 3e-4, lr_baseline = 1e-3, lr_disc = 1e-3, lr_posterior = 1e-3;
    int traj_per_episode = 32;
    int eval_every = 10, eval_tasks = 16;
    bool standardize_adv = true;
    int expert_minibatch = 16;   // demos re-annotated/used per episode
    int posterior_minibatch = 8;
    bool annotate_override = false;
    bool low_ctx = true;  // condition the low level on the task context
};

/// Validates keys (unknown keys are an error listing them) and builds the
/// typed config.
TrainConfig make_train_config(const Config& cfg);

}  // namespace mhairl
