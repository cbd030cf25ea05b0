#include "mhairl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mhairl {

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}

Config Config::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.set(key, val);
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key: " + key);
    return it->second;
}

double Config::get_num(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: " + it->second);
    }
}

long Config::get_int(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        size_t pos = 0;
        long v = std::stol(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: " + it->second);
}

std::string Config::echo() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
    return os.str();
}

TrainConfig make_train_config(const Config& cfg) {
    static const std::set<std::string> known = {
        "env",          "variant",       "demos",         "episodes",
        "seed",         "num_options",   "alpha_mi",      "alpha_di",
        "alpha_il",     "ratio",         "embed_dim",     "hidden",
        "heads",        "disc_mode",     "gamma",         "clip_eps",
        "lr_policy",    "lr_baseline",   "lr_disc",       "lr_posterior",
        "traj_per_episode", "eval_every", "eval_tasks",   "standardize_adv",
        "expert_minibatch", "posterior_minibatch", "annotate_override", "low_ctx",
        "run_name"};
    std::string unknown;
    for (const auto& [k, v] : cfg.items()) {
        (void)v;
        if (!known.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);

    TrainConfig t;
    t.env = cfg.require("env");
    std::string variant = cfg.require("variant");
    if (variant == "mh-airl") t.variant = Variant::MhAirl;
    else if (variant == "mh-gail") t.variant = Variant::MhGail;
    else if (variant == "h-airl") t.variant = Variant::HAirl;
    else throw ConfigError("unknown variant: " + variant);
    t.demos = cfg.require("demos");
    t.episodes = static_cast<int>(cfg.get_int("episodes", -1));
    if (!cfg.has("episodes")) throw ConfigError("missing required config key: episodes");
    t.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    if (!cfg.has("seed")) throw ConfigError("missing required config key: seed");
    t.num_options = static_cast<int>(cfg.get_int("num_options", 4));
    if (!cfg.has("num_options"))
        throw ConfigError("missing required config key: num_options");
    t.alpha_mi = cfg.get_num("alpha_mi", t.alpha_mi);
    t.alpha_di = cfg.get_num("alpha_di", t.alpha_di);
    t.alpha_il = cfg.get_num("alpha_il", t.alpha_il);
    if (!cfg.has("alpha_mi") || !cfg.has("alpha_di") || !cfg.has("alpha_il"))
        throw ConfigError("missing required config keys: alpha_mi/alpha_di/alpha_il");
    std::string ratio = cfg.get("ratio", "1:3:10");
    {
        int a, b, c;
        char c1, c2;
        std::istringstream is(ratio);
        if (!(is >> a >> c1 >> b >> c2 >> c) || c1 != ':' || c2 != ':' || a < 1 ||
            b < 1 || c < 1)
            throw ConfigError("config key 'ratio': expected D:P:Q with entries >= 1");
        t.ratio_disc = a;
        t.ratio_policy = b;
        t.ratio_post = c;
    }
    t.embed_dim = static_cast<int>(cfg.get_int("embed_dim", t.embed_dim));
    t.hidden = static_cast<int>(cfg.get_int("hidden", t.hidden));
    t.heads = static_cast<int>(cfg.get_int("heads", t.heads));
    t.disc_mode = cfg.get("disc_mode", t.disc_mode);
    if (t.disc_mode != "raw" && t.disc_mode != "state_only")
        throw ConfigError("config key 'disc_mode': expected raw | state_only");
    t.gamma = cfg.get_num("gamma", t.gamma);
    t.clip_eps = cfg.get_num("clip_eps", t.clip_eps);
    t.lr_policy = cfg.get_num("lr_policy", t.lr_policy);
    t.lr_baseline = cfg.get_num("lr_baseline", t.lr_baseline);
    t.lr_disc = cfg.get_num("lr_disc", t.lr_disc);
    t.lr_posterior = cfg.get_num("lr_posterior", t.lr_posterior);
    t.traj_per_episode = static_cast<int>(cfg.get_int("traj_per_episode", t.traj_per_episode));
    t.eval_every = static_cast<int>(cfg.get_int("eval_every", t.eval_every));
    t.eval_tasks = static_cast<int>(cfg.get_int("eval_tasks", t.eval_tasks));
    t.standardize_adv = cfg.get_bool("standardize_adv", t.standardize_adv);
    t.expert_minibatch = static_cast<int>(cfg.get_int("expert_minibatch", t.expert_minibatch));
    t.posterior_minibatch =
        static_cast<int>(cfg.get_int("posterior_minibatch", t.posterior_minibatch));
    t.annotate_override = cfg.get_bool("annotate_override", t.annotate_override);
    t.low_ctx = cfg.get_bool("low_ctx", t.low_ctx);
    if (t.episodes < 1) throw ConfigError("episodes must be >= 1");
    if (t.num_options < 1) throw ConfigError("num_options must be >= 1");
    return t;
}

}  // namespace mhairl
