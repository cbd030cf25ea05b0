#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mhairl/oracle.hpp"

using namespace mhairl;

namespace {
HierPolicy chain_policy(int N, std::uint64_t seed) {
    RngStream rng(seed);
    TaskSpec spec = make_spec("tinychain");
    return make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim, N, 8, 2, 16,
                            rng);
}

void zero_heads(HierPolicy& p) {
    for (const auto& n : {"high.out.W", "high.out.b", "low.out.W", "low.out.b"})
        for (auto& v : p.params.value(n).data) v = 0.0;
}

// A fixed, policy-independent scalar per path (plays the constant reward role).
double path_score(const JointEntry& e) {
    double s = 0.3 * e.c;
    for (size_t i = 0; i < e.z.size(); ++i) s += 0.17 * e.z[i] - 0.05 * e.a[i] * (i + 1);
    return s;
}
}  // namespace

TEST_CASE("uniform policy enumerates 128 equiprobable paths") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 3);
    zero_heads(p);
    JointTable table = enumerate_joint(spec, p);
    CHECK(table.entries.size() == 128);
    double mass = 0.0;
    for (const auto& e : table.entries) {
        CHECK(e.prob == doctest::Approx(1.0 / 128).epsilon(1e-12));
        mass += e.prob;
        CHECK(e.cells[0] == 1);
        for (int i = 0; i < table.T; ++i) {
            int want = e.cells[i] + (e.a[i] == 0 ? -1 : 1);
            want = std::max(0, std::min(3, want));
            CHECK(e.cells[i + 1] == want);
        }
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("context marginals are one half each") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 5);
    JointTable table = enumerate_joint(spec, p);
    double pc[2] = {0, 0};
    for (const auto& e : table.entries) pc[e.c] += e.prob;
    CHECK(pc[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(pc[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("mutual information: full context entropy, and the entropy identity") {
    // States append the task context, so trajectories always identify C and
    // I(X;C) = H(C) = ln 2 even for context-blind behavior.
    TaskSpec spec = make_spec("tinychain");
    HierPolicy u = chain_policy(2, 7);
    zero_heads(u);
    CHECK(exact_mutual_info(enumerate_joint(spec, u)) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // Cross-check on a generic policy: I(X;C) = H(C) - H(C|X) computed from the
    // Bayes tables, an independent route through the same joint.
    HierPolicy p = chain_policy(2, 9);
    for (auto& v : p.params.value("low.out.W").data) v *= 5.0;
    JointTable table = enumerate_joint(spec, p);
    OraclePosteriors post = exact_posteriors(table);
    std::map<std::string, double> px;
    for (const auto& e : table.entries) px[x_key(e, table.T)] += e.prob;
    double hcx = 0.0;
    for (const auto& [k, pk] : px)
        for (double q : post.task.at(k))
            if (q > 0) hcx -= pk * q * std::log(q);
    double mi = exact_mutual_info(table);
    CHECK(mi == doctest::Approx(std::log(2.0) - hcx).epsilon(1e-10));
    CHECK(mi > 1e-3);
}

TEST_CASE("directed information: zero for option-blind behavior, entropy identity otherwise") {
    // Options independent of everything requires both heads blind: the option
    // leaks through the actions it generates otherwise.
    TaskSpec spec = make_spec("tinychain");
    HierPolicy u = chain_policy(2, 11);
    zero_heads(u);
    CHECK(std::fabs(exact_directed_info(enumerate_joint(spec, u))) < 1e-12);

    HierPolicy p = chain_policy(2, 13);
    for (auto& v : p.params.value("low.out.W").data) v *= 5.0;
    JointTable table = enumerate_joint(spec, p);
    // Independent route: sum_t H(Z_t | Z-prefix, C) - H(Z_t | X, Z-prefix, C).
    OraclePosteriors post = exact_posteriors(table);
    double want = 0.0;
    for (int t = 1; t <= table.T; ++t) {
        std::map<std::string, double> pg, pgz, pgx;
        for (const auto& e : table.entries) {
            std::string g = std::to_string(e.c) + "|" + z_prefix_key(e, t);
            pg[g] += e.prob;
            pgz[g + "#" + std::to_string(e.z[t - 1])] += e.prob;
            pgx[option_key(e, t)] += e.prob;
        }
        double h_marg = 0.0;
        for (const auto& [k, p2] : pgz)
            if (p2 > 0) h_marg -= p2 * std::log(p2 / pg[k.substr(0, k.find('#'))]);
        double h_cond = 0.0;
        for (const auto& [k, pk] : pgx)
            for (double q : post.option.at(k))
                if (q > 0) h_cond -= pk * q * std::log(q);
        want += h_marg - h_cond;
    }
    double di = exact_directed_info(table);
    CHECK(di == doctest::Approx(want).epsilon(1e-9));
    CHECK(di > 1e-3);
}

TEST_CASE("Bayes posterior tables normalize and satisfy Bayes' rule") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 17);
    JointTable table = enumerate_joint(spec, p);
    OraclePosteriors post = exact_posteriors(table);
    std::map<std::string, double> px, pxc;
    for (const auto& e : table.entries) {
        px[x_key(e, table.T)] += e.prob;
        pxc[x_key(e, table.T) + "#" + std::to_string(e.c)] += e.prob;
    }
    for (const auto& [k, v] : post.task) {
        CHECK(v[0] + v[1] == doctest::Approx(1.0).epsilon(1e-12));
        for (int c = 0; c < 2; ++c) {
            auto it = pxc.find(k + "#" + std::to_string(c));
            double joint = it == pxc.end() ? 0.0 : it->second;
            CHECK(v[c] * px[k] == doctest::Approx(joint).epsilon(1e-12));
        }
    }
    for (const auto& [k, v] : post.option) {
        double s = 0;
        for (double q : v) {
            CHECK(q >= 0);
            s += q;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("bound evaluators at the Bayes posterior reproduce the exact quantities") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 19);
    for (auto& v : p.params.value("low.out.W").data) v *= 4.0;
    for (auto& v : p.params.value("high.out.W").data) v *= 4.0;
    JointTable table = enumerate_joint(spec, p);
    OraclePosteriors post = exact_posteriors(table);
    double lmi = exact_lmi(table, [&](const JointEntry& e) {
        return std::log(post.task.at(x_key(e, table.T))[e.c]);
    });
    CHECK(lmi == doctest::Approx(exact_mutual_info(table)).epsilon(1e-9));
    // The Bayes option posterior attains the bound up to the residual
    // information the options carry about the strictly earlier trajectory.
    double ldi = exact_ldi(table, [&](const JointEntry& e, int t) {
        return std::log(post.option.at(option_key(e, t))[e.z[t - 1]]);
    });
    double di = exact_directed_info(table);
    CHECK(ldi <= di + 1e-9);
    CHECK(ldi >= 0.99 * di);
}

TEST_CASE("network posteriors never exceed the exact information quantities") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 23);
    JointTable table = enumerate_joint(spec, p);
    RngStream rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        TaskPosterior tp =
            make_task_posterior(spec.obs_dim, spec.action_count, true, 2, 8, rng);
        OptionPosterior op =
            make_option_posterior(spec.obs_dim, spec.action_count, 2, 2, 8, rng);
        double lmi = exact_lmi(table, network_task_logprob(spec, tp));
        CHECK(lmi <= exact_mutual_info(table) + 1e-9);
        double ldi = exact_ldi(table, network_option_logprob(spec, op));
        CHECK(ldi <= exact_directed_info(table) + 1e-9);
    }
}

TEST_CASE("zero reward channels give an exactly zero gradient") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 31);
    GradOracleInputs in;
    in.log_task_post = [](const JointEntry&) { return 0.0; };
    in.log_opt_post = [](const JointEntry&, int) { return 0.0; };
    in.r_il = [](const JointEntry&, int) { return 0.0; };
    exact_gradient(spec, p, in, ObjectiveWeights{0.0, 0.0, 1.0});
    for (const auto& n : p.params.names())
        for (double g : p.params.grad(n).data) CHECK(g == 0.0);

    // A constant reward integrates to a constant objective: zero gradient.
    in.r_il = [](const JointEntry&, int) { return 0.7; };
    exact_gradient(spec, p, in, ObjectiveWeights{0.0, 0.0, 1.0});
    for (const auto& n : p.params.names())
        for (double g : p.params.grad(n).data) CHECK(std::fabs(g) < 1e-10);
}

TEST_CASE("exact gradient matches central finite differences of the objective") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 37);
    ObjectiveWeights w{1.0, 0.01, 1.0};
    GradOracleInputs in;
    in.log_task_post = [](const JointEntry& e) { return -0.5 - 0.2 * e.c; };
    in.log_opt_post = [](const JointEntry& e, int t) {
        return -0.3 - 0.1 * e.z[t - 1] - 0.01 * t;
    };
    in.r_il = [](const JointEntry& e, int i) { return path_score(e) + 0.02 * i; };

    auto objective = [&]() {
        JointTable table = enumerate_joint(spec, p);
        double L = 0.0;
        for (const auto& e : table.entries) {
            double g = w.a_mi * in.log_task_post(e);
            for (int t = 1; t <= table.T; ++t)
                g += w.a_di * (in.log_opt_post(e, t) - e.logp_high[t - 1]);
            for (int i = 0; i < table.T; ++i) g += w.a_il * in.r_il(e, i);
            L += e.prob * g;
        }
        return L;
    };

    exact_gradient(spec, p, in, w);
    std::map<std::string, Tensor> grads;
    for (const auto& n : p.params.names()) grads[n] = p.params.grad(n);

    RngStream pick(41);
    const double h = 1e-6;
    for (const auto& n : p.params.names()) {
        Tensor& v = p.params.value(n);
        for (int rep = 0; rep < 3; ++rep) {
            int i = static_cast<int>(pick.uniform() * v.size());
            i = std::min<int>(i, v.size() - 1);
            double keep = v.data[i];
            v.data[i] = keep + h;
            double up = objective();
            v.data[i] = keep - h;
            double dn = objective();
            v.data[i] = keep;
            double fd = (up - dn) / (2 * h);
            double got = grads[n].data[i];
            double denom = std::max({std::fabs(fd), std::fabs(got), 1e-4});
            CHECK(std::fabs(fd - got) / denom < 1e-5);
        }
    }
}

TEST_CASE("occupancies are a normalized distribution with the forced initial option") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 43);
    zero_heads(p);
    JointTable table = enumerate_joint(spec, p);
    auto occ = occupancies(table);
    double mass = 0.0;
    for (const auto& [k, v] : occ) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    // Independent Monte-Carlo estimate of the same occupancy from rollouts.
    std::map<std::string, double> mc;
    RngStream rng(9);
    const int n = 50000;
    for (int r = 0; r < n; ++r) {
        TaskContext c = sample_task(spec, rng);
        HierTrajectory tr = rollout(p, spec, c, rng, false);
        for (int i = 0; i < tr.T(); ++i)
            mc[pair_key(argmax_index(tr.states[i].data), tr.options[i],
                        tr.options[i + 1], tr.actions[i], c.index)] +=
                1.0 / (n * tr.T());
    }
    for (const auto& [k, v] : occ) {
        double est = mc.count(k) ? mc.at(k) : 0.0;
        double se = std::sqrt(v * (1 - v) / (n * table.T));
        CHECK(std::fabs(est - v) <= 4 * se + 1e-6);
    }
}

TEST_CASE("discriminator optimum on hand-built occupancy maps") {
    std::map<std::string, double> e{{"a", 0.3}, {"b", 0.2}};
    std::map<std::string, double> g{{"a", 0.1}, {"c", 0.4}};
    auto d = exact_disc_optimum(e, g);
    CHECK(d.at("a") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(d.at("b") == 1.0);
    CHECK(d.at("c") == 0.0);
}
