#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>

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
}

TEST_CASE("single-option high head is a point mass") {
    HierPolicy p = chain_policy(1, 3);
    Tape t;
    Tensor obs = Tensor::zeros({6});
    obs.at(1) = 1.0;
    Tensor ctx({2}, {1.0, 0.0});
    const auto& probs = t.val(t.softmax(high_logits(t, p, obs, 0, ctx)));
    CHECK(probs.size() == 1);
    CHECK(probs[0] == 1.0);
}

TEST_CASE("zero output projection gives uniform options") {
    HierPolicy p = chain_policy(4, 3);
    for (auto& v : p.params.value("high.out.W").data) v = 0.0;
    Tape t;
    Tensor obs = Tensor::zeros({6});
    obs.at(2) = 1.0;
    Tensor ctx({2}, {0.0, 1.0});
    const auto& probs = t.val(t.softmax(high_logits(t, p, obs, 1, ctx)));
    for (double v : probs) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("zero low-level final layer gives uniform actions") {
    RngStream rng(5);
    TaskSpec spec = make_spec("grid_multigoal");
    HierPolicy p = make_hier_policy(spec.obs_dim, spec.action_count, spec.ctx_dim, 4, 16,
                                    2, 64, rng);
    for (auto& v : p.params.value("low.out.W").data) v = 0.0;
    Tape t;
    Tensor obs = Tensor::zeros({123});
    obs.at(60) = 1.0;
    obs.at(121) = 0.3;
    obs.at(122) = -0.4;
    Tensor ctx({2}, {0.3, -0.4});
    int n = low_logits(t, p, obs, 2, ctx);
    const auto& probs = t.val(t.softmax(n));
    for (double v : probs) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(t.scalar_val(logprob_categorical(t, n, 0)) ==
          doctest::Approx(std::log(0.2)).epsilon(1e-12));
}

TEST_CASE("identical embedding rows give identical action distributions") {
    HierPolicy p = chain_policy(3, 9);
    Tensor& wc = p.params.value("wc");
    for (int c = 0; c < wc.cols(); ++c) wc.at2(2, c) = wc.at2(1, c);
    Tape t;
    Tensor obs = Tensor::zeros({6});
    obs.at(0) = 1.0;
    Tensor ctx({2}, {1.0, 0.0});
    const auto& p1 = t.val(t.softmax(low_logits(t, p, obs, 1, ctx)));
    const auto& p2 = t.val(t.softmax(low_logits(t, p, obs, 2, ctx)));
    for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("both heads emit probability vectors on random inputs") {
    HierPolicy p = chain_policy(4, 12);
    RngStream rng(8);
    for (int i = 0; i < 100; ++i) {
        Tape t;
        Tensor obs = Tensor::zeros({6});
        obs.at(static_cast<int>(rng.uniform() * 4)) = 1.0;
        int cidx = rng.uniform() < 0.5 ? 0 : 1;
        Tensor ctx = Tensor::zeros({2});
        ctx.at(cidx) = 1.0;
        int zp = static_cast<int>(rng.uniform() * 4);
        const auto& hp = t.val(t.softmax(high_logits(t, p, obs, std::min(zp, 3), ctx)));
        const auto& lp = t.val(t.softmax(low_logits(t, p, obs, std::min(zp, 3), ctx)));
        double sh = 0, sl = 0;
        for (double v : hp) {
            CHECK(v >= 0);
            sh += v;
        }
        for (double v : lp) {
            CHECK(v >= 0);
            sl += v;
        }
        CHECK(sh == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sl == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("rollout with N=1 uses option 0 everywhere; argmax is deterministic") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(1, 7);
    RngStream rng(5);
    TaskContext c = sample_task(spec, rng);
    HierTrajectory tr = rollout(p, spec, c, rng, false);
    for (int z : tr.options) CHECK(z == 0);

    HierPolicy p4 = chain_policy(4, 7);
    RngStream r1(1), r2(2);
    HierTrajectory a = rollout(p4, spec, c, r1, true);
    HierTrajectory b = rollout(p4, spec, c, r2, true);
    CHECK(a.actions == b.actions);
    CHECK(a.options == b.options);
}

TEST_CASE("joint logprob of uniform policies and consistency with rollout") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 4);
    for (auto& v : p.params.value("high.out.W").data) v = 0.0;
    for (auto& v : p.params.value("high.out.b").data) v = 0.0;
    for (auto& v : p.params.value("low.out.W").data) v = 0.0;
    for (auto& v : p.params.value("low.out.b").data) v = 0.0;
    RngStream rng(6);
    TaskContext c = sample_task(spec, rng);
    HierTrajectory tr = rollout(p, spec, c, rng, false);
    Tape t;
    double jl = t.scalar_val(joint_logprob(t, p, tr));
    CHECK(jl == doctest::Approx(3 * (std::log(0.5) + std::log(0.5))).epsilon(1e-12));

    HierPolicy q = chain_policy(2, 99);
    HierTrajectory tq = rollout(q, spec, c, rng, false);
    double stored = 0;
    for (int i = 0; i < tq.T(); ++i) stored += tq.logp_high[i] + tq.logp_low[i];
    Tape t2;
    CHECK(t2.scalar_val(joint_logprob(t2, q, tq)) ==
          doctest::Approx(stored).epsilon(1e-12));
}

TEST_CASE("exp joint logprob sums to one over all hierarchical paths") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 31);
    JointTable table = enumerate_joint(spec, p);
    double mass = 0;
    for (const auto& e : table.entries) mass += e.prob;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rollout frequencies match enumeration probabilities within 3 SE") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 55);
    JointTable table = enumerate_joint(spec, p);
    // Condition on c=0 and compare trajectory-level (z,a) path frequencies.
    std::map<std::string, double> want;
    for (const auto& e : table.entries) {
        if (e.c != 0) continue;
        std::string k;
        for (int i = 0; i < table.T; ++i) {
            k += static_cast<char>('0' + e.z[i]);
            k += static_cast<char>('0' + e.a[i]);
        }
        want[k] = e.prob * 2.0;  // conditional on the uniform prior
    }
    TaskContext c;
    c.discrete = true;
    c.index = 0;
    c.vec = {1.0, 0.0};
    const int n = 100000;
    RngStream rng(2024);
    std::map<std::string, int> got;
    for (int i = 0; i < n; ++i) {
        HierTrajectory tr = rollout(p, spec, c, rng, false);
        std::string k;
        for (int t = 0; t < tr.T(); ++t) {
            k += static_cast<char>('0' + tr.options[t + 1]);
            k += static_cast<char>('0' + tr.actions[t]);
        }
        got[k] += 1;
    }
    for (const auto& [k, pr] : want) {
        double freq = got.count(k) ? got.at(k) / static_cast<double>(n) : 0.0;
        double se = std::sqrt(pr * (1 - pr) / n);
        CHECK(std::fabs(freq - pr) <= 3 * se + 1e-12);
    }
}

TEST_CASE("level separation: high loss does not touch low MLP weights") {
    TaskSpec spec = make_spec("tinychain");
    HierPolicy p = chain_policy(2, 77);
    RngStream rng(5);
    TaskContext c = sample_task(spec, rng);
    HierTrajectory tr = rollout(p, spec, c, rng, false);
    Tape t;
    Tensor ctx = ctx_input(p, tr.ctx);
    std::vector<int> terms;
    for (int i = 0; i < tr.T(); ++i)
        terms.push_back(logprob_categorical(
            t, high_logits(t, p, tr.states[i], tr.options[i], ctx), tr.options[i + 1]));
    t.backward(t.sum(t.concat(terms)));
    for (const auto& n : p.params.names()) {
        double mx = 0;
        for (double g : p.params.grad(n).data) mx = std::max(mx, std::fabs(g));
        if (n.rfind("low.", 0) == 0) CHECK(mx == 0.0);
        if (n == "wc") CHECK(mx > 0.0);
    }
}
