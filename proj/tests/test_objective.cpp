#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mhairl/objective.hpp"

using namespace mhairl;

namespace {
HierTrajectory stub_traj(int T) {
    HierTrajectory tr;
    tr.ctx = {1.0, 0.0};
    tr.ctx_index = 0;
    Tensor s = Tensor::zeros({6});
    s.at(1) = 1.0;
    s.at(4) = 1.0;  // appended context one-hot
    for (int i = 0; i <= T; ++i) tr.states.push_back(s);
    tr.options.assign(T + 1, 0);
    for (int i = 0; i < T; ++i) {
        tr.actions.push_back(0);
        tr.logp_high.push_back(std::log(0.5));
        tr.logp_low.push_back(std::log(0.5));
        tr.env_rewards.push_back(0.0);
    }
    return tr;
}
}  // namespace

TEST_CASE("context entropy closed forms") {
    CHECK(context_entropy(true, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(context_entropy(true, 4) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(context_entropy(false, 1) ==
          doctest::Approx(0.5 * std::log(2 * M_PI * M_E)).epsilon(1e-15));
    CHECK(context_entropy(false, 2) ==
          doctest::Approx(std::log(2 * M_PI * M_E)).epsilon(1e-15));
}

TEST_CASE("mutual-information bound is zero when the posterior equals the prior") {
    // r_mi = log 1/2 for every trajectory and a binary uniform prior.
    std::vector<HierTrajectory> batch(4, stub_traj(3));
    for (auto& tr : batch) tr.r_mi = std::log(0.5);
    CHECK(l_mi(batch, true, 2) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("perfect binary posterior recovers ln 2") {
    std::vector<HierTrajectory> batch(8, stub_traj(3));
    for (auto& tr : batch) tr.r_mi = 0.0;  // log 1
    CHECK(l_mi(batch, true, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("directed-information bound reduces over batch and steps") {
    std::vector<HierTrajectory> batch(2, stub_traj(3));
    batch[0].r_di = {0.1, 0.2, 0.3};
    batch[1].r_di = {-0.1, 0.0, 0.1};
    CHECK(l_di(batch) == doctest::Approx((0.6 + 0.0) / 2).epsilon(1e-12));
    CHECK_THROWS_AS(l_di({}), ContractViolation);
    CHECK_THROWS_AS(l_mi({}, true, 2), ContractViolation);
}

TEST_CASE("info rewards from posteriors; dummy-free when absent") {
    RngStream rng(3);
    TaskSpec spec = make_spec("tinychain");
    TaskPosterior tp = make_task_posterior(spec.obs_dim, spec.action_count, true, 2, 16, rng);
    OptionPosterior op = make_option_posterior(spec.obs_dim, spec.action_count, 2, 2, 16, rng);
    std::vector<HierTrajectory> batch{stub_traj(3)};
    fill_info_rewards(batch, &tp, &op);
    Tape t;
    double want_mi = t.scalar_val(
        task_logprob(t, tp, batch[0].states, batch[0].actions, batch[0].ctx));
    CHECK(batch[0].r_mi == want_mi);
    Tape t2;
    auto nodes = option_logprob_seq(t2, op, batch[0].states, batch[0].actions,
                                    batch[0].options, batch[0].ctx);
    for (int i = 0; i < 3; ++i)
        CHECK(batch[0].r_di[i] ==
              doctest::Approx(t2.scalar_val(nodes[i]) - batch[0].logp_high[i]).epsilon(1e-15));

    fill_info_rewards(batch, nullptr, nullptr);
    CHECK(batch[0].r_mi == 0.0);
    for (double v : batch[0].r_di) CHECK(v == 0.0);
}

TEST_CASE("single-option posterior contributes no directed-information reward") {
    RngStream rng(5);
    TaskSpec spec = make_spec("tinychain");
    OptionPosterior op = make_option_posterior(spec.obs_dim, spec.action_count, 1, 2, 16, rng);
    std::vector<HierTrajectory> batch{stub_traj(3)};
    fill_info_rewards(batch, nullptr, &op);
    for (double v : batch[0].r_di) CHECK(v == 0.0);
}

TEST_CASE("return assembly matches the reference summation") {
    HierTrajectory tr = stub_traj(3);
    tr.r_mi = 0.5;
    tr.r_di = {0.1, 0.2, 0.3};
    tr.r_il = {1.0, 2.0, 3.0};
    ObjectiveWeights w{2.0, 0.5, 1.0};
    ReturnTable rt = assemble_returns(tr, w);
    // Reference: independent forward summation per t.
    for (int t = 1; t <= 3; ++t) {
        double want = w.a_mi * tr.r_mi;
        for (int i = t; i <= 3; ++i)
            want += w.a_di * tr.r_di[i - 1] + w.a_il * tr.r_il[i - 1];
        CHECK(rt.ret[t - 1] == doctest::Approx(want).epsilon(1e-15));
    }
    CHECK(rt.ret[0] == doctest::Approx(1.0 + 0.3 + 6.0).epsilon(1e-12));
    CHECK(rt.ret[2] == doctest::Approx(1.0 + 0.15 + 3.0).epsilon(1e-12));
}

TEST_CASE("telescoping: adjacent returns differ by one step's rewards") {
    HierTrajectory tr = stub_traj(4);
    tr.r_mi = -0.7;
    tr.r_di = {0.4, -0.2, 0.05, 0.3};
    tr.r_il = {0.9, -1.1, 0.6, 0.2};
    ObjectiveWeights w{1.0, 0.01, 1.0};
    ReturnTable rt = assemble_returns(tr, w);
    for (int t = 1; t < 4; ++t)
        CHECK(rt.ret[t - 1] - rt.ret[t] ==
              doctest::Approx(w.a_di * tr.r_di[t - 1] + w.a_il * tr.r_il[t - 1])
                  .epsilon(1e-12));
}

TEST_CASE("return assembly validates its inputs") {
    HierTrajectory tr = stub_traj(3);
    tr.r_il = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(assemble_returns(tr, ObjectiveWeights{}), ContractViolation);  // r_di missing
    tr.r_di = {0.0, 0.0, 0.0};
    CHECK_NOTHROW(assemble_returns(tr, ObjectiveWeights{}));
    ObjectiveWeights bad{1.0, 0.01, 0.0};
    CHECK_THROWS_AS(assemble_returns(tr, bad), ContractViolation);
}
