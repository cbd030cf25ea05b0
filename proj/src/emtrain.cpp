#include "mhairl/emtrain.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mhairl {

std::string metrics_header() {
    return "iteration,env_steps,mean_return,disc_loss,l_mi,l_di,loss_high,loss_low,"
           "post_task_nll,post_option_nll";
}

std::string metrics_line(const MetricsRow& r) {
    std::ostringstream os;
    os.precision(17);
    os << r.iteration << "," << r.env_steps << "," << r.mean_return << "," << r.disc_loss
       << "," << r.l_mi << "," << r.l_di << "," << r.loss_high << "," << r.loss_low << ","
       << r.post_task_nll << "," << r.post_option_nll;
    return os.str();
}

TrainState init_train(const TrainConfig& cfg) {
    TrainState st;
    st.cfg = cfg;
    st.spec = make_spec(cfg.env);
    st.demos = read_demos(cfg.demos);
    if (st.demos.demos.empty())
        throw std::runtime_error("demo file is empty: " + cfg.demos);
    bool all_annotated = true;
    for (const auto& d : st.demos.demos)
        all_annotated = all_annotated && !d.context.empty() && !d.options.empty();
    st.demos_preannotated = all_annotated && !cfg.annotate_override;

    int ctx_dim = cfg.variant == Variant::HAirl ? 0 : st.spec.ctx_dim;
    RngStream init_rng(cfg.seed);
    st.policy = make_hier_policy(st.spec.obs_dim, st.spec.action_count, ctx_dim,
                                 cfg.num_options, cfg.embed_dim, cfg.heads, cfg.hidden,
                                 init_rng, cfg.low_ctx);
    if (cfg.variant != Variant::HAirl)
        st.task_post = make_task_posterior(st.spec.obs_dim, st.spec.action_count,
                                           st.spec.ctx_discrete,
                                           st.spec.ctx_discrete ? st.spec.ctx_cardinality
                                                                : st.spec.ctx_dim,
                                           64, init_rng);
    st.opt_post = make_option_posterior(st.spec.obs_dim, st.spec.action_count,
                                        cfg.num_options, ctx_dim, 64, init_rng);
    DiscMode mode = cfg.variant == Variant::MhGail ? DiscMode::Gail
                  : cfg.disc_mode == "raw"         ? DiscMode::AirlRaw
                                                   : DiscMode::AirlStateOnly;
    st.disc = make_discriminator(mode, st.spec.obs_dim, st.spec.action_count,
                                 cfg.num_options, ctx_dim, cfg.hidden, cfg.gamma,
                                 init_rng);
    st.baselines = make_baselines(st.spec.obs_dim, cfg.num_options, ctx_dim, cfg.hidden,
                                  init_rng);
    st.opt_policy = Optimizer(Optimizer::Kind::Adam, cfg.lr_policy);
    st.opt_baseline = Optimizer(Optimizer::Kind::Adam, cfg.lr_baseline);
    st.opt_disc = Optimizer(Optimizer::Kind::Adam, cfg.lr_disc);
    st.opt_task = Optimizer(Optimizer::Kind::Adam, cfg.lr_posterior);
    st.opt_option = Optimizer(Optimizer::Kind::Adam, cfg.lr_posterior);
    st.env_rng = RngStream(cfg.seed + 1);
    st.policy_rng = RngStream(cfg.seed + 2);
    st.estep_rng = RngStream(cfg.seed + 3);
    st.minibatch_rng = RngStream(cfg.seed + 4);
    return st;
}

std::vector<double> effective_ctx(const TrainState& st, const std::vector<double>& ctx) {
    if (st.cfg.variant == Variant::HAirl) return {};
    return ctx;
}

namespace {
void fill_policy_logprobs(HierPolicy& p, HierTrajectory& tr) {
    Tensor ctx = ctx_input(p, tr.ctx);
    tr.logp_high.assign(tr.T(), 0.0);
    tr.logp_low.assign(tr.T(), 0.0);
    Tape t;
    t.grad_enabled = false;
    for (int i = 0; i < tr.T(); ++i) {
        int hl = t.log_softmax(high_logits(t, p, tr.states[i], tr.options[i], ctx));
        tr.logp_high[i] = t.val(hl)[tr.options[i + 1]];
        int ll = t.log_softmax(low_logits(t, p, tr.states[i], tr.options[i + 1], ctx));
        tr.logp_low[i] = t.val(ll)[tr.actions[i]];
    }
}
}  // namespace

std::vector<HierTrajectory> e_step(const TrainState& st, TaskPosterior* snap_task,
                                   OptionPosterior* snap_option,
                                   const std::vector<const Demonstration*>& demos,
                                   RngStream& rng) {
    std::vector<HierTrajectory> out;
    for (const Demonstration* d : demos) {
        HierTrajectory tr;
        for (const auto& row : d->states)
            tr.states.push_back(Tensor({st.spec.obs_dim}, row));
        tr.actions = d->actions;
        bool use_given = st.demos_preannotated && d->annotated();
        if (use_given) {
            tr.ctx = effective_ctx(st, d->context);
            tr.options = d->options;
            for (int z : tr.options)
                if (z < 0 || z >= st.policy.N)
                    throw ContractViolation(
                        "annotated option index exceeds configured num_options");
        } else {
            if (snap_task)
                tr.ctx = sample_context(*snap_task, tr.states, tr.actions, rng);
            std::vector<double> op_ctx =
                snap_option->ctx_dim > 0 ? tr.ctx : std::vector<double>{};
            tr.options = sample_options(*snap_option, tr.states, tr.actions, op_ctx, rng);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

MetricsRow train_episode(TrainState& st) {
    const TrainConfig& cfg = st.cfg;
    MetricsRow row;
    row.iteration = st.episode;

    // Linear learning-rate annealing to 10% over the configured run length;
    // the adversarial loop oscillates without an endgame schedule.
    double frac = cfg.episodes > 0
                      ? std::min(1.0, static_cast<double>(st.episode) / cfg.episodes)
                      : 0.0;
    double anneal = 1.0 - 0.9 * frac;
    st.opt_policy.set_lr(cfg.lr_policy * anneal);
    st.opt_baseline.set_lr(cfg.lr_baseline * anneal);
    st.opt_disc.set_lr(cfg.lr_disc * anneal);

    // Snapshots of the posterior parameters before this episode's M-step.
    std::optional<TaskPosterior> snap_task;
    if (st.task_post) snap_task = *st.task_post;
    OptionPosterior snap_option = st.opt_post;

    // Expert minibatch and its E-step annotations, drawn from the snapshots.
    // Computed up front so the episode's rollouts can reuse the annotated
    // contexts; snapshot semantics make the annotations identical to running
    // the E-step after the posterior update.
    std::vector<const Demonstration*> demo_ptrs;
    int n_demo = std::min<int>(cfg.expert_minibatch, st.demos.demos.size());
    for (int i = 0; i < n_demo; ++i) {
        size_t idx =
            static_cast<size_t>(st.minibatch_rng.uniform() * st.demos.demos.size());
        if (idx >= st.demos.demos.size()) idx = st.demos.demos.size() - 1;
        demo_ptrs.push_back(&st.demos.demos[idx]);
    }
    std::vector<HierTrajectory> expert =
        e_step(st, snap_task ? &*snap_task : nullptr, &snap_option, demo_ptrs,
               st.estep_rng);

    // Step 4: generate M trajectories with the current hierarchical policy on
    // the expert minibatch's annotated contexts. Matching the context
    // marginals of the two discriminator batches keeps the discriminator from
    // separating expert and generator on the context alone (a degenerate
    // optimum with continuous C); without annotated contexts, tasks come from
    // the prior.
    std::vector<HierTrajectory> batch;
    for (int m = 0; m < cfg.traj_per_episode; ++m) {
        TaskContext c;
        static const std::vector<double> kNoCtx;
        const std::vector<double>& ectx =
            expert.empty() ? kNoCtx : expert[m % expert.size()].ctx;
        bool env_ctx_ok = st.spec.family == EnvFamily::TinyChain ||
                          st.spec.family == EnvFamily::GridMultiGoal;
        if (!ectx.empty() && env_ctx_ok) {
            c.discrete = st.spec.ctx_discrete;
            c.vec = ectx;
            c.index = st.spec.ctx_discrete ? argmax_index(ectx) : -1;
        } else {
            c = sample_task(st.spec, st.env_rng);
        }
        batch.push_back(rollout(st.policy, st.spec, c, st.policy_rng, false));
        st.env_steps += batch.back().T();
    }
    double mean_ret = 0;
    for (const auto& tr : batch) mean_ret += tr.env_return();
    row.mean_return = mean_ret / batch.size();

    // Step 5: posterior likelihood ascent on the generated trajectories.
    TaskPosterior* tp = st.task_post ? &*st.task_post : nullptr;
    for (int pass = 0; pass < cfg.ratio_post; ++pass) {
        std::vector<HierTrajectory> mb;
        int k = std::min<int>(cfg.posterior_minibatch, batch.size());
        for (int i = 0; i < k; ++i) {
            size_t idx = static_cast<size_t>(st.minibatch_rng.uniform() * batch.size());
            if (idx >= batch.size()) idx = batch.size() - 1;
            mb.push_back(batch[idx]);
        }
        auto nll = fit_posteriors(tp, &st.opt_post, mb, 1, st.opt_task, st.opt_option);
        row.post_task_nll = nll.first;
        row.post_option_nll = nll.second;
    }

    // Step 7: discriminator cross-entropy update (expert side annotated by the
    // E-step above).
    for (auto& tr : expert) fill_policy_logprobs(st.policy, tr);
    std::vector<ExtendedPair> expert_pairs, gen_pairs;
    for (const auto& tr : expert)
        for (auto& p : extended_pairs(tr)) expert_pairs.push_back(std::move(p));
    for (const auto& tr : batch)
        for (auto& p : extended_pairs(tr)) gen_pairs.push_back(std::move(p));
    for (int pass = 0; pass < cfg.ratio_disc; ++pass) {
        Tape t;
        row.disc_loss = disc_loss_backward(t, st.disc, expert_pairs, gen_pairs);
        st.opt_disc.step(st.disc.params, false);
    }

    // Step 8: HPPO on the assembled returns.
    for (auto& tr : batch) {
        tr.r_il.assign(tr.T(), 0.0);
        auto pairs = extended_pairs(tr);
        for (int i = 0; i < tr.T(); ++i) tr.r_il[i] = il_reward(st.disc, pairs[i]);
    }
    fill_info_rewards(batch, tp, st.policy.N > 1 ? &st.opt_post : nullptr);
    row.l_mi = tp ? l_mi(batch, st.spec.ctx_discrete,
                         st.spec.ctx_discrete ? st.spec.ctx_cardinality : st.spec.ctx_dim)
                  : 0.0;
    row.l_di = l_di(batch);
    ObjectiveWeights w{st.task_post ? cfg.alpha_mi : 0.0, cfg.alpha_di, cfg.alpha_il};
    std::vector<ReturnTable> rets;
    for (const auto& tr : batch) rets.push_back(assemble_returns(tr, w));
    fit_baselines(st.baselines, batch, rets, 3, st.opt_baseline);
    AdvantageTable adv =
        compute_advantages(batch, rets, &st.baselines, cfg.standardize_adv);
    PPOConfig pcfg;
    pcfg.clip_eps = cfg.clip_eps;
    pcfg.epochs = cfg.ratio_policy;
    pcfg.traj_per_episode = cfg.traj_per_episode;
    pcfg.standardize_adv = cfg.standardize_adv;
    PPOLosses pl = ppo_update(st.policy, batch, adv, pcfg, st.opt_policy);
    row.loss_high = pl.loss_high;
    row.loss_low = pl.loss_low;
    row.env_steps = st.env_steps;
    st.episode += 1;
    return row;
}

double evaluate(TrainState& st, int n_tasks, std::uint64_t eval_seed) {
    RngStream er(eval_seed);
    double total = 0;
    for (int i = 0; i < n_tasks; ++i) {
        TaskContext c = sample_task(st.spec, er);
        HierTrajectory tr = rollout(st.policy, st.spec, c, er, true);
        total += tr.env_return();
    }
    return total / n_tasks;
}

OptionStats option_direction_stats(TrainState& st, int n_tasks, std::uint64_t seed) {
    OptionStats out;
    if (st.spec.family != EnvFamily::GridMultiGoal) return out;
    RngStream er(seed);
    // counts[direction][option]
    std::vector<std::vector<double>> counts(4, std::vector<double>(st.policy.N, 0.0));
    for (int i = 0; i < n_tasks; ++i) {
        TaskContext c = sample_task(st.spec, er);
        HierTrajectory tr = rollout(st.policy, st.spec, c, er, true);
        EnvState s = reset(st.spec, c);
        for (int t = 0; t < tr.T(); ++t) {
            int label = script_expert_action(st.spec, s, c);
            if (label < 4) counts[label][tr.options[t + 1]] += 1.0;
            step(st.spec, s, tr.actions[t]);
            if (s.done) break;
        }
    }
    double total = 0;
    for (auto& r : counts)
        for (double v : r) total += v;
    if (total <= 0) return out;
    double hz = 0, hl = 0, mi = 0;
    std::vector<double> pz(st.policy.N, 0.0), plb(4, 0.0);
    for (int l = 0; l < 4; ++l)
        for (int z = 0; z < st.policy.N; ++z) {
            double p = counts[l][z] / total;
            plb[l] += p;
            pz[z] += p;
        }
    for (double p : pz)
        if (p > 0) hz -= p * std::log(p);
    for (double p : plb)
        if (p > 0) hl -= p * std::log(p);
    for (int l = 0; l < 4; ++l)
        for (int z = 0; z < st.policy.N; ++z) {
            double p = counts[l][z] / total;
            if (p > 0) mi += p * std::log(p / (plb[l] * pz[z]));
        }
    out.nmi = (hz > 0 && hl > 0) ? 2.0 * mi / (hz + hl) : 0.0;
    std::vector<int> seen;
    for (int l = 0; l < 4; ++l) {
        if (plb[l] <= 0) continue;
        int best = 0;
        for (int z = 1; z < st.policy.N; ++z)
            if (counts[l][z] > counts[l][best]) best = z;
        out.majority[l] = best;
        bool dup = false;
        for (int m : seen) dup = dup || m == best;
        if (!dup) seen.push_back(best);
    }
    out.distinct_majorities = static_cast<int>(seen.size());
    return out;
}

RunResult run(const TrainConfig& cfg, const std::string& out_dir,
              const std::string& config_echo) {
    std::filesystem::create_directories(out_dir);
    if (!config_echo.empty()) {
        std::ofstream f(out_dir + "/config.echo");
        f << config_echo;
    }
    TrainState st = init_train(cfg);
    std::ofstream csv(out_dir + "/metrics.csv");
    if (!csv) throw std::runtime_error("cannot write metrics: " + out_dir);
    csv << metrics_header() << "\n";
    RunResult res;
    // Periodic held-out validation selects the best policy parameters seen
    // during training; the adversarial endgame oscillates, so the final
    // artifacts use the best-validation snapshot rather than the last episode.
    double best_val = -1.0;
    ParamSet best_policy;
    bool have_best = false;
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        MetricsRow row = train_episode(st);
        csv << metrics_line(row) << "\n";
        res.rows.push_back(row);
        if (cfg.eval_every > 0 && (ep + 1) % cfg.eval_every == 0) {
            double v = evaluate(st, cfg.eval_tasks, cfg.seed + 1000 + ep);
            if (v > best_val) {
                best_val = v;
                best_policy = st.policy.params.clone();
                have_best = true;
            }
        }
    }
    csv.flush();
    if (have_best)
        for (const auto& n : st.policy.params.names())
            st.policy.params.value(n) = best_policy.value(n);
    res.final_eval_return = evaluate(st, cfg.eval_tasks, cfg.seed + 9000);
    res.option_stats = option_direction_stats(st, cfg.eval_tasks, cfg.seed + 9500);
    st.policy.params.save(out_dir + "/ckpt_policy.txt");
    if (st.task_post) st.task_post->params.save(out_dir + "/ckpt_task_posterior.txt");
    st.opt_post.params.save(out_dir + "/ckpt_option_posterior.txt");
    st.disc.params.save(out_dir + "/ckpt_discriminator.txt");
    st.baselines.params.save(out_dir + "/ckpt_baselines.txt");
    nlohmann::json rep;
    rep["final_eval_return"] = res.final_eval_return;
    rep["episodes"] = cfg.episodes;
    rep["option_nmi"] = res.option_stats.nmi;
    rep["option_majorities"] = std::vector<int>(res.option_stats.majority,
                                                res.option_stats.majority + 4);
    rep["distinct_majorities"] = res.option_stats.distinct_majorities;
    std::ofstream repf(out_dir + "/report.json");
    repf << rep.dump(2) << "\n";
    return res;
}

void load_transfer(HierPolicy& policy, const std::string& ckpt_path) {
    ParamSet tmp;
    tmp.load(ckpt_path);
    for (const auto& name : policy.params.names()) {
        if (name.rfind("low.", 0) == 0 || name == "wc") {
            if (!tmp.has(name))
                throw std::runtime_error("checkpoint missing parameter " + name + ": " +
                                         ckpt_path);
            const Tensor& src = tmp.value(name);
            Tensor& dst = policy.params.value(name);
            if (src.shape != dst.shape)
                throw std::runtime_error("checkpoint shape mismatch for " + name);
            dst = src;
        }
    }
}

}  // namespace mhairl
