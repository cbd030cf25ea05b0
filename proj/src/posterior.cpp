#include "mhairl/posterior.hpp"

#include <cmath>

namespace mhairl {

namespace {
// X_t = (A_{t-1} one-hot, S_t); the t=0 action slot is all-zero (dummy A_{-1}).
Tensor make_x(int obs_dim, int act_count, const Tensor& state, int prev_action) {
    Tensor s = obs_features(state);
    Tensor x = Tensor::zeros({act_count + s.size()});
    if (prev_action >= 0) x.at(prev_action) = 1.0;
    for (int i = 0; i < s.size(); ++i) x.at(act_count + i) = s.at(i);
    return x;
}

Tensor onehot(int dim, int idx) {
    Tensor o = Tensor::zeros({dim});
    if (idx >= 0) o.at(idx) = 1.0;
    return o;
}
}  // namespace

TaskPosterior make_task_posterior(int obs_dim, int act_count, bool discrete, int c_dim,
                                  int hidden, RngStream& rng) {
    TaskPosterior tp;
    tp.obs_dim = obs_dim;
    tp.act_count = act_count;
    tp.hidden = hidden;
    tp.discrete = discrete;
    tp.c_dim = c_dim;
    int x_dim = obs_feat_dim(obs_dim) + act_count;
    add_gru(tp.params, "fwd", x_dim, hidden, rng);
    add_gru(tp.params, "bwd", x_dim, hidden, rng);
    int out = discrete ? c_dim : 2 * c_dim;  // logits, or mean + log-std
    add_linear(tp.params, "head", out, 2 * hidden, rng);
    return tp;
}

OptionPosterior make_option_posterior(int obs_dim, int act_count, int N, int ctx_dim,
                                      int hidden, RngStream& rng) {
    OptionPosterior op;
    op.obs_dim = obs_dim;
    op.act_count = act_count;
    op.hidden = hidden;
    op.N = N;
    op.ctx_dim = ctx_dim;
    int x_dim = obs_feat_dim(obs_dim) + act_count;
    add_gru(op.params, "gru", x_dim + N, hidden, rng);
    add_mlp(op.params, "head", x_dim + N + ctx_dim + hidden, {hidden}, N, rng);
    return op;
}

namespace {
// Shared encoder: returns the head output node for the full sequence.
int task_head(Tape& t, TaskPosterior& tp, const std::vector<Tensor>& states,
              const std::vector<int>& actions) {
    if (states.size() != actions.size() + 1)
        throw ContractViolation("task posterior: states/actions length mismatch");
    int T = static_cast<int>(actions.size());
    std::vector<int> xs;
    for (int i = 0; i <= T; ++i)
        xs.push_back(t.input(make_x(tp.obs_dim, tp.act_count, states[i],
                                    i == 0 ? -1 : actions[i - 1])));
    int hf = t.input(Tensor::zeros({tp.hidden}));
    for (int i = 0; i <= T; ++i) hf = gru_step(t, tp.params, "fwd", xs[i], hf);
    int hb = t.input(Tensor::zeros({tp.hidden}));
    for (int i = T; i >= 0; --i) hb = gru_step(t, tp.params, "bwd", xs[i], hb);
    return linear(t, tp.params, "head", t.concat({hf, hb}));
}
}  // namespace

int task_logprob(Tape& t, TaskPosterior& tp, const std::vector<Tensor>& states,
                 const std::vector<int>& actions, const std::vector<double>& c) {
    int head = task_head(t, tp, states, actions);
    if (tp.discrete) {
        int idx = -1;
        for (size_t i = 0; i < c.size(); ++i)
            if (c[i] == 1.0) idx = static_cast<int>(i);
        if (idx < 0 || static_cast<int>(c.size()) != tp.c_dim)
            throw ContractViolation("discrete context must be a one-hot of size c_dim");
        return logprob_categorical(t, head, idx);
    }
    if (static_cast<int>(c.size()) != tp.c_dim)
        throw ContractViolation("context dimension mismatch");
    int mean = t.slice(head, 0, tp.c_dim);
    int log_std = t.slice(head, tp.c_dim, tp.c_dim);
    int x = t.input(Tensor({tp.c_dim}, c));
    return logprob_gaussian(t, mean, log_std, x);
}

namespace {
struct OptionStep {
    int logits;  // head logits node for step t
};

// Walks the causal recurrence; calls `visit(t_index, logits_node)` for t=1..T.
// `options` may be shorter than needed when sampling: the callback returns the
// Z_t to condition the next steps on.
template <typename F>
void option_scan(Tape& t, OptionPosterior& op, const std::vector<Tensor>& states,
                 const std::vector<int>& actions, const std::vector<double>& ctx,
                 F&& choose) {
    if (states.size() != actions.size() + 1)
        throw ContractViolation("option posterior: states/actions length mismatch");
    int T = static_cast<int>(actions.size());
    int ctx_node = -1;
    if (op.ctx_dim > 0) {
        if (static_cast<int>(ctx.size()) != op.ctx_dim)
            throw ContractViolation("option posterior: context dimension mismatch");
        ctx_node = t.input(Tensor({op.ctx_dim}, ctx));
    }
    auto x_node = [&](int i, int prev_a) {
        return t.input(make_x(op.obs_dim, op.act_count, states[i], prev_a));
    };
    // h_0 = GRU((X_0, Z_{-1}=0), h_{-1}=0)
    int x0 = x_node(0, -1);
    int zm1 = t.input(onehot(op.N, -1));
    int h = gru_step(t, op.params, "gru", t.concat({x0, zm1}), t.input(Tensor::zeros({op.hidden})));
    int z_prev = 0;  // Z_0 dummy
    for (int step = 1; step <= T; ++step) {
        int xt = x_node(step, actions[step - 1]);
        int zprev_node = t.input(onehot(op.N, z_prev));
        std::vector<int> parts{xt, zprev_node};
        if (ctx_node >= 0) parts.push_back(ctx_node);
        parts.push_back(h);
        int logits = mlp_forward(t, op.params, "head", t.concat(parts), 1);
        int z_t = choose(step, logits);
        if (step < T) {
            int zin = t.input(onehot(op.N, z_prev));
            h = gru_step(t, op.params, "gru", t.concat({xt, zin}), h);
        }
        z_prev = z_t;
    }
}
}  // namespace

std::vector<int> option_logprob_seq(Tape& t, OptionPosterior& op,
                                    const std::vector<Tensor>& states,
                                    const std::vector<int>& actions,
                                    const std::vector<int>& options,
                                    const std::vector<double>& ctx) {
    if (options.size() != states.size())
        throw ContractViolation("option posterior: options length mismatch");
    std::vector<int> out;
    option_scan(t, op, states, actions, ctx, [&](int step, int logits) {
        out.push_back(logprob_categorical(t, logits, options[step]));
        return options[step];
    });
    return out;
}

std::vector<double> sample_context(TaskPosterior& tp, const std::vector<Tensor>& states,
                                   const std::vector<int>& actions, RngStream& rng) {
    Tape t;
    t.grad_enabled = false;
    int head = task_head(t, tp, states, actions);
    const auto& v = t.val(head);
    if (tp.discrete) {
        int idx = rng.categorical(softmax_values(v));
        std::vector<double> c(tp.c_dim, 0.0);
        c[idx] = 1.0;
        return c;
    }
    std::vector<double> c(tp.c_dim);
    for (int i = 0; i < tp.c_dim; ++i)
        c[i] = v[i] + std::exp(v[tp.c_dim + i]) * rng.normal();
    return c;
}

std::vector<int> sample_options(OptionPosterior& op, const std::vector<Tensor>& states,
                                const std::vector<int>& actions,
                                const std::vector<double>& ctx, RngStream& rng) {
    Tape t;
    t.grad_enabled = false;
    std::vector<int> z{0};
    option_scan(t, op, states, actions, ctx, [&](int, int logits) {
        int s = rng.categorical(softmax_values(t.val(logits)));
        z.push_back(s);
        return s;
    });
    return z;
}

std::pair<double, double> fit_posteriors(TaskPosterior* tp, OptionPosterior* op,
                                         const std::vector<HierTrajectory>& batch,
                                         int steps, Optimizer& opt_task,
                                         Optimizer& opt_option) {
    if (batch.empty()) throw ContractViolation("fit_posteriors: empty batch");
    double task_nll = 0.0, opt_nll = 0.0;
    for (int s = 0; s < std::max(steps, 1); ++s) {
        bool last = s == std::max(steps, 1) - 1;
        if (tp) {
            Tape t;
            std::vector<int> terms;
            for (const auto& tr : batch)
                terms.push_back(task_logprob(t, *tp, tr.states, tr.actions, tr.ctx));
            int loglik = t.mean(t.concat(terms));
            if (steps > 0) {
                t.backward(loglik);
                opt_task.step(tp->params, true);
            }
            if (last) task_nll = -t.scalar_val(loglik);
        }
        if (op) {
            Tape t;
            std::vector<int> terms;
            for (const auto& tr : batch) {
                auto per_step =
                    option_logprob_seq(t, *op, tr.states, tr.actions, tr.options, tr.ctx);
                for (int n : per_step) terms.push_back(n);
            }
            int loglik = t.mean(t.concat(terms));
            if (steps > 0) {
                t.backward(loglik);
                opt_option.step(op->params, true);
            }
            if (last) opt_nll = -t.scalar_val(loglik);
        }
        if (steps == 0) break;
    }
    return {task_nll, opt_nll};
}

}  // namespace mhairl
