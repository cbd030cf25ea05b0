#include "mhairl/oracle.hpp"

#include <cmath>

namespace mhairl {

namespace {
int chain_next(int cell, int a) {
    int n = cell + (a == 0 ? -1 : 1);
    return n < 0 ? 0 : (n > 3 ? 3 : n);
}

Tensor chain_obs(const TaskSpec& spec, int cell, int c) {
    EnvState s;
    s.cell = cell;
    s.ctx = context_vec(spec, c);
    return observe(spec, s);
}

void check_enumerable(const TaskSpec& spec, int N, long budget) {
    if (spec.family != EnvFamily::TinyChain)
        throw ContractViolation("oracle enumeration supports the tabular family only");
    double count = 2.0;
    for (int t = 0; t < spec.horizon; ++t) count *= N * spec.action_count;
    if (count > static_cast<double>(budget))
        throw ContractViolation("enumeration budget exceeded");
}
}  // namespace

std::vector<double> context_vec(const TaskSpec& spec, int c) {
    std::vector<double> v(spec.ctx_dim, 0.0);
    v[c] = 1.0;
    return v;
}

std::vector<Tensor> entry_states(const TaskSpec& spec, const JointEntry& e) {
    std::vector<Tensor> out;
    for (int cell : e.cells) out.push_back(chain_obs(spec, cell, e.c));
    return out;
}

JointTable enumerate_joint(const TaskSpec& spec, HierPolicy& policy, long budget) {
    int N = policy.N;
    check_enumerable(spec, N, budget);
    int T = spec.horizon;
    int A = spec.action_count;
    // Tabulate both heads at every (c, cell, option) combination.
    // high_lp[c][cell][z_prev][z], low_lp[c][cell][z][a]
    std::vector<std::vector<std::vector<std::vector<double>>>> high_lp(2), low_lp(2);
    for (int c = 0; c < 2; ++c) {
        Tensor ctx = ctx_input(policy, context_vec(spec, c));
        high_lp[c].resize(4);
        low_lp[c].resize(4);
        for (int cell = 0; cell < 4; ++cell) {
            Tensor obs = chain_obs(spec, cell, c);
            for (int zp = 0; zp < N; ++zp) {
                Tape t;
                t.grad_enabled = false;
                int n = t.log_softmax(high_logits(t, policy, obs, zp, ctx));
                high_lp[c][cell].push_back(t.val(n));
            }
            for (int z = 0; z < N; ++z) {
                Tape t;
                t.grad_enabled = false;
                int n = t.log_softmax(low_logits(t, policy, obs, z, ctx));
                low_lp[c][cell].push_back(t.val(n));
            }
        }
    }
    JointTable table;
    table.spec = spec;
    table.N = N;
    table.T = T;
    long combos = 1;
    for (int t = 0; t < T; ++t) combos *= N * A;
    for (int c = 0; c < 2; ++c) {
        for (long idx = 0; idx < combos; ++idx) {
            JointEntry e;
            e.c = c;
            long rem = idx;
            for (int t = 0; t < T; ++t) {
                e.z.push_back(static_cast<int>(rem % N));
                rem /= N;
                e.a.push_back(static_cast<int>(rem % A));
                rem /= A;
            }
            int cell = 1;
            e.cells.push_back(cell);
            double logp = std::log(0.5);
            int z_prev = 0;
            for (int t = 0; t < T; ++t) {
                double lh = high_lp[c][cell][z_prev][e.z[t]];
                double ll = low_lp[c][cell][e.z[t]][e.a[t]];
                e.logp_high.push_back(lh);
                e.logp_low.push_back(ll);
                logp += lh + ll;
                cell = chain_next(cell, e.a[t]);
                e.cells.push_back(cell);
                z_prev = e.z[t];
            }
            e.prob = std::exp(logp);
            if (e.prob > 0.0) table.entries.push_back(std::move(e));
        }
    }
    return table;
}

std::string x_key(const JointEntry& e, int t) {
    // States append the task context, so the state sequence identifies C.
    std::string k(1, static_cast<char>('0' + e.c));
    for (int i = 0; i <= t; ++i) k += static_cast<char>('0' + e.cells[i]);
    k += '|';
    for (int i = 0; i < t; ++i) k += static_cast<char>('0' + e.a[i]);
    return k;
}

std::string z_prefix_key(const JointEntry& e, int t) {
    std::string k;
    for (int i = 0; i + 1 < t; ++i) k += static_cast<char>('0' + e.z[i]);
    return k;
}

std::string option_key(const JointEntry& e, int t) {
    return std::to_string(e.c) + "|" + std::to_string(t) + "|" + x_key(e, t) + "|" +
           z_prefix_key(e, t);
}

double exact_mutual_info(const JointTable& table) {
    std::map<std::string, double> px;
    std::map<std::string, double> pxc;
    double pc[2] = {0, 0};
    for (const auto& e : table.entries) {
        std::string k = x_key(e, table.T);
        px[k] += e.prob;
        pxc[k + "#" + std::to_string(e.c)] += e.prob;
        pc[e.c] += e.prob;
    }
    double mi = 0.0;
    for (const auto& [k, p] : pxc) {
        if (p <= 0) continue;
        std::string xk = k.substr(0, k.size() - 2);
        int c = k.back() - '0';
        mi += p * std::log(p / (px[xk] * pc[c]));
    }
    return mi;
}

double exact_directed_info(const JointTable& table) {
    double total = 0.0;
    for (int t = 1; t <= table.T; ++t) {
        std::map<std::string, double> pg, pgx, pgz, pgxz;
        for (const auto& e : table.entries) {
            std::string g = std::to_string(e.c) + "|" + z_prefix_key(e, t);
            std::string x = x_key(e, t);
            std::string z(1, static_cast<char>('0' + e.z[t - 1]));
            pg[g] += e.prob;
            pgx[g + "#" + x] += e.prob;
            pgz[g + "#" + z] += e.prob;
            pgxz[g + "#" + x + "#" + z] += e.prob;
        }
        for (const auto& [k, pxz] : pgxz) {
            if (pxz <= 0) continue;
            size_t h1 = k.find('#');
            size_t h2 = k.rfind('#');
            std::string g = k.substr(0, h1);
            std::string x = k.substr(h1 + 1, h2 - h1 - 1);
            std::string z = k.substr(h2 + 1);
            double num = pxz * pg[g];
            double den = pgx[g + "#" + x] * pgz[g + "#" + z];
            total += pxz * std::log(num / den);
        }
    }
    return total;
}

OraclePosteriors exact_posteriors(const JointTable& table) {
    OraclePosteriors out;
    std::map<std::string, double> px;
    for (const auto& e : table.entries) {
        std::string k = x_key(e, table.T);
        auto& v = out.task[k];
        if (v.empty()) v.assign(2, 0.0);
        v[e.c] += e.prob;
        px[k] += e.prob;
        for (int t = 1; t <= table.T; ++t) {
            auto& o = out.option[option_key(e, t)];
            if (o.empty()) o.assign(table.N, 0.0);
            o[e.z[t - 1]] += e.prob;
        }
    }
    for (auto& [k, v] : out.task)
        for (auto& p : v) p /= px[k];
    for (auto& [k, v] : out.option) {
        double s = 0;
        for (double p : v) s += p;
        for (auto& p : v) p /= s;
    }
    return out;
}

double exact_lmi(const JointTable& table,
                 const std::function<double(const JointEntry&)>& log_task_post) {
    double s = 0.0;
    for (const auto& e : table.entries) s += e.prob * log_task_post(e);
    return s + std::log(2.0);
}

double exact_ldi(const JointTable& table,
                 const std::function<double(const JointEntry&, int)>& log_opt_post) {
    double s = 0.0;
    for (const auto& e : table.entries)
        for (int t = 1; t <= table.T; ++t)
            s += e.prob * (log_opt_post(e, t) - e.logp_high[t - 1]);
    return s;
}

std::function<double(const JointEntry&)> network_task_logprob(const TaskSpec& spec,
                                                              TaskPosterior& tp) {
    return [&spec, &tp](const JointEntry& e) {
        Tape t;
        t.grad_enabled = false;
        return t.scalar_val(
            task_logprob(t, tp, entry_states(spec, e), e.a, context_vec(spec, e.c)));
    };
}

std::function<double(const JointEntry&, int)> network_option_logprob(
    const TaskSpec& spec, OptionPosterior& op) {
    return [&spec, &op](const JointEntry& e, int t_query) {
        Tape t;
        t.grad_enabled = false;
        std::vector<int> options{0};
        options.insert(options.end(), e.z.begin(), e.z.end());
        std::vector<double> ctx =
            op.ctx_dim > 0 ? context_vec(spec, e.c) : std::vector<double>{};
        auto nodes = option_logprob_seq(t, op, entry_states(spec, e), e.a, options, ctx);
        return t.scalar_val(nodes[t_query - 1]);
    };
}

void exact_gradient(const TaskSpec& spec, HierPolicy& policy,
                    const GradOracleInputs& in, const ObjectiveWeights& w, long budget) {
    check_enumerable(spec, policy.N, budget);
    int N = policy.N, T = spec.horizon, A = spec.action_count;
    Tape t;
    // Tabulate log-softmax nodes per (c, cell, option) once.
    std::vector<std::vector<std::vector<int>>> high_nodes(2), low_nodes(2);
    for (int c = 0; c < 2; ++c) {
        Tensor ctx = ctx_input(policy, context_vec(spec, c));
        high_nodes[c].resize(4);
        low_nodes[c].resize(4);
        for (int cell = 0; cell < 4; ++cell) {
            Tensor obs = chain_obs(spec, cell, c);
            for (int zp = 0; zp < N; ++zp)
                high_nodes[c][cell].push_back(
                    t.log_softmax(high_logits(t, policy, obs, zp, ctx)));
            for (int z = 0; z < N; ++z)
                low_nodes[c][cell].push_back(
                    t.log_softmax(low_logits(t, policy, obs, z, ctx)));
        }
    }
    long combos = 1;
    for (int i = 0; i < T; ++i) combos *= N * A;
    std::vector<int> terms;
    for (int c = 0; c < 2; ++c) {
        for (long idx = 0; idx < combos; ++idx) {
            JointEntry e;
            e.c = c;
            long rem = idx;
            for (int i = 0; i < T; ++i) {
                e.z.push_back(static_cast<int>(rem % N));
                rem /= N;
                e.a.push_back(static_cast<int>(rem % A));
                rem /= A;
            }
            int cell = 1;
            e.cells.push_back(cell);
            std::vector<int> lp_nodes, high_lp_nodes;
            int z_prev = 0;
            for (int i = 0; i < T; ++i) {
                int hn = t.pick(high_nodes[c][cell][z_prev], e.z[i]);
                int ln = t.pick(low_nodes[c][cell][e.z[i]], e.a[i]);
                lp_nodes.push_back(hn);
                lp_nodes.push_back(ln);
                high_lp_nodes.push_back(hn);
                cell = chain_next(cell, e.a[i]);
                e.cells.push_back(cell);
                z_prev = e.z[i];
            }
            // p_e(theta, phi) on the tape.
            int p_e = t.scale(t.exp_(t.sum(t.concat(lp_nodes))), 0.5);
            // Constant part of the integrand (posterior / discriminator terms).
            double g_const = w.a_mi * in.log_task_post(e);
            for (int step = 1; step <= T; ++step)
                g_const += w.a_di * in.log_opt_post(e, step);
            for (int i = 0; i < T; ++i) g_const += w.a_il * in.r_il(e, i);
            // Differentiated entropy channel: -a_di * sum_t log pi_theta.
            int ent = t.scale(t.sum(t.concat(high_lp_nodes)), -w.a_di);
            int integrand = t.add_const(ent, g_const);
            terms.push_back(t.mul(p_e, integrand));
        }
    }
    int L = t.sum(t.concat(terms));
    t.backward(L);
}

std::string pair_key(int cell, int z, int z_next, int a, int c) {
    return std::to_string(cell) + "|" + std::to_string(z) + "|" + std::to_string(z_next) +
           "|" + std::to_string(a) + "|" + std::to_string(c);
}

std::map<std::string, double> occupancies(const JointTable& table) {
    std::map<std::string, double> occ;
    for (const auto& e : table.entries) {
        for (int i = 0; i < table.T; ++i) {
            int z = i == 0 ? 0 : e.z[i - 1];
            occ[pair_key(e.cells[i], z, e.z[i], e.a[i], e.c)] += e.prob / table.T;
        }
    }
    return occ;
}

std::map<std::string, double> exact_disc_optimum(
    const std::map<std::string, double>& occ_expert,
    const std::map<std::string, double>& occ_gen) {
    std::map<std::string, double> out;
    for (const auto& [k, pe] : occ_expert) {
        auto it = occ_gen.find(k);
        double pg = it == occ_gen.end() ? 0.0 : it->second;
        out[k] = pe / (pe + pg);
    }
    for (const auto& [k, pg] : occ_gen) {
        (void)pg;
        if (!out.count(k)) out[k] = 0.0;
    }
    return out;
}

}  // namespace mhairl
