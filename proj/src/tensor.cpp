#include "mhairl/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mhairl {

int shape_size(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw ContractViolation("tensor dimension must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_size(shape) != static_cast<int>(data.size()))
        throw ContractViolation("tensor data length does not match shape");
    for (double v : data)
        if (!std::isfinite(v)) throw NumericError("non-finite value in tensor");
}

Tensor Tensor::zeros(std::vector<int> shape_) {
    int n = shape_size(shape_);
    return Tensor(std::move(shape_), std::vector<double>(n, 0.0));
}

Tensor& ParamSet::add(const std::string& name, Tensor init) {
    if (map_.count(name)) throw ContractViolation("duplicate parameter name: " + name);
    order_.push_back(name);
    Entry e;
    e.grad = Tensor::zeros(init.shape);
    e.value = std::move(init);
    auto it = map_.emplace(name, std::move(e)).first;
    return it->second.value;
}

ParamSet::Entry& ParamSet::entry(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw ContractViolation("unknown parameter: " + name);
    return it->second;
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw ContractViolation("unknown parameter: " + name);
    return it->second;
}

void ParamSet::zero_grad() {
    for (auto& name : order_) {
        auto& g = map_[name].grad.data;
        std::fill(g.begin(), g.end(), 0.0);
    }
}

namespace {
std::uint64_t double_bits(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof(b));
    return b;
}
double bits_double(std::uint64_t b) {
    double v;
    std::memcpy(&v, &b, sizeof(v));
    return v;
}
}  // namespace

void ParamSet::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f << "mhairl-ckpt 1\n" << order_.size() << "\n";
    for (const auto& name : order_) {
        const Tensor& t = map_.at(name).value;
        f << name << " " << t.shape.size();
        for (int d : t.shape) f << " " << d;
        f << "\n";
        for (size_t i = 0; i < t.data.size(); ++i) {
            char buf[20];
            std::snprintf(buf, sizeof(buf), "%016llx",
                          static_cast<unsigned long long>(double_bits(t.data[i])));
            f << buf << (i + 1 == t.data.size() ? '\n' : ' ');
        }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void ParamSet::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "mhairl-ckpt") throw std::runtime_error("not a checkpoint file: " + path);
    if (version != 1)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    size_t count = 0;
    f >> count;
    for (size_t k = 0; k < count; ++k) {
        std::string name;
        size_t ndim = 0;
        f >> name >> ndim;
        std::vector<int> shape(ndim);
        for (auto& d : shape) f >> d;
        int n = shape_size(shape);
        std::vector<double> data(n);
        for (int i = 0; i < n; ++i) {
            std::string hex;
            f >> hex;
            data[i] = bits_double(std::stoull(hex, nullptr, 16));
        }
        if (!f) throw std::runtime_error("truncated checkpoint: " + path);
        Tensor t(std::move(shape), std::move(data));
        if (map_.count(name)) {
            Entry& e = map_[name];
            if (e.value.shape != t.shape)
                throw std::runtime_error("checkpoint shape mismatch for " + name);
            e.value = std::move(t);
        } else {
            add(name, std::move(t));
        }
    }
}

ParamSet ParamSet::clone() const {
    ParamSet out;
    for (const auto& name : order_) out.add(name, map_.at(name).value);
    return out;
}

// splitmix64; deterministic across platforms.
RngStream::RngStream(std::uint64_t seed) : s_(seed) {}

std::uint64_t RngStream::next_u64() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int RngStream::categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

Tensor init_uniform_fanin(std::vector<int> shape, int fan_in, RngStream& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    int n = shape_size(shape);
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return Tensor(std::move(shape), std::move(data));
}

Tensor init_zeros(std::vector<int> shape) { return Tensor::zeros(std::move(shape)); }

// ---------------------------------------------------------------------------
// Tape

int Tape::push(std::vector<int> shape, std::vector<double> val,
               std::function<void(Tape&)> back) {
    Node n;
    n.shape = std::move(shape);
    n.val = std::move(val);
    if (grad_enabled) {
        n.grad.assign(n.val.size(), 0.0);
        n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    int idx = static_cast<int>(nodes_.size()) - 1;
    check_finite(idx);
    return idx;
}

void Tape::check_finite(int idx) {
    for (double v : nodes_[idx].val)
        if (!std::isfinite(v))
            throw NumericError("non-finite intermediate at node " + std::to_string(idx));
}

int Tape::input(const Tensor& t) {
    return push(t.shape, t.data, {});
}

int Tape::input(std::vector<int> shape, std::vector<double> data) {
    if (shape_size(shape) != static_cast<int>(data.size()))
        throw ContractViolation("input shape/data mismatch");
    return push(std::move(shape), std::move(data), {});
}

int Tape::param(ParamSet& ps, const std::string& name) {
    const Tensor& t = ps.value(name);
    int idx = push(t.shape, t.data, {});
    nodes_[idx].ps = &ps;
    nodes_[idx].pname = name;
    return idx;
}

double Tape::scalar_val(int i) const {
    if (nodes_[i].val.size() != 1) throw ContractViolation("node is not scalar");
    return nodes_[i].val[0];
}

int Tape::add(int a, int b) {
    const auto& na = nodes_[a];
    const auto& nb = nodes_[b];
    if (na.shape != nb.shape) throw ContractViolation("add: shape mismatch");
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] + nb.val[i];
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, b, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                t.nodes_[a].grad[i] += g[i];
                t.nodes_[b].grad[i] += g[i];
            }
        };
    return o;
}

int Tape::sub(int a, int b) {
    const auto& na = nodes_[a];
    const auto& nb = nodes_[b];
    if (na.shape != nb.shape) throw ContractViolation("sub: shape mismatch");
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] - nb.val[i];
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, b, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                t.nodes_[a].grad[i] += g[i];
                t.nodes_[b].grad[i] -= g[i];
            }
        };
    return o;
}

int Tape::mul(int a, int b) {
    const auto& na = nodes_[a];
    const auto& nb = nodes_[b];
    if (na.shape != nb.shape) throw ContractViolation("mul: shape mismatch");
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] * nb.val[i];
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, b, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (size_t i = 0; i < g.size(); ++i) {
                t.nodes_[a].grad[i] += g[i] * t.nodes_[b].val[i];
                t.nodes_[b].grad[i] += g[i] * t.nodes_[a].val[i];
            }
        };
    return o;
}

int Tape::scale(int a, double k) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] * k;
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, k, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad[i] += g[i] * k;
        };
    return o;
}

int Tape::add_const(int a, double k) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] + k;
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad[i] += g[i];
        };
    return o;
}

int Tape::concat(const std::vector<int>& parts) {
    std::vector<double> out;
    for (int p : parts) {
        const auto& np = nodes_[p];
        out.insert(out.end(), np.val.begin(), np.val.end());
    }
    int len = static_cast<int>(out.size());
    int o = push({len}, std::move(out), {});
    if (grad_enabled) {
        auto ps = parts;
        nodes_[o].back = [ps, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            size_t off = 0;
            for (int p : ps) {
                auto& pg = t.nodes_[p].grad;
                for (size_t i = 0; i < pg.size(); ++i) pg[i] += g[off + i];
                off += pg.size();
            }
        };
    }
    return o;
}

int Tape::slice(int a, int start, int len) {
    const auto& na = nodes_[a];
    if (start < 0 || len <= 0 || start + len > static_cast<int>(na.val.size()))
        throw ContractViolation("slice out of range");
    std::vector<double> out(na.val.begin() + start, na.val.begin() + start + len);
    int o = push({len}, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, start, len, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (int i = 0; i < len; ++i) t.nodes_[a].grad[start + i] += g[i];
        };
    return o;
}

int Tape::row(int a, int r) {
    const auto& na = nodes_[a];
    if (na.shape.size() != 2) throw ContractViolation("row: matrix expected");
    int c = na.shape[1];
    if (r < 0 || r >= na.shape[0]) throw ContractViolation("row index out of range");
    std::vector<double> out(na.val.begin() + r * c, na.val.begin() + (r + 1) * c);
    int o = push({c}, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, r, c, o](Tape& t) {
            auto& g = t.nodes_[o].grad;
            for (int i = 0; i < c; ++i) t.nodes_[a].grad[r * c + i] += g[i];
        };
    return o;
}

int Tape::matvec(int w, int x) {
    const auto& nw = nodes_[w];
    const auto& nx = nodes_[x];
    if (nw.shape.size() != 2 || nx.shape.size() != 1 || nw.shape[1] != nx.shape[0])
        throw ContractViolation("matvec: shape mismatch");
    int m = nw.shape[0], n = nw.shape[1];
    std::vector<double> out(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* wr = nw.val.data() + i * n;
        for (int j = 0; j < n; ++j) acc += wr[j] * nx.val[j];
        out[i] = acc;
    }
    int o = push({m}, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [w, x, m, n, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            auto& gw = t.nodes_[w].grad;
            auto& gx = t.nodes_[x].grad;
            const auto& vw = t.nodes_[w].val;
            const auto& vx = t.nodes_[x].val;
            for (int i = 0; i < m; ++i) {
                double gi = g[i];
                if (gi == 0.0) continue;
                double* gwr = gw.data() + i * n;
                const double* vwr = vw.data() + i * n;
                for (int j = 0; j < n; ++j) {
                    gwr[j] += gi * vx[j];
                    gx[j] += gi * vwr[j];
                }
            }
        };
    return o;
}

int Tape::matmul_nt(int a, int b) {
    const auto& na = nodes_[a];
    const auto& nb = nodes_[b];
    if (na.shape.size() != 2 || nb.shape.size() != 2 || na.shape[1] != nb.shape[1])
        throw ContractViolation("matmul_nt: shape mismatch");
    int m = na.shape[0], k = na.shape[1], n = nb.shape[0];
    std::vector<double> out(m * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            const double* ar = na.val.data() + i * k;
            const double* br = nb.val.data() + j * k;
            for (int l = 0; l < k; ++l) acc += ar[l] * br[l];
            out[i * n + j] = acc;
        }
    int o = push({m, n}, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, b, m, n, k, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            auto& ga = t.nodes_[a].grad;
            auto& gb = t.nodes_[b].grad;
            const auto& va = t.nodes_[a].val;
            const auto& vb = t.nodes_[b].val;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    double gij = g[i * n + j];
                    if (gij == 0.0) continue;
                    double* gar = ga.data() + i * k;
                    double* gbr = gb.data() + j * k;
                    const double* var = va.data() + i * k;
                    const double* vbr = vb.data() + j * k;
                    for (int l = 0; l < k; ++l) {
                        gar[l] += gij * vbr[l];
                        gbr[l] += gij * var[l];
                    }
                }
        };
    return o;
}

int Tape::vecmat(int w, int a) {
    const auto& nw = nodes_[w];
    const auto& na = nodes_[a];
    if (na.shape.size() != 2 || nw.shape.size() != 1 || na.shape[0] != nw.shape[0])
        throw ContractViolation("vecmat: shape mismatch");
    int m = na.shape[0], n = na.shape[1];
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < m; ++i) {
        double wi = nw.val[i];
        const double* ar = na.val.data() + i * n;
        for (int j = 0; j < n; ++j) out[j] += wi * ar[j];
    }
    int o = push({n}, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [w, a, m, n, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            auto& gw = t.nodes_[w].grad;
            auto& ga = t.nodes_[a].grad;
            const auto& vw = t.nodes_[w].val;
            const auto& va = t.nodes_[a].val;
            for (int i = 0; i < m; ++i) {
                const double* ar = va.data() + i * n;
                double* gar = ga.data() + i * n;
                double acc = 0.0;
                for (int j = 0; j < n; ++j) {
                    acc += g[j] * ar[j];
                    gar[j] += vw[i] * g[j];
                }
                gw[i] += acc;
            }
        };
    return o;
}

int Tape::dot(int a, int b) {
    const auto& na = nodes_[a];
    const auto& nb = nodes_[b];
    if (na.shape != nb.shape) throw ContractViolation("dot: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < na.val.size(); ++i) acc += na.val[i] * nb.val[i];
    int o = push({1}, {acc}, {});
    if (grad_enabled)
        nodes_[o].back = [a, b, o](Tape& t) {
            double g = t.nodes_[o].grad[0];
            for (size_t i = 0; i < t.nodes_[a].val.size(); ++i) {
                t.nodes_[a].grad[i] += g * t.nodes_[b].val[i];
                t.nodes_[b].grad[i] += g * t.nodes_[a].val[i];
            }
        };
    return o;
}

int Tape::sum(int a) {
    const auto& na = nodes_[a];
    double acc = 0.0;
    for (double v : na.val) acc += v;
    int o = push({1}, {acc}, {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            double g = t.nodes_[o].grad[0];
            for (auto& gi : t.nodes_[a].grad) gi += g;
        };
    return o;
}

int Tape::mean(int a) {
    int n = static_cast<int>(nodes_[a].val.size());
    return scale(sum(a), 1.0 / n);
}

int Tape::tanh_(int a) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(na.val[i]);
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& y = t.nodes_[o].val;
            for (size_t i = 0; i < g.size(); ++i)
                t.nodes_[a].grad[i] += g[i] * (1.0 - y[i] * y[i]);
        };
    return o;
}

int Tape::sigmoid_(int a) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double x = na.val[i];
        out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    }
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& y = t.nodes_[o].val;
            for (size_t i = 0; i < g.size(); ++i)
                t.nodes_[a].grad[i] += g[i] * y[i] * (1.0 - y[i]);
        };
    return o;
}

int Tape::exp_(int a) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(na.val[i]);
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& y = t.nodes_[o].val;
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad[i] += g[i] * y[i];
        };
    return o;
}

int Tape::log_(int a) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(na.val[i]);
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& x = t.nodes_[a].val;
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad[i] += g[i] / x[i];
        };
    return o;
}

int Tape::softplus_(int a) {
    const auto& na = nodes_[a];
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) {
        double x = na.val[i];
        out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    }
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& x = t.nodes_[a].val;
            for (size_t i = 0; i < g.size(); ++i) {
                double s = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                     : std::exp(x[i]) / (1.0 + std::exp(x[i]));
                t.nodes_[a].grad[i] += g[i] * s;
            }
        };
    return o;
}

int Tape::softmax(int a) {
    const auto& na = nodes_[a];
    double mx = na.val[0];
    for (double v : na.val) mx = std::max(mx, v);
    std::vector<double> out(na.val.size());
    double z = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(na.val[i] - mx);
        z += out[i];
    }
    for (auto& v : out) v /= z;
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& y = t.nodes_[o].val;
            double gy = 0.0;
            for (size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
            for (size_t i = 0; i < g.size(); ++i)
                t.nodes_[a].grad[i] += y[i] * (g[i] - gy);
        };
    return o;
}

int Tape::log_softmax(int a) {
    const auto& na = nodes_[a];
    double mx = na.val[0];
    for (double v : na.val) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : na.val) z += std::exp(v - mx);
    double lse = mx + std::log(z);
    std::vector<double> out(na.val.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na.val[i] - lse;
    int o = push(na.shape, std::move(out), {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            const auto& g = t.nodes_[o].grad;
            const auto& y = t.nodes_[o].val;
            double gs = 0.0;
            for (double gi : g) gs += gi;
            for (size_t i = 0; i < g.size(); ++i)
                t.nodes_[a].grad[i] += g[i] - std::exp(y[i]) * gs;
        };
    return o;
}

int Tape::logsumexp(int a) {
    const auto& na = nodes_[a];
    double mx = na.val[0];
    for (double v : na.val) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : na.val) z += std::exp(v - mx);
    double lse = mx + std::log(z);
    int o = push({1}, {lse}, {});
    if (grad_enabled)
        nodes_[o].back = [a, o](Tape& t) {
            double g = t.nodes_[o].grad[0];
            double lse_v = t.nodes_[o].val[0];
            const auto& x = t.nodes_[a].val;
            for (size_t i = 0; i < x.size(); ++i)
                t.nodes_[a].grad[i] += g * std::exp(x[i] - lse_v);
        };
    return o;
}

int Tape::pick(int a, int i) {
    const auto& na = nodes_[a];
    if (i < 0 || i >= static_cast<int>(na.val.size()))
        throw ContractViolation("pick: index out of range");
    int o = push({1}, {na.val[i]}, {});
    if (grad_enabled)
        nodes_[o].back = [a, i, o](Tape& t) {
            t.nodes_[a].grad[i] += t.nodes_[o].grad[0];
        };
    return o;
}

void Tape::backward(int out) {
    if (!grad_enabled) throw ContractViolation("backward on a no-grad tape");
    if (nodes_[out].val.size() != 1)
        throw ContractViolation("backward: output must be scalar");
    // Zero the accumulators of every ParamSet touched by this tape.
    std::vector<ParamSet*> seen;
    for (auto& n : nodes_)
        if (n.ps) {
            bool found = false;
            for (auto* p : seen) found = found || p == n.ps;
            if (!found) {
                n.ps->zero_grad();
                seen.push_back(n.ps);
            }
        }
    nodes_[out].grad[0] = 1.0;
    for (int i = out; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
    for (auto& n : nodes_)
        if (n.ps) {
            auto& acc = n.ps->grad(n.pname).data;
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += n.grad[i];
        }
}

void Optimizer::step(ParamSet& ps, bool maximize) { step(ps, {}, maximize); }

void Optimizer::step(ParamSet& ps, const std::vector<std::string>& prefixes,
                     bool maximize) {
    double sign = maximize ? 1.0 : -1.0;
    for (const auto& name : ps.names()) {
        if (!prefixes.empty()) {
            bool match = false;
            for (const auto& p : prefixes)
                if (name.rfind(p, 0) == 0) match = true;
            if (!match) continue;
        }
        auto& e = ps.entry(name);
        if (kind_ == Kind::SGD) {
            for (size_t i = 0; i < e.value.data.size(); ++i)
                e.value.data[i] += sign * lr_ * e.grad.data[i];
        } else {
            auto it = moments_.find(name);
            if (it == moments_.end()) {
                it = moments_.emplace(name, std::make_pair(Tensor::zeros(e.value.shape),
                                                           Tensor::zeros(e.value.shape)))
                         .first;
                steps_[name] = 0;
            }
            long t = ++steps_[name];
            auto& m = it->second.first.data;
            auto& v = it->second.second.data;
            double bc1 = 1.0 - std::pow(beta1_, t);
            double bc2 = 1.0 - std::pow(beta2_, t);
            for (size_t i = 0; i < e.value.data.size(); ++i) {
                double g = e.grad.data[i];
                m[i] = beta1_ * m[i] + (1 - beta1_) * g;
                v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
                double mh = m[i] / bc1, vh = v[i] / bc2;
                e.value.data[i] += sign * lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }
}

}  // namespace mhairl
