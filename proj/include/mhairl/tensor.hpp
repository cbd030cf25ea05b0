#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mhairl {

struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major array of 64-bit floats. All values must be finite.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);
    static Tensor zeros(std::vector<int> shape_);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    int size() const { return static_cast<int>(data.size()); }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.at(1); }
    double& at(int i) { return data[i]; }
    double at(int i) const { return data[i]; }
    double& at2(int r, int c) { return data[r * cols() + c]; }
    double at2(int r, int c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

int shape_size(const std::vector<int>& shape);

/// Named parameter tensors with stable iteration order and per-tensor
/// gradient accumulators.
class ParamSet {
public:
    struct Entry {
        Tensor value;
        Tensor grad;
    };

    Tensor& add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return map_.count(name) != 0; }
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;
    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }
    Tensor& grad(const std::string& name) { return entry(name).grad; }

    const std::vector<std::string>& names() const { return order_; }
    void zero_grad();

    /// Versioned text checkpoint; doubles stored as raw bit patterns so the
    /// round trip is bit-exact.
    void save(const std::string& path) const;
    void load(const std::string& path);

    ParamSet clone() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Entry> map_;
};

class RngStream {
public:
    explicit RngStream(std::uint64_t seed);
    double uniform();               // [0,1)
    double uniform(double lo, double hi);
    double normal();                // standard normal
    int categorical(const std::vector<double>& probs);
    std::uint64_t next_u64();

private:
    std::uint64_t s_;
};

// Parameter initializers.
Tensor init_uniform_fanin(std::vector<int> shape, int fan_in, RngStream& rng);
Tensor init_zeros(std::vector<int> shape);

/// Computation graph built per forward pass. Nodes are recorded in creation
/// order, which is a topological order; backward walks it in reverse.
class Tape {
public:
    struct Node {
        std::vector<int> shape;
        std::vector<double> val;
        std::vector<double> grad;
        std::function<void(Tape&)> back;   // empty for leaves / no-grad mode
        ParamSet* ps = nullptr;            // set for parameter leaves
        std::string pname;
    };

    bool grad_enabled = true;

    int input(const Tensor& t);
    int input(std::vector<int> shape, std::vector<double> data);
    int constant(double v) { return input(Tensor::scalar(v)); }
    int param(ParamSet& ps, const std::string& name);

    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);               // elementwise
    int scale(int a, double k);
    int add_const(int a, double k);
    int neg(int a) { return scale(a, -1.0); }
    int concat(const std::vector<int>& parts);
    int slice(int a, int start, int len);
    int row(int a, int r);               // row r of a matrix
    int matvec(int w, int x);            // [m,n]x[n] -> [m]
    int matmul_nt(int a, int b);         // [m,k]x[n,k] -> [m,n], A*B^T
    int vecmat(int w, int a);            // [m]x[m,n] -> [n], A^T w
    int dot(int a, int b);
    int sum(int a);
    int mean(int a);
    int tanh_(int a);
    int sigmoid_(int a);
    int exp_(int a);
    int log_(int a);
    int softplus_(int a);
    int square(int a) { return mul(a, a); }
    int softmax(int a);                  // max-subtracted
    int log_softmax(int a);
    int logsumexp(int a);
    int pick(int a, int i);              // scalar element i

    const Node& node(int i) const { return nodes_[i]; }
    const std::vector<double>& val(int i) const { return nodes_[i].val; }
    double scalar_val(int i) const;
    int size() const { return static_cast<int>(nodes_.size()); }

    /// Reverse pass from a scalar output. Zeroes the gradient accumulators of
    /// every ParamSet touched by the tape, then accumulates dOut/dParam.
    void backward(int out);

private:
    std::vector<Node> nodes_;
    int push(std::vector<int> shape, std::vector<double> val,
             std::function<void(Tape&)> back);
    void check_finite(int idx);
    friend class TapeOps;
};

/// One SGD/Adam step over all parameters in the set (grad is ascent
/// direction when maximize=true).
class Optimizer {
public:
    enum class Kind { SGD, Adam };
    Optimizer(Kind kind, double lr) : kind_(kind), lr_(lr) {}
    void step(ParamSet& ps, bool maximize = false);
    /// Restrict updates to parameters whose name starts with one of the
    /// given prefixes (empty list = all).
    void step(ParamSet& ps, const std::vector<std::string>& prefixes, bool maximize = false);
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

private:
    Kind kind_;
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::unordered_map<std::string, std::pair<Tensor, Tensor>> moments_;
    std::unordered_map<std::string, long> steps_;
};

}  // namespace mhairl
