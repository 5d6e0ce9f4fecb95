// Minimal differentiable-computation engine: a reverse-mode tape over the
// fixed op vocabulary the force estimators need (linear, leaky ReLU, GRU
// cell, causal multi-head attention, Huber loss), plus Adam and a central
// finite-difference gradient checker. Everything is f64 and deterministic.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfs/core.hpp"

namespace cfs::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, double fill = 0.0);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor row(std::span<const double> values);  // [1 x n]
    static Tensor vec(std::span<const double> values);  // [n]

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
};

struct Var {
    int id = -1;
};

/// Wengert-list tape: node creation order is a topological order, so
/// backward is a single reverse sweep. A tape lives for one forward/backward
/// pass; parameters persist outside as Tensors and are leased in as leaves.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value);
    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    const Tensor& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

    /// Seeds d(output)=1 and sweeps the list in reverse. `output` must be scalar.
    void backward(Var output);

    // --- internals used by the op implementations ---
    // `pull` receives the node's own Var and accumulates into parents' grads.
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, Var)> pull;
    };
    Var push(Tensor value, std::function<void(Tape&, Var)> pull);
    Tensor& grad_ref(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
};

// Elementwise / structural ops (shapes must match exactly).
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var add_const(Tape& t, Var a, const Tensor& c);
Var scale(Tape& t, Var a, double s);

/// y = x W^T + b with x [B x I], W [O x I], b [O].
Var linear(Tape& t, Var x, Var w, Var b);
Var matmul(Tape& t, Var a, Var b);

/// y = x for x > 0, slope*x otherwise; gradient at exactly 0 is `slope`.
Var leaky_relu(Tape& t, Var x, double slope = 0.01);
Var sigmoid(Tape& t, Var x);
Var tanh_op(Tape& t, Var x);

/// One GRU step, h' = (1-z) * n + z * h_prev, gates stacked r,z,n:
/// w_ih [3H x I], w_hh [3H x H], b_ih [3H], b_hh [3H].
struct GruWeights {
    Var w_ih, w_hh, b_ih, b_hh;
};
Var gru_cell(Tape& t, Var x, Var h_prev, const GruWeights& w);

/// Scaled dot-product attention over already-projected q, k, v [T x D] with
/// a causal mask: row t attends to positions <= t only, and its arithmetic
/// never touches later rows, so prefixes are bitwise stable under suffix
/// edits. D must divide by `heads`.
Var causal_attention(Tape& t, Var q, Var k, Var v, int heads);

/// Mean-reduced Huber: 0.5 r^2 for |r| <= delta, delta(|r| - delta/2) beyond.
Var huber_loss(Tape& t, Var pred, Var target, double delta);

struct AdamState {
    std::vector<Tensor> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double lr = 1e-3;
};

/// Standard bias-corrected Adam, no weight or learning-rate decay.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

/// Builds the graph via `f`, backprops, and compares every parameter
/// coordinate against a central finite difference. Returns the max over
/// coordinates of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
using BuildFn = std::function<Var(Tape&, const std::vector<Var>&)>;
double grad_check(const BuildFn& f, const std::vector<Tensor>& params, double eps = 1e-5);

/// Sinusoidal positional encoding table [len x dim].
Tensor positional_encoding(std::size_t len, std::size_t dim);

// Named-tensor container format (version 1): magic "CFSTEN01", u32 count,
// then per tensor u16 name length + name, u8 ndim, u64 dims, f64 payload.
// All integers and doubles little-endian.
void write_tensors(std::ostream& os,
                   std::span<const std::pair<std::string, Tensor>> tensors);
std::vector<std::pair<std::string, Tensor>> read_tensors(std::istream& is);

}  // namespace cfs::nn
