#pragma once

// Reverse-mode differentiation over dense tensors. A Graph is an append-only
// tape; parents always precede children, so backward is a single reverse sweep.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "acgan/tensor.hpp"

namespace acgan {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; only valid while its graph lives.
struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Lower clamp applied to every log input.
inline constexpr double kLogEpsilon = 1e-12;

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Leaf that receives gradients.
    Var param(Tensor value);
    /// Leaf without a gradient path.
    Var constant(Tensor value);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }
    const std::vector<std::size_t>& parents(Var v) const { return nodes_.at(v.id).parents; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
    /// Gradients accumulate additively; calling backward twice is an error.
    void backward(Var root);

    /// Gradient of the last backward root w.r.t. v; zeros when v was unreachable.
    Tensor grad(Var v) const;

    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    // Building blocks for ops; see autodiff.cpp.
    Var record(std::string op, Tensor value, std::vector<std::size_t> parents, BackwardFn fn);
    const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }
    Tensor& grad_buffer(std::size_t id);
    bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

private:
    struct Node {
        std::string op;
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

Var matmul(Var a, Var b);
/// a + b where b has a's shape, is a single row broadcast over a's rows, or is a scalar.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var sigmoid(Var a);
/// Natural log of the input clamped to [kLogEpsilon, 1]; never produces NaN.
Var log(Var a);
Var abs(Var a);
Var mean(Var a);
Var sum(Var a);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var clamp(Var a, double lo, double hi);
Var min_elem(Var a, Var b);
Var min_elem(Var a, double bound);
Var scalar_mul(Var a, double s);
Var scalar_add(Var a, double s);
/// Row-wise softmax of a 2-D tensor.
Var softmax_rows(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scalar_mul(a, s); }

}  // namespace acgan
