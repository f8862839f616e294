#include "acgan/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace acgan {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::param(Tensor value) {
    nodes_.push_back(Node{"param", std::move(value), {}, {}, {}, true});
    return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
    nodes_.push_back(Node{"const", std::move(value), {}, {}, {}, false});
    return Var{this, nodes_.size() - 1};
}

Var Graph::record(std::string op, Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
    bool rg = false;
    for (auto p : parents) rg = rg || nodes_[p].requires_grad;
    Node node{std::move(op), std::move(value), {}, std::move(parents), {}, rg};
    if (rg) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Tensor& Graph::grad_buffer(std::size_t id) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
}

void Graph::backward(Var root) {
    if (root.graph != this) throw Error("backward: root belongs to another graph");
    const auto& rv = nodes_.at(root.id).value;
    if (rv.size() != 1) {
        throw ShapeError("backward: root must be scalar, shape is " + shape_str(rv.shape()));
    }
    if (backward_done_) throw Error("backward: already called on this graph");
    backward_done_ = true;
    grad_buffer(root.id)[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
        n.backward(*this, i);
    }
}

Tensor Graph::grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.size() == 0) return Tensor(n.value.shape(), 0.0);
    return n.grad;
}

namespace {

Graph& graph_of(Var a, Var b) {
    if (a.graph != b.graph || a.graph == nullptr) throw Error("operands belong to different graphs");
    return *a.graph;
}

const Tensor& val(const Graph& g, std::size_t id) { return g.value(Var{const_cast<Graph*>(&g), id}); }

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::kSame;
    if (b.size() == 1) return Broadcast::kScalar;
    if (a.ndim() == 2 && b.size() == a.cols() && (b.ndim() == 1 || b.rows() == 1)) return Broadcast::kRow;
    mismatch(op, a, b);
}

inline std::size_t bidx(Broadcast k, std::size_t i, std::size_t cols) {
    switch (k) {
        case Broadcast::kSame: return i;
        case Broadcast::kRow: return i % cols;
        case Broadcast::kScalar: return 0;
    }
    return 0;
}

// Elementwise unary op with derivative expressed from (input, output).
template <typename F, typename D>
Var unary(const char* op, Var a, F f, D df) {
    Graph& g = *a.graph;
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    const std::size_t ia = a.id;
    return g.record(op, std::move(out), {ia}, [ia, df](Graph& gr, std::size_t self) {
        const Tensor& x = val(gr, ia);
        const Tensor& y = val(gr, self);
        const Tensor& up = gr.upstream(self);
        Tensor& ga = gr.grad_buffer(ia);
        for (std::size_t i = 0; i < x.size(); ++i) ga[i] += up[i] * df(x[i], y[i]);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    Graph& g = graph_of(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.ndim() != 2 || B.ndim() != 2 || A.dim(1) != B.dim(0)) mismatch("matmul", A, B);
    const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    Tensor C({m, n}, 0.0);
    const double* pa = A.values().data();
    const double* pb = B.values().data();
    double* pc = C.values().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            const double* brow = pb + p * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    const std::size_t ia = a.id, ib = b.id;
    return g.record("matmul", std::move(C), {ia, ib}, [ia, ib, m, k, n](Graph& gr, std::size_t self) {
        const double* up = gr.upstream(self).values().data();
        if (gr.needs_grad(ia)) {
            // dA = dC * B^T
            const double* pb = val(gr, ib).values().data();
            double* ga = gr.grad_buffer(ia).values().data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += up[i * n + j] * pb[p * n + j];
                    ga[i * k + p] += s;
                }
            }
        }
        if (gr.needs_grad(ib)) {
            // dB = A^T * dC
            const double* pa = val(gr, ia).values().data();
            double* gb = gr.grad_buffer(ib).values().data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = pa[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * up[i * n + j];
                }
            }
        }
    });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA dfa, DB dfb) {
    Graph& g = graph_of(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const Broadcast kind = broadcast_kind(op, A, B);
    const std::size_t cols = A.cols();
    Tensor out(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = f(A[i], B[bidx(kind, i, cols)]);
    const std::size_t ia = a.id, ib = b.id;
    return g.record(op, std::move(out), {ia, ib},
                    [ia, ib, kind, cols, dfa, dfb](Graph& gr, std::size_t self) {
                        const Tensor& A = val(gr, ia);
                        const Tensor& B = val(gr, ib);
                        const Tensor& up = gr.upstream(self);
                        if (gr.needs_grad(ia)) {
                            Tensor& ga = gr.grad_buffer(ia);
                            for (std::size_t i = 0; i < A.size(); ++i)
                                ga[i] += up[i] * dfa(A[i], B[bidx(kind, i, cols)]);
                        }
                        if (gr.needs_grad(ib)) {
                            Tensor& gb = gr.grad_buffer(ib);
                            for (std::size_t i = 0; i < A.size(); ++i) {
                                const std::size_t j = bidx(kind, i, cols);
                                gb[j] += up[i] * dfb(A[i], B[j]);
                            }
                        }
                    });
}

}  // namespace

Var add(Var a, Var b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var min_elem(Var a, Var b) {
    // Ties route the gradient to the left operand.
    return binary(
        "min_elem", a, b, [](double x, double y) { return std::min(x, y); },
        [](double x, double y) { return x <= y ? 1.0 : 0.0; },
        [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Var min_elem(Var a, double bound) {
    return unary(
        "min_elem", a, [bound](double x) { return std::min(x, bound); },
        [bound](double x, double) { return x <= bound ? 1.0 : 0.0; });
}

Var neg(Var a) {
    return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var relu(Var a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
    return unary(
        "leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var tanh(Var a) {
    return unary(
        "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var log(Var a) {
    return unary(
        "log", a, [](double x) { return std::log(std::clamp(x, kLogEpsilon, 1.0)); },
        [](double x, double) { return (x >= kLogEpsilon && x <= 1.0) ? 1.0 / x : 0.0; });
}

Var abs(Var a) {
    return unary(
        "abs", a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw Error("clamp: lo must not exceed hi");
    return unary(
        "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var scalar_mul(Var a, double s) {
    return unary("scalar_mul", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var scalar_add(Var a, double s) {
    return unary("scalar_add", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sum(Var a) {
    Graph& g = *a.graph;
    const Tensor& x = a.value();
    double s = 0.0;
    for (double v : x.values()) s += v;
    const std::size_t ia = a.id;
    return g.record("sum", Tensor::scalar(s), {ia}, [ia](Graph& gr, std::size_t self) {
        const double up = gr.upstream(self)[0];
        for (double& v : gr.grad_buffer(ia).values()) v += up;
    });
}

Var mean(Var a) {
    Graph& g = *a.graph;
    const Tensor& x = a.value();
    double s = 0.0;
    for (double v : x.values()) s += v;
    const double n = static_cast<double>(x.size());
    const std::size_t ia = a.id;
    return g.record("mean", Tensor::scalar(s / n), {ia}, [ia, n](Graph& gr, std::size_t self) {
        const double up = gr.upstream(self)[0] / n;
        for (double& v : gr.grad_buffer(ia).values()) v += up;
    });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
    return concat(std::vector<Var>(parts), axis);
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    Graph& g = *parts.front().graph;
    const Tensor& first = parts.front().value();
    if (first.ndim() > 2 || axis >= first.ndim()) {
        throw ShapeError("concat: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(first.shape()));
    }
    std::vector<std::size_t> ids;
    std::vector<std::size_t> widths;  // extent along axis per part
    std::size_t total = 0;
    for (const Var& p : parts) {
        (void)graph_of(parts.front(), p);
        const Tensor& t = p.value();
        if (t.ndim() != first.ndim()) mismatch("concat", first, t);
        for (std::size_t d = 0; d < t.ndim(); ++d) {
            if (d != axis && t.dim(d) != first.dim(d)) mismatch("concat", first, t);
        }
        ids.push_back(p.id);
        widths.push_back(t.dim(axis));
        total += t.dim(axis);
    }
    Shape shape = first.shape();
    shape[axis] = total;
    Tensor out(shape);
    // Treat every tensor as (outer, width) blocks; axis 0 means a single outer block.
    const std::size_t outer = (axis == 0) ? 1 : first.dim(0);
    const std::size_t inner = (axis == 0 && first.ndim() == 2) ? first.dim(1) : 1;
    const std::size_t row_len = total * inner;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& t = parts.begin()[k].value();
        const std::size_t len = widths[k] * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(t.values().data() + o * len, len, out.values().data() + o * row_len + offset);
        }
        offset += len;
    }
    return g.record("concat", std::move(out), ids,
                    [ids, widths, outer, inner, row_len](Graph& gr, std::size_t self) {
                        const Tensor& up = gr.upstream(self);
                        std::size_t off = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                            const std::size_t len = widths[k] * inner;
                            if (gr.needs_grad(ids[k])) {
                                Tensor& gp = gr.grad_buffer(ids[k]);
                                for (std::size_t o = 0; o < outer; ++o) {
                                    for (std::size_t j = 0; j < len; ++j) gp[o * len + j] += up[o * row_len + off + j];
                                }
                            }
                            off += len;
                        }
                    });
}

Var softmax_rows(Var a) {
    Graph& g = *a.graph;
    const Tensor& x = a.value();
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < r; ++i) {
        double mx = x[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[i * c + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += (out[i * c + j] = std::exp(x[i * c + j] - mx));
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
    }
    const std::size_t ia = a.id;
    return g.record("softmax_rows", std::move(out), {ia}, [ia, r, c](Graph& gr, std::size_t self) {
        const Tensor& y = val(gr, self);
        const Tensor& up = gr.upstream(self);
        Tensor& ga = gr.grad_buffer(ia);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += up[i * c + j] * y[i * c + j];
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += y[i * c + j] * (up[i * c + j] - dot);
        }
    });
}

}  // namespace acgan
