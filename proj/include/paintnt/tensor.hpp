#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "paintnt/rng.hpp"

namespace paintnt {

using Shape = std::vector<size_t>;

inline size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}

}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

// RAII scope that disables graph construction (pure numeric forward).
struct NoGradGuard {
    NoGradGuard() : prev_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
    ~NoGradGuard() { detail::grad_mode_flag() = prev_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, bool requires_grad = false)
        : node_(std::make_shared<detail::TensorNode>()) {
        node_->shape = std::move(shape);
        node_->data.assign(shape_numel(node_->shape), 0.0);
        node_->requires_grad = requires_grad;
    }

    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size())
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_str(shape));
        Tensor t;
        t.node_ = std::make_shared<detail::TensorNode>();
        t.node_->shape = std::move(shape);
        t.node_->data = std::move(data);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    static Tensor full(Shape shape, double v, bool requires_grad = false) {
        Tensor t(std::move(shape), requires_grad);
        std::fill(t.data().begin(), t.data().end(), v);
        return t;
    }

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    size_t rank() const { return node_->shape.size(); }
    size_t size() const { return node_->data.size(); }
    size_t rows() const { return node_->shape.at(0); }
    size_t cols() const { return node_->shape.at(1); }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    double& at(size_t i) { return node_->data[i]; }
    double at(size_t i) const { return node_->data[i]; }
    double& at(size_t i, size_t j) { return node_->data[i * cols() + j]; }
    double at(size_t i, size_t j) const { return node_->data[i * cols() + j]; }
    double item() const {
        if (size() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape()));
        return node_->data[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return node_->grad.size() == node_->data.size(); }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<double>& grad() const { return node_->grad; }
    void zero_grad() {
        node_->grad.assign(node_->data.size(), 0.0);
    }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor wrap_node(std::shared_ptr<detail::TensorNode> n);
};

inline Tensor wrap_node(std::shared_ptr<detail::TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
}

namespace detail {

// Builds an op result node; wires the graph only when grad mode is on and
// some parent requires grad.
inline Tensor make_result(Shape shape, std::vector<double> data,
                          const std::vector<Tensor>& parents,
                          std::function<void(TensorNode&)> backward_fn) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    if (grad_mode_flag()) {
        bool needs = false;
        for (const auto& p : parents)
            if (p.requires_grad()) { needs = true; break; }
        if (needs) {
            n->requires_grad = true;
            for (const auto& p : parents) n->parents.push_back(p.node());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return wrap_node(std::move(n));
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

inline void accumulate(TensorNode& dst, const std::vector<double>& g) {
    dst.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) dst.grad[i] += g[i];
}

// C += A(MxK) * B(KxN)
inline void gemm_acc(const double* A, const double* B, double* C, size_t M, size_t K, size_t N) {
    for (size_t i = 0; i < M; ++i) {
        const double* a = A + i * K;
        double* c = C + i * N;
        for (size_t k = 0; k < K; ++k) {
            const double av = a[k];
            const double* b = B + k * N;
            for (size_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and arithmetic ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    auto an = a.node();
    auto bn = b.node();
    return detail::make_result(a.shape(), std::move(out), {a, b}, [an, bn](detail::TensorNode& self) {
        if (an->requires_grad) detail::accumulate(*an, self.grad);
        if (bn->requires_grad) detail::accumulate(*bn, self.grad);
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
    auto an = a.node();
    auto bn = b.node();
    return detail::make_result(a.shape(), std::move(out), {a, b}, [an, bn](detail::TensorNode& self) {
        if (an->requires_grad) detail::accumulate(*an, self.grad);
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
    auto an = a.node();
    auto bn = b.node();
    std::vector<double> av = a.data(), bv = b.data();
    return detail::make_result(a.shape(), std::move(out), {a, b},
                               [an, bn, av = std::move(av), bv = std::move(bv)](detail::TensorNode& self) {
                                   if (an->requires_grad) {
                                       an->ensure_grad();
                                       for (size_t i = 0; i < self.grad.size(); ++i)
                                           an->grad[i] += self.grad[i] * bv[i];
                                   }
                                   if (bn->requires_grad) {
                                       bn->ensure_grad();
                                       for (size_t i = 0; i < self.grad.size(); ++i)
                                           bn->grad[i] += self.grad[i] * av[i];
                                   }
                               });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * c;
    auto an = a.node();
    return detail::make_result(a.shape(), std::move(out), {a}, [an, c](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * c;
    });
}

// a: [M x N], v: row vector of N entries (shape {N} or {1, N})
inline Tensor add_rowvec(const Tensor& a, const Tensor& v) {
    if (a.rank() != 2 || v.size() != a.cols())
        throw std::invalid_argument("add_rowvec: " + shape_str(a.shape()) + " vs " + shape_str(v.shape()));
    const size_t M = a.rows(), N = a.cols();
    std::vector<double> out(a.size());
    for (size_t i = 0; i < M; ++i)
        for (size_t j = 0; j < N; ++j) out[i * N + j] = a.at(i, j) + v.at(j);
    auto an = a.node();
    auto vn = v.node();
    return detail::make_result(a.shape(), std::move(out), {a, v}, [an, vn, M, N](detail::TensorNode& self) {
        if (an->requires_grad) detail::accumulate(*an, self.grad);
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (size_t i = 0; i < M; ++i)
                for (size_t j = 0; j < N; ++j) vn->grad[j] += self.grad[i * N + j];
        }
    });
}

// a: [(R*m) x N], e: [m x N]; adds e to every consecutive block of m rows.
inline Tensor add_repeat_rows(const Tensor& a, const Tensor& e) {
    if (a.rank() != 2 || e.rank() != 2 || a.cols() != e.cols() || a.rows() % e.rows() != 0)
        throw std::invalid_argument("add_repeat_rows: " + shape_str(a.shape()) + " vs " +
                                    shape_str(e.shape()));
    const size_t m = e.rows(), N = a.cols(), R = a.rows() / m;
    std::vector<double> out(a.size());
    for (size_t r = 0; r < R; ++r)
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < N; ++j)
                out[(r * m + i) * N + j] = a.at(r * m + i, j) + e.at(i, j);
    auto an = a.node();
    auto en = e.node();
    return detail::make_result(a.shape(), std::move(out), {a, e}, [an, en, m, N, R](detail::TensorNode& self) {
        if (an->requires_grad) detail::accumulate(*an, self.grad);
        if (en->requires_grad) {
            en->ensure_grad();
            for (size_t r = 0; r < R; ++r)
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < N; ++j)
                        en->grad[i * N + j] += self.grad[(r * m + i) * N + j];
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    const size_t M = a.rows(), K = a.cols(), N = b.cols();
    std::vector<double> out(M * N, 0.0);
    detail::gemm_acc(a.data().data(), b.data().data(), out.data(), M, K, N);
    auto an = a.node();
    auto bn = b.node();
    std::vector<double> av = a.data(), bv = b.data();
    return detail::make_result({M, N}, std::move(out), {a, b},
                               [an, bn, av = std::move(av), bv = std::move(bv), M, K, N](detail::TensorNode& self) {
                                   if (an->requires_grad) {
                                       an->ensure_grad();
                                       // dA = dC * B^T
                                       for (size_t i = 0; i < M; ++i)
                                           for (size_t k = 0; k < K; ++k) {
                                               double s = 0.0;
                                               const double* g = self.grad.data() + i * N;
                                               const double* b = bv.data() + k * N;
                                               for (size_t j = 0; j < N; ++j) s += g[j] * b[j];
                                               an->grad[i * K + k] += s;
                                           }
                                   }
                                   if (bn->requires_grad) {
                                       bn->ensure_grad();
                                       // dB = A^T * dC
                                       for (size_t i = 0; i < M; ++i) {
                                           const double* g = self.grad.data() + i * N;
                                           const double* arow = av.data() + i * K;
                                           for (size_t k = 0; k < K; ++k) {
                                               const double v = arow[k];
                                               double* db = bn->grad.data() + k * N;
                                               for (size_t j = 0; j < N; ++j) db[j] += v * g[j];
                                           }
                                       }
                                   }
                               });
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose: rank-2 tensor required, got " + shape_str(a.shape()));
    const size_t M = a.rows(), N = a.cols();
    std::vector<double> out(a.size());
    for (size_t i = 0; i < M; ++i)
        for (size_t j = 0; j < N; ++j) out[j * M + i] = a.at(i, j);
    auto an = a.node();
    return detail::make_result({N, M}, std::move(out), {a}, [an, M, N](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < M; ++i)
            for (size_t j = 0; j < N; ++j) an->grad[i * N + j] += self.grad[j * M + i];
    });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size())
        throw std::invalid_argument("reshape: element count mismatch " + shape_str(a.shape()) + " -> " +
                                    shape_str(shape));
    auto an = a.node();
    return detail::make_result(std::move(shape), a.data(), {a}, [an](detail::TensorNode& self) {
        detail::accumulate(*an, self.grad);
    });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const size_t N = parts[0].cols();
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.cols() != N)
            throw std::invalid_argument("concat_rows: ragged column counts");
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(total * N);
    std::vector<size_t> row_counts;
    for (const auto& p : parts) {
        out.insert(out.end(), p.data().begin(), p.data().end());
        row_counts.push_back(p.rows());
    }
    std::vector<std::shared_ptr<detail::TensorNode>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return detail::make_result({total, N}, std::move(out), parts,
                               [nodes = std::move(nodes), row_counts = std::move(row_counts), N](detail::TensorNode& self) {
                                   size_t off = 0;
                                   for (size_t p = 0; p < nodes.size(); ++p) {
                                       const size_t len = row_counts[p] * N;
                                       if (nodes[p]->requires_grad) {
                                           nodes[p]->ensure_grad();
                                           for (size_t i = 0; i < len; ++i)
                                               nodes[p]->grad[i] += self.grad[off + i];
                                       }
                                       off += len;
                                   }
                               });
}

inline Tensor slice_rows(const Tensor& a, size_t r0, size_t r1) {
    if (a.rank() != 2 || r0 > r1 || r1 > a.rows())
        throw std::invalid_argument("slice_rows: bad range on " + shape_str(a.shape()));
    const size_t N = a.cols();
    std::vector<double> out(a.data().begin() + r0 * N, a.data().begin() + r1 * N);
    auto an = a.node();
    return detail::make_result({r1 - r0, N}, std::move(out), {a}, [an, r0, N](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) an->grad[r0 * N + i] += self.grad[i];
    });
}

inline Tensor slice_cols(const Tensor& a, size_t c0, size_t c1) {
    if (a.rank() != 2 || c0 > c1 || c1 > a.cols())
        throw std::invalid_argument("slice_cols: bad range on " + shape_str(a.shape()));
    const size_t M = a.rows(), N = a.cols(), W = c1 - c0;
    std::vector<double> out(M * W);
    for (size_t i = 0; i < M; ++i)
        for (size_t j = 0; j < W; ++j) out[i * W + j] = a.at(i, c0 + j);
    auto an = a.node();
    return detail::make_result({M, W}, std::move(out), {a}, [an, c0, M, N, W](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < M; ++i)
            for (size_t j = 0; j < W; ++j) an->grad[i * N + c0 + j] += self.grad[i * W + j];
    });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const size_t M = parts[0].rows();
    size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.rows() != M)
            throw std::invalid_argument("concat_cols: ragged row counts");
        total += p.cols();
    }
    std::vector<double> out(M * total);
    size_t off = 0;
    for (const auto& p : parts) {
        const size_t W = p.cols();
        for (size_t i = 0; i < M; ++i)
            for (size_t j = 0; j < W; ++j) out[i * total + off + j] = p.at(i, j);
        off += W;
    }
    std::vector<std::shared_ptr<detail::TensorNode>> nodes;
    std::vector<size_t> widths;
    for (const auto& p : parts) {
        nodes.push_back(p.node());
        widths.push_back(p.cols());
    }
    return detail::make_result({M, total}, std::move(out), parts,
                               [nodes = std::move(nodes), widths = std::move(widths), M, total](detail::TensorNode& self) {
                                   size_t off = 0;
                                   for (size_t p = 0; p < nodes.size(); ++p) {
                                       const size_t W = widths[p];
                                       if (nodes[p]->requires_grad) {
                                           nodes[p]->ensure_grad();
                                           for (size_t i = 0; i < M; ++i)
                                               for (size_t j = 0; j < W; ++j)
                                                   nodes[p]->grad[i * W + j] += self.grad[i * total + off + j];
                                       }
                                       off += W;
                                   }
                               });
}

// Embedding-table lookup: gathers the given rows of a [V x N] table.
inline Tensor take_rows(const Tensor& table, const std::vector<size_t>& indices) {
    if (table.rank() != 2) throw std::invalid_argument("take_rows: rank-2 table required");
    const size_t N = table.cols();
    std::vector<double> out(indices.size() * N);
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= table.rows())
            throw std::invalid_argument("take_rows: index " + std::to_string(indices[i]) +
                                        " out of range for " + shape_str(table.shape()));
        std::copy_n(table.data().begin() + indices[i] * N, N, out.begin() + i * N);
    }
    auto tn = table.node();
    return detail::make_result({indices.size(), N}, std::move(out), {table},
                               [tn, indices, N](detail::TensorNode& self) {
                                   tn->ensure_grad();
                                   for (size_t i = 0; i < indices.size(); ++i)
                                       for (size_t j = 0; j < N; ++j)
                                           tn->grad[indices[i] * N + j] += self.grad[i * N + j];
                               });
}

// ---------------------------------------------------------------------------
// Nonlinearities, normalization, reductions
// ---------------------------------------------------------------------------

// Softmax along `axis` with max-subtraction for stability.
inline Tensor softmax(const Tensor& a, size_t axis) {
    if (axis >= a.rank())
        throw std::invalid_argument("softmax: axis " + std::to_string(axis) + " out of range for " +
                                    shape_str(a.shape()));
    const size_t n = a.shape()[axis];
    size_t inner = 1;
    for (size_t d = axis + 1; d < a.rank(); ++d) inner *= a.shape()[d];
    const size_t outer = a.size() / (n * inner);
    std::vector<double> out(a.size());
    for (size_t o = 0; o < outer; ++o)
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * n * inner + in;
            double mx = a.at(base);
            for (size_t j = 1; j < n; ++j) mx = std::max(mx, a.at(base + j * inner));
            double sum = 0.0;
            for (size_t j = 0; j < n; ++j) {
                const double e = std::exp(a.at(base + j * inner) - mx);
                out[base + j * inner] = e;
                sum += e;
            }
            for (size_t j = 0; j < n; ++j) out[base + j * inner] /= sum;
        }
    auto an = a.node();
    std::vector<double> y = out;
    return detail::make_result(a.shape(), std::move(out), {a},
                               [an, y = std::move(y), n, inner, outer](detail::TensorNode& self) {
                                   an->ensure_grad();
                                   for (size_t o = 0; o < outer; ++o)
                                       for (size_t in = 0; in < inner; ++in) {
                                           const size_t base = o * n * inner + in;
                                           double dot = 0.0;
                                           for (size_t j = 0; j < n; ++j)
                                               dot += self.grad[base + j * inner] * y[base + j * inner];
                                           for (size_t j = 0; j < n; ++j) {
                                               const size_t idx = base + j * inner;
                                               an->grad[idx] += y[idx] * (self.grad[idx] - dot);
                                           }
                                       }
                               });
}

// Layer normalization over the last axis; gamma/beta have last-axis length.
inline Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-6) {
    const size_t n = x.shape().back();
    if (gamma.size() != n || beta.size() != n)
        throw std::invalid_argument("layernorm: gamma/beta length must equal last axis " + std::to_string(n));
    const size_t slices = x.size() / n;
    std::vector<double> out(x.size());
    std::vector<double> xhat(x.size());
    std::vector<double> inv_sigma(slices);
    for (size_t s = 0; s < slices; ++s) {
        const double* xp = x.data().data() + s * n;
        double mean = 0.0;
        for (size_t j = 0; j < n; ++j) mean += xp[j];
        mean /= n;
        double var = 0.0;
        for (size_t j = 0; j < n; ++j) var += (xp[j] - mean) * (xp[j] - mean);
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[s] = is;
        for (size_t j = 0; j < n; ++j) {
            const double h = (xp[j] - mean) * is;
            xhat[s * n + j] = h;
            out[s * n + j] = h * gamma.at(j) + beta.at(j);
        }
    }
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    std::vector<double> gvals = gamma.data();
    return detail::make_result(x.shape(), std::move(out), {x, gamma, beta},
                               [xn, gn, bn, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma),
                                gvals = std::move(gvals), n, slices](detail::TensorNode& self) {
                                   for (size_t s = 0; s < slices; ++s) {
                                       const double* g = self.grad.data() + s * n;
                                       const double* h = xhat.data() + s * n;
                                       if (gn->requires_grad) {
                                           gn->ensure_grad();
                                           for (size_t j = 0; j < n; ++j) gn->grad[j] += g[j] * h[j];
                                       }
                                       if (bn->requires_grad) {
                                           bn->ensure_grad();
                                           for (size_t j = 0; j < n; ++j) bn->grad[j] += g[j];
                                       }
                                       if (xn->requires_grad) {
                                           xn->ensure_grad();
                                           double mean_dh = 0.0, mean_dh_h = 0.0;
                                           for (size_t j = 0; j < n; ++j) {
                                               const double dh = g[j] * gvals[j];
                                               mean_dh += dh;
                                               mean_dh_h += dh * h[j];
                                           }
                                           mean_dh /= n;
                                           mean_dh_h /= n;
                                           for (size_t j = 0; j < n; ++j) {
                                               const double dh = g[j] * gvals[j];
                                               xn->grad[s * n + j] +=
                                                   inv_sigma[s] * (dh - mean_dh - h[j] * mean_dh_h);
                                           }
                                       }
                                   }
                               });
}

// Exact-erf GELU: x * Phi(x).
inline Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = x.at(i);
        out[i] = 0.5 * v * (1.0 + std::erf(v / M_SQRT2));
    }
    auto xn = x.node();
    std::vector<double> xv = x.data();
    return detail::make_result(x.shape(), std::move(out), {x},
                               [xn, xv = std::move(xv)](detail::TensorNode& self) {
                                   xn->ensure_grad();
                                   constexpr double inv_sqrt_2pi = 0.3989422804014327;
                                   for (size_t i = 0; i < self.grad.size(); ++i) {
                                       const double v = xv[i];
                                       const double phi = inv_sqrt_2pi * std::exp(-0.5 * v * v);
                                       const double Phi = 0.5 * (1.0 + std::erf(v / M_SQRT2));
                                       xn->grad[i] += self.grad[i] * (Phi + v * phi);
                                   }
                               });
}

inline Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw std::invalid_argument("dropout: p must be in [0, 1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;
    std::vector<double> mask(x.size());
    const double keep_scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = (rng.uniform() < p) ? 0.0 : keep_scale;
    std::vector<double> out(x.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * mask[i];
    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x},
                               [xn, mask = std::move(mask)](detail::TensorNode& self) {
                                   xn->ensure_grad();
                                   for (size_t i = 0; i < self.grad.size(); ++i)
                                       xn->grad[i] += self.grad[i] * mask[i];
                               });
}

// Stochastic depth over axis-0 samples: each row is zeroed entirely with
// probability p, survivors scaled by 1/(1-p).
inline Tensor drop_path(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw std::invalid_argument("drop_path: p must be in [0, 1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;
    const size_t rows = x.shape().at(0);
    const size_t width = x.size() / rows;
    std::vector<double> row_scale(rows);
    const double keep_scale = 1.0 / (1.0 - p);
    for (size_t i = 0; i < rows; ++i) row_scale[i] = (rng.uniform() < p) ? 0.0 : keep_scale;
    std::vector<double> out(x.size());
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < width; ++j) out[i * width + j] = x.at(i * width + j) * row_scale[i];
    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x},
                               [xn, row_scale = std::move(row_scale), width](detail::TensorNode& self) {
                                   xn->ensure_grad();
                                   for (size_t i = 0; i < row_scale.size(); ++i)
                                       for (size_t j = 0; j < width; ++j)
                                           xn->grad[i * width + j] += self.grad[i * width + j] * row_scale[i];
                               });
}

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node();
    return detail::make_result({1}, {s}, {a}, [an](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += self.grad[0];
    });
}

// Mean over rows of a [M x N] matrix -> [1 x N].
inline Tensor mean_rows(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("mean_rows: rank-2 tensor required");
    const size_t M = a.rows(), N = a.cols();
    std::vector<double> out(N, 0.0);
    for (size_t i = 0; i < M; ++i)
        for (size_t j = 0; j < N; ++j) out[j] += a.at(i, j);
    for (size_t j = 0; j < N; ++j) out[j] /= M;
    auto an = a.node();
    return detail::make_result({1, N}, std::move(out), {a}, [an, M, N](detail::TensorNode& self) {
        an->ensure_grad();
        for (size_t i = 0; i < M; ++i)
            for (size_t j = 0; j < N; ++j) an->grad[i * N + j] += self.grad[j] / M;
    });
}

inline Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / a.size()); }

// ---------------------------------------------------------------------------
// Reverse-mode backward pass
// ---------------------------------------------------------------------------

inline void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));
    // Iterative post-order topo sort over parents.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    std::vector<std::pair<detail::TensorNode*, size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorNode* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

}  // namespace paintnt
