#pragma once

#include <string>

#include "paintnt/attention.hpp"
#include "paintnt/tensor.hpp"

namespace paintnt {

struct LayerNormParams {
    Tensor gamma, beta;

    static LayerNormParams init(size_t dim) {
        LayerNormParams p;
        p.gamma = Tensor::full({dim}, 1.0, true);
        p.beta = Tensor({dim}, true);
        return p;
    }
};

// Two-layer MLP with GELU, hidden = mlp_ratio * dim.
struct MlpParams {
    Tensor w1, b1, w2, b2;

    static MlpParams init(size_t in, size_t hidden, size_t out, Rng& rng, double init_std = 0.02) {
        auto weight = [&](size_t r, size_t c) {
            Tensor t({r, c}, true);
            for (auto& v : t.data()) v = rng.truncated_normal(init_std);
            return t;
        };
        MlpParams p;
        p.w1 = weight(in, hidden);
        p.b1 = Tensor({hidden}, true);
        p.w2 = weight(hidden, out);
        p.b2 = Tensor({out}, true);
        return p;
    }
};

inline Tensor mlp_forward(const Tensor& x, const MlpParams& p) {
    Tensor h = gelu(add_rowvec(matmul(x, p.w1), p.b1));
    return add_rowvec(matmul(h, p.w2), p.b2);
}

inline Tensor apply_layernorm(const Tensor& x, const LayerNormParams& p, double eps = 1e-6) {
    return layernorm(x, p.gamma, p.beta, eps);
}

// Parameter visitor callback: (name, tensor).
template <typename Fn>
void visit_layernorm(const std::string& prefix, LayerNormParams& p, Fn&& fn) {
    fn(prefix + ".gamma", p.gamma);
    fn(prefix + ".beta", p.beta);
}

template <typename Fn>
void visit_mlp(const std::string& prefix, MlpParams& p, Fn&& fn) {
    fn(prefix + ".w1", p.w1);
    fn(prefix + ".b1", p.b1);
    fn(prefix + ".w2", p.w2);
    fn(prefix + ".b2", p.b2);
}

template <typename Fn>
void visit_attention(const std::string& prefix, AttentionParams& p, Fn&& fn) {
    fn(prefix + ".w_q", p.w_q);
    fn(prefix + ".b_q", p.b_q);
    fn(prefix + ".w_k", p.w_k);
    fn(prefix + ".b_k", p.b_k);
    fn(prefix + ".w_v", p.w_v);
    fn(prefix + ".b_v", p.b_v);
    fn(prefix + ".w_o", p.w_o);
    fn(prefix + ".b_o", p.b_o);
}

}  // namespace paintnt
