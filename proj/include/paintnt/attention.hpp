#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "paintnt/tensor.hpp"

namespace paintnt {

// Projection weights for one attention layer. For self-attention query and
// key/value inputs coincide; for cross-attention the query side is the
// latent array and the key/value side is the input sequence.
struct AttentionParams {
    Tensor w_q, b_q;  // [q_in x inner]
    Tensor w_k, b_k;  // [kv_in x inner]
    Tensor w_v, b_v;  // [kv_in x inner]
    Tensor w_o, b_o;  // [inner x out]
    size_t heads = 1;

    size_t inner_dim() const { return w_q.cols(); }
    size_t out_dim() const { return w_o.cols(); }

    void validate() const {
        if (heads == 0 || inner_dim() % heads != 0)
            throw std::invalid_argument("attention: model_dim " + std::to_string(inner_dim()) +
                                        " not divisible by heads " + std::to_string(heads));
        if (w_k.cols() != inner_dim() || w_v.cols() != inner_dim() || w_o.rows() != inner_dim())
            throw std::invalid_argument("attention: inconsistent projection dims");
    }
};

inline AttentionParams make_attention_params(size_t q_in, size_t kv_in, size_t inner, size_t out,
                                             size_t heads, Rng& rng, double init_std = 0.02) {
    auto init = [&](size_t r, size_t c) {
        Tensor t({r, c}, true);
        for (auto& v : t.data()) v = rng.truncated_normal(init_std);
        return t;
    };
    AttentionParams p;
    p.w_q = init(q_in, inner);
    p.b_q = Tensor({inner}, true);
    p.w_k = init(kv_in, inner);
    p.b_k = Tensor({inner}, true);
    p.w_v = init(kv_in, inner);
    p.b_v = Tensor({inner}, true);
    p.w_o = init(inner, out);
    p.b_o = Tensor({out}, true);
    p.heads = heads;
    p.validate();
    return p;
}

// Recorded post-softmax attention weights, one [q x kv] matrix per head,
// grouped per layer call. Used by the relevance-map rollout.
struct AttentionTrace {
    std::vector<std::vector<Tensor>> layers;
};

// softmax(q k^T / sqrt(d_k)) v. Optionally returns the weight matrix.
inline Tensor scaled_dot_product(const Tensor& q, const Tensor& k, const Tensor& v,
                                 Tensor* weights_out = nullptr) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.cols() != k.cols() ||
        k.rows() != v.rows())
        throw std::invalid_argument("scaled_dot_product: incompatible shapes q" + shape_str(q.shape()) +
                                    " k" + shape_str(k.shape()) + " v" + shape_str(v.shape()));
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_dk);
    Tensor weights = softmax(scores, 1);
    if (weights_out) *weights_out = weights;
    return matmul(weights, v);
}

namespace detail {

// Shared worker: projects once, then attends per segment and per head.
// segment_len == 0 means one segment spanning all rows; otherwise attention
// is restricted to consecutive blocks of segment_len rows (the inner encoder
// attends within each patch independently).
inline Tensor attention_forward(const Tensor& queries_in, const Tensor& kv_in,
                                const AttentionParams& p, double dropout_p, bool training,
                                Rng& rng, std::vector<Tensor>* head_weights,
                                size_t segment_len = 0) {
    p.validate();
    if (queries_in.cols() != p.w_q.rows())
        throw std::invalid_argument("attention: query dim " + std::to_string(queries_in.cols()) +
                                    " does not match w_q " + shape_str(p.w_q.shape()));
    if (kv_in.cols() != p.w_k.rows())
        throw std::invalid_argument("attention: key/value dim " + std::to_string(kv_in.cols()) +
                                    " does not match w_k " + shape_str(p.w_k.shape()));
    Tensor Q = add_rowvec(matmul(queries_in, p.w_q), p.b_q);
    Tensor K = add_rowvec(matmul(kv_in, p.w_k), p.b_k);
    Tensor V = add_rowvec(matmul(kv_in, p.w_v), p.b_v);
    const size_t inner = p.inner_dim();
    const size_t dh = inner / p.heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    const size_t q_rows = Q.rows();
    const size_t seg = segment_len == 0 ? q_rows : segment_len;
    if (segment_len != 0 && (q_rows % seg != 0 || K.rows() % seg != 0))
        throw std::invalid_argument("attention: rows not divisible by segment length");
    const size_t n_segments = q_rows / seg;
    const size_t kv_seg = K.rows() / n_segments;

    std::vector<Tensor> segment_outputs;
    segment_outputs.reserve(n_segments);
    for (size_t s = 0; s < n_segments; ++s) {
        Tensor Qs = n_segments == 1 ? Q : slice_rows(Q, s * seg, (s + 1) * seg);
        Tensor Ks = n_segments == 1 ? K : slice_rows(K, s * kv_seg, (s + 1) * kv_seg);
        Tensor Vs = n_segments == 1 ? V : slice_rows(V, s * kv_seg, (s + 1) * kv_seg);
        std::vector<Tensor> head_outputs;
        head_outputs.reserve(p.heads);
        for (size_t h = 0; h < p.heads; ++h) {
            Tensor qh = p.heads == 1 ? Qs : slice_cols(Qs, h * dh, (h + 1) * dh);
            Tensor kh = p.heads == 1 ? Ks : slice_cols(Ks, h * dh, (h + 1) * dh);
            Tensor vh = p.heads == 1 ? Vs : slice_cols(Vs, h * dh, (h + 1) * dh);
            Tensor weights = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt_dh), 1);
            if (head_weights) head_weights->push_back(weights);
            weights = dropout(weights, dropout_p, training, rng);
            head_outputs.push_back(matmul(weights, vh));
        }
        Tensor mixed = p.heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
        segment_outputs.push_back(mixed);
    }
    Tensor mixed_all = n_segments == 1 ? segment_outputs[0] : concat_rows(segment_outputs);
    return add_rowvec(matmul(mixed_all, p.w_o), p.b_o);
}

}  // namespace detail

// Standard multi-head self-attention over an [M x D] token sequence.
inline Tensor multi_head_self_attention(const Tensor& x, const AttentionParams& p,
                                        double dropout_p, bool training, Rng& rng,
                                        std::vector<Tensor>* head_weights = nullptr) {
    return detail::attention_forward(x, x, p, dropout_p, training, rng, head_weights);
}

// Self-attention restricted to consecutive segments of `segment_len` rows.
inline Tensor multi_head_self_attention_segmented(const Tensor& x, size_t segment_len,
                                                  const AttentionParams& p, double dropout_p,
                                                  bool training, Rng& rng) {
    return detail::attention_forward(x, x, p, dropout_p, training, rng, nullptr, segment_len);
}

// Learned-latent cross-attention: queries from an [N x D] latent array,
// keys/values from the [M x C] input. Output is [N x D] for any M.
inline Tensor cross_attention(const Tensor& latents, const Tensor& x, const AttentionParams& p,
                              double dropout_p, bool training, Rng& rng) {
    return detail::attention_forward(latents, x, p, dropout_p, training, rng, nullptr);
}

}  // namespace paintnt
