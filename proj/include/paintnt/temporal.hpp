#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/layers.hpp"

namespace paintnt {

struct TemporalConfig {
    size_t feature_dim = 192;   // per-frame feature size d
    size_t latent_count = 32;   // N
    size_t latent_dim = 192;    // D
    size_t cross_heads = 1;
    size_t self_heads = 8;
    size_t self_blocks = 2;
    size_t fourier_bands = 6;
    double mlp_ratio = 4.0;
    double attn_dropout_p = 0.1;
    size_t num_classes = 5;
    size_t max_frames = 138;  // largest sequence length the module accepts

    size_t position_dim() const { return 2 * fourier_bands + 1; }

    void validate() const {
        if (feature_dim == 0 || latent_dim == 0 || latent_count == 0 || num_classes < 2)
            throw std::invalid_argument("temporal config: zero dimension");
        if (latent_count >= max_frames)
            throw std::invalid_argument("temporal config: latent bottleneck not smaller than input (N=" +
                                        std::to_string(latent_count) +
                                        " >= max_frames=" + std::to_string(max_frames) + ")");
        if (latent_dim % self_heads != 0)
            throw std::invalid_argument("temporal config: latent_dim not divisible by self_heads");
        if (latent_dim % cross_heads != 0)
            throw std::invalid_argument("temporal config: latent_dim not divisible by cross_heads");
        if (fourier_bands == 0) throw std::invalid_argument("temporal config: fourier_bands must be >= 1");
    }
};

// Ordered per-frame embeddings of one video.
struct VideoFeature {
    Tensor sequence;  // [M x d]
    size_t frame_count() const { return sequence.rows(); }
    size_t flattened_size() const { return sequence.size(); }
};

inline VideoFeature concat_frame_features(const std::vector<Tensor>& features) {
    if (features.empty()) throw std::invalid_argument("concat_frame_features: empty feature list");
    const size_t d = features[0].size();
    std::vector<Tensor> rows;
    rows.reserve(features.size());
    for (const auto& f : features) {
        if (f.size() != d)
            throw std::invalid_argument("concat_frame_features: ragged feature dims " +
                                        std::to_string(f.size()) + " vs " + std::to_string(d));
        rows.push_back(reshape(f, {1, d}));
    }
    return VideoFeature{concat_rows(rows)};
}

// [M x (2*bands+1)]: columns [x, sin(pi f_1 x), cos(pi f_1 x), ...] with
// x in [-1, 1] and frequencies linearly spaced from 1 to M/2.
inline Tensor fourier_position_encoding(size_t M, size_t bands) {
    if (M < 1 || bands < 1) throw std::invalid_argument("fourier_position_encoding: M and bands must be >= 1");
    const size_t cols = 2 * bands + 1;
    Tensor out({M, cols});
    const double max_freq = static_cast<double>(M) / 2.0;
    for (size_t j = 0; j < M; ++j) {
        const double x = (M == 1) ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / (M - 1);
        out.at(j, 0) = x;
        for (size_t b = 0; b < bands; ++b) {
            const double f = (bands == 1) ? 1.0 : 1.0 + (max_freq - 1.0) * b / (bands - 1);
            out.at(j, 1 + 2 * b) = std::sin(M_PI * f * x);
            out.at(j, 2 + 2 * b) = std::cos(M_PI * f * x);
        }
    }
    return out;
}

struct TemporalParams {
    Tensor latents;                     // [N x D]
    Tensor input_proj_w, input_proj_b;  // [(d + 2*bands+1) x D]
    LayerNormParams cross_norm_latent, cross_norm_input;
    AttentionParams cross_attn;
    LayerNormParams cross_mlp_norm;
    MlpParams cross_mlp;
    struct SelfBlock {
        LayerNormParams norm1, norm2;
        AttentionParams attn;
        MlpParams mlp;
    };
    std::vector<SelfBlock> self_blocks;
    LayerNormParams head_norm;
    Tensor head_w, head_b;  // [D x num_classes]

    static TemporalParams init(const TemporalConfig& cfg, Rng& rng) {
        cfg.validate();
        const double std = 0.02;
        auto weight = [&](size_t r, size_t c) {
            Tensor t({r, c}, true);
            for (auto& v : t.data()) v = rng.truncated_normal(std);
            return t;
        };
        const size_t D = cfg.latent_dim;
        TemporalParams p;
        p.latents = weight(cfg.latent_count, D);
        p.input_proj_w = weight(cfg.feature_dim + cfg.position_dim(), D);
        p.input_proj_b = Tensor({D}, true);
        p.cross_norm_latent = LayerNormParams::init(D);
        p.cross_norm_input = LayerNormParams::init(D);
        p.cross_attn = make_attention_params(D, D, D, D, cfg.cross_heads, rng, std);
        p.cross_mlp_norm = LayerNormParams::init(D);
        const size_t hidden = static_cast<size_t>(D * cfg.mlp_ratio);
        p.cross_mlp = MlpParams::init(D, hidden, D, rng, std);
        for (size_t b = 0; b < cfg.self_blocks; ++b) {
            SelfBlock blk;
            blk.norm1 = LayerNormParams::init(D);
            blk.norm2 = LayerNormParams::init(D);
            blk.attn = make_attention_params(D, D, D, D, cfg.self_heads, rng, std);
            blk.mlp = MlpParams::init(D, hidden, D, rng, std);
            p.self_blocks.push_back(std::move(blk));
        }
        p.head_norm = LayerNormParams::init(D);
        p.head_w = weight(D, cfg.num_classes);
        p.head_b = Tensor({cfg.num_classes}, true);
        return p;
    }

    template <typename Fn>
    void visit(Fn&& fn) {
        fn("temporal.latents", latents);
        fn("temporal.input_proj.w", input_proj_w);
        fn("temporal.input_proj.b", input_proj_b);
        visit_layernorm("temporal.cross_norm_latent", cross_norm_latent, fn);
        visit_layernorm("temporal.cross_norm_input", cross_norm_input, fn);
        visit_attention("temporal.cross_attn", cross_attn, fn);
        visit_layernorm("temporal.cross_mlp_norm", cross_mlp_norm, fn);
        visit_mlp("temporal.cross_mlp", cross_mlp, fn);
        for (size_t b = 0; b < self_blocks.size(); ++b) {
            const std::string pre = "temporal.self" + std::to_string(b);
            visit_layernorm(pre + ".norm1", self_blocks[b].norm1, fn);
            visit_attention(pre + ".attn", self_blocks[b].attn, fn);
            visit_layernorm(pre + ".norm2", self_blocks[b].norm2, fn);
            visit_mlp(pre + ".mlp", self_blocks[b].mlp, fn);
        }
        visit_layernorm("temporal.head_norm", head_norm, fn);
        fn("temporal.head.w", head_w);
        fn("temporal.head.b", head_b);
    }
};

namespace detail {

inline Tensor temporal_forward_impl(const VideoFeature& vf, const TemporalConfig& cfg,
                                    const TemporalParams& p, bool training, Rng& rng) {
    const size_t M = vf.frame_count();
    if (vf.sequence.cols() != cfg.feature_dim)
        throw std::invalid_argument("temporal_forward: feature dim " +
                                    std::to_string(vf.sequence.cols()) + " does not match config " +
                                    std::to_string(cfg.feature_dim));

    // Fourier encodings concatenated to the frame features, projected to D.
    Tensor pos = fourier_position_encoding(M, cfg.fourier_bands);
    Tensor x = add_rowvec(matmul(concat_cols({vf.sequence, pos}), p.input_proj_w), p.input_proj_b);

    Tensor latents = add(p.latents, cross_attention(apply_layernorm(p.latents, p.cross_norm_latent),
                                                    apply_layernorm(x, p.cross_norm_input),
                                                    p.cross_attn, cfg.attn_dropout_p, training, rng));
    latents = add(latents, mlp_forward(apply_layernorm(latents, p.cross_mlp_norm), p.cross_mlp));

    for (const auto& blk : p.self_blocks) {
        latents = add(latents, multi_head_self_attention(apply_layernorm(latents, blk.norm1), blk.attn,
                                                         cfg.attn_dropout_p, training, rng));
        latents = add(latents, mlp_forward(apply_layernorm(latents, blk.norm2), blk.mlp));
    }

    Tensor pooled = apply_layernorm(mean_rows(latents), p.head_norm);
    Tensor logits = add_rowvec(matmul(pooled, p.head_w), p.head_b);
    return reshape(logits, {cfg.num_classes});
}

}  // namespace detail

// Video feature sequence -> class logits. Requires M > N.
inline Tensor temporal_forward(const VideoFeature& vf, const TemporalConfig& cfg,
                               const TemporalParams& p, bool training, Rng& rng) {
    cfg.validate();
    if (vf.frame_count() <= cfg.latent_count)
        throw std::invalid_argument("temporal_forward: latent bottleneck not smaller than input (M=" +
                                    std::to_string(vf.frame_count()) +
                                    " <= N=" + std::to_string(cfg.latent_count) + ")");
    return detail::temporal_forward_impl(vf, cfg, p, training, rng);
}

}  // namespace paintnt
