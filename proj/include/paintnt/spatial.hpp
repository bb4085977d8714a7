#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/layers.hpp"

namespace paintnt {

// Frame encoder configuration: patches of p x p pixels, sub-patches of
// s x s pixels, outer tokens of dim d, inner tokens of dim c with m*c == d.
struct SpatialConfig {
    size_t image_size = 224;
    size_t patch_size = 16;
    size_t subpatch_size = 4;
    size_t outer_dim = 192;
    size_t inner_dim = 12;
    size_t depth = 12;
    size_t outer_heads = 3;
    size_t inner_heads = 2;
    double mlp_ratio = 4.0;
    double drop_path_p = 0.1;
    bool use_class_token = true;

    size_t num_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
    size_t num_subpatches() const {
        return (patch_size / subpatch_size) * (patch_size / subpatch_size);
    }
    size_t patch_pixel_dim() const { return patch_size * patch_size * 3; }
    size_t subpatch_pixel_dim() const { return subpatch_size * subpatch_size * 3; }

    void validate() const {
        if (image_size == 0 || patch_size == 0 || subpatch_size == 0)
            throw std::invalid_argument("spatial config: zero size");
        if (image_size % patch_size != 0)
            throw std::invalid_argument("spatial config: image_size " + std::to_string(image_size) +
                                        " not divisible by patch_size " + std::to_string(patch_size));
        if (patch_size % subpatch_size != 0)
            throw std::invalid_argument("spatial config: patch_size " + std::to_string(patch_size) +
                                        " not divisible by subpatch_size " +
                                        std::to_string(subpatch_size));
        if (num_subpatches() * inner_dim != outer_dim)
            throw std::invalid_argument(
                "spatial config: m*c must equal d (" + std::to_string(num_subpatches()) + "*" +
                std::to_string(inner_dim) + " != " + std::to_string(outer_dim) + ")");
        if (outer_dim % outer_heads != 0)
            throw std::invalid_argument("spatial config: outer_dim not divisible by outer_heads");
        if (inner_dim % inner_heads != 0)
            throw std::invalid_argument("spatial config: inner_dim not divisible by inner_heads");
        if (depth == 0) throw std::invalid_argument("spatial config: depth must be positive");
    }
};

// ---------------------------------------------------------------------------
// Patch extraction (pure data movement, no gradients flow into pixels)
// ---------------------------------------------------------------------------

// frame [H x W x 3] -> [n x p x p x 3], row-major non-overlapping tiles.
inline Tensor patchify(const Tensor& frame, size_t p) {
    if (frame.rank() != 3 || frame.shape()[2] != 3)
        throw std::invalid_argument("patchify: frame must be [H x W x 3], got " +
                                    shape_str(frame.shape()));
    const size_t H = frame.shape()[0], W = frame.shape()[1];
    if (H != W || H % p != 0)
        throw std::invalid_argument("patchify: frame " + shape_str(frame.shape()) +
                                    " not square or not divisible by patch size " + std::to_string(p));
    const size_t g = H / p;
    Tensor out({g * g, p, p, 3});
    const auto& src = frame.data();
    auto& dst = out.data();
    size_t idx = 0;
    for (size_t gy = 0; gy < g; ++gy)
        for (size_t gx = 0; gx < g; ++gx)
            for (size_t y = 0; y < p; ++y)
                for (size_t x = 0; x < p; ++x)
                    for (size_t ch = 0; ch < 3; ++ch)
                        dst[idx++] = src[((gy * p + y) * W + (gx * p + x)) * 3 + ch];
    return out;
}

inline Tensor unpatchify(const Tensor& patches, size_t image_size) {
    const size_t p = patches.shape()[1];
    const size_t g = image_size / p;
    Tensor out({image_size, image_size, 3});
    const auto& src = patches.data();
    auto& dst = out.data();
    size_t idx = 0;
    for (size_t gy = 0; gy < g; ++gy)
        for (size_t gx = 0; gx < g; ++gx)
            for (size_t y = 0; y < p; ++y)
                for (size_t x = 0; x < p; ++x)
                    for (size_t ch = 0; ch < 3; ++ch)
                        dst[((gy * p + y) * image_size + (gx * p + x)) * 3 + ch] = src[idx++];
    return out;
}

// patches [n x p x p x 3] -> [n x m x s x s x 3].
inline Tensor subpatchify(const Tensor& patches, size_t s) {
    if (patches.rank() != 4)
        throw std::invalid_argument("subpatchify: expected [n x p x p x 3], got " +
                                    shape_str(patches.shape()));
    const size_t n = patches.shape()[0], p = patches.shape()[1];
    if (p % s != 0)
        throw std::invalid_argument("subpatchify: patch size " + std::to_string(p) +
                                    " not divisible by sub-patch size " + std::to_string(s));
    const size_t g = p / s;
    Tensor out({n, g * g, s, s, 3});
    const auto& src = patches.data();
    auto& dst = out.data();
    size_t idx = 0;
    for (size_t pa = 0; pa < n; ++pa)
        for (size_t gy = 0; gy < g; ++gy)
            for (size_t gx = 0; gx < g; ++gx)
                for (size_t y = 0; y < s; ++y)
                    for (size_t x = 0; x < s; ++x)
                        for (size_t ch = 0; ch < 3; ++ch)
                            dst[idx++] =
                                src[(pa * p * p + (gy * s + y) * p + (gx * s + x)) * 3 + ch];
    return out;
}

// Patch and sub-patch views of one frame.
struct PatchGrid {
    Tensor patches;     // [n x p x p x 3]
    Tensor subpatches;  // [n x m x s x s x 3]
};

inline PatchGrid make_patch_grid(const Tensor& frame, const SpatialConfig& cfg) {
    PatchGrid g;
    g.patches = patchify(frame, cfg.patch_size);
    g.subpatches = subpatchify(g.patches, cfg.subpatch_size);
    return g;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct TntBlockParams {
    LayerNormParams inner_norm1, inner_norm2;
    AttentionParams inner_attn;
    MlpParams inner_mlp;
    Tensor inject_w, inject_b;  // flatten(Y patch) [m*c] -> d
    LayerNormParams outer_norm1, outer_norm2;
    AttentionParams outer_attn;
    MlpParams outer_mlp;
};

struct SpatialParams {
    Tensor patch_proj_w, patch_proj_b;  // [p*p*3 x d]
    Tensor sub_proj_w, sub_proj_b;      // [s*s*3 x c]
    Tensor e_patch;                     // [(n+1) x d]
    Tensor e_subpatch;                  // [m x c]
    Tensor class_token;                 // [1 x d]
    std::vector<TntBlockParams> blocks;
    LayerNormParams final_norm;

    static SpatialParams init(const SpatialConfig& cfg, Rng& rng) {
        cfg.validate();
        const double std = 0.02;
        auto weight = [&](size_t r, size_t c) {
            Tensor t({r, c}, true);
            for (auto& v : t.data()) v = rng.truncated_normal(std);
            return t;
        };
        const size_t d = cfg.outer_dim, c = cfg.inner_dim;
        const size_t n = cfg.num_patches(), m = cfg.num_subpatches();
        SpatialParams p;
        p.patch_proj_w = weight(cfg.patch_pixel_dim(), d);
        p.patch_proj_b = Tensor({d}, true);
        p.sub_proj_w = weight(cfg.subpatch_pixel_dim(), c);
        p.sub_proj_b = Tensor({c}, true);
        p.e_patch = weight(n + 1, d);
        p.e_subpatch = weight(m, c);
        p.class_token = weight(1, d);
        const size_t inner_hidden = static_cast<size_t>(c * cfg.mlp_ratio);
        const size_t outer_hidden = static_cast<size_t>(d * cfg.mlp_ratio);
        for (size_t b = 0; b < cfg.depth; ++b) {
            TntBlockParams blk;
            blk.inner_norm1 = LayerNormParams::init(c);
            blk.inner_norm2 = LayerNormParams::init(c);
            blk.inner_attn = make_attention_params(c, c, c, c, cfg.inner_heads, rng, std);
            blk.inner_mlp = MlpParams::init(c, inner_hidden, c, rng, std);
            blk.inject_w = weight(m * c, d);
            blk.inject_b = Tensor({d}, true);
            blk.outer_norm1 = LayerNormParams::init(d);
            blk.outer_norm2 = LayerNormParams::init(d);
            blk.outer_attn = make_attention_params(d, d, d, d, cfg.outer_heads, rng, std);
            blk.outer_mlp = MlpParams::init(d, outer_hidden, d, rng, std);
            p.blocks.push_back(std::move(blk));
        }
        p.final_norm = LayerNormParams::init(d);
        return p;
    }

    template <typename Fn>
    void visit(Fn&& fn) {
        fn("spatial.patch_proj.w", patch_proj_w);
        fn("spatial.patch_proj.b", patch_proj_b);
        fn("spatial.sub_proj.w", sub_proj_w);
        fn("spatial.sub_proj.b", sub_proj_b);
        fn("spatial.pos.e_patch", e_patch);
        fn("spatial.pos.e_subpatch", e_subpatch);
        fn("spatial.class_token", class_token);
        for (size_t b = 0; b < blocks.size(); ++b) {
            const std::string pre = "spatial.block" + std::to_string(b);
            visit_layernorm(pre + ".inner_norm1", blocks[b].inner_norm1, fn);
            visit_attention(pre + ".inner_attn", blocks[b].inner_attn, fn);
            visit_layernorm(pre + ".inner_norm2", blocks[b].inner_norm2, fn);
            visit_mlp(pre + ".inner_mlp", blocks[b].inner_mlp, fn);
            fn(pre + ".inject.w", blocks[b].inject_w);
            fn(pre + ".inject.b", blocks[b].inject_b);
            visit_layernorm(pre + ".outer_norm1", blocks[b].outer_norm1, fn);
            visit_attention(pre + ".outer_attn", blocks[b].outer_attn, fn);
            visit_layernorm(pre + ".outer_norm2", blocks[b].outer_norm2, fn);
            visit_mlp(pre + ".outer_mlp", blocks[b].outer_mlp, fn);
        }
        visit_layernorm("spatial.final_norm", final_norm, fn);
    }
};

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

// Z0: [(n+1) x d] with class token prepended, Y0: [(n*m) x c].
inline std::pair<Tensor, Tensor> embed_and_position(const PatchGrid& grid,
                                                    const SpatialConfig& cfg,
                                                    const SpatialParams& p) {
    const size_t n = cfg.num_patches(), m = cfg.num_subpatches();
    Tensor patch_flat = reshape(grid.patches, {n, cfg.patch_pixel_dim()});
    Tensor z = add_rowvec(matmul(patch_flat, p.patch_proj_w), p.patch_proj_b);
    Tensor z0 = add(concat_rows({p.class_token, z}), p.e_patch);

    Tensor sub_flat = reshape(grid.subpatches, {n * m, cfg.subpatch_pixel_dim()});
    Tensor y = add_rowvec(matmul(sub_flat, p.sub_proj_w), p.sub_proj_b);
    Tensor y0 = add_repeat_rows(y, p.e_subpatch);
    return {z0, y0};
}

namespace detail {

// Whole residual branch as one stochastic-depth sample.
inline Tensor drop_branch(const Tensor& branch, double p, bool training, Rng& rng) {
    if (!training || p == 0.0) return branch;
    Shape orig = branch.shape();
    Tensor flat = reshape(branch, {1, branch.size()});
    return reshape(drop_path(flat, p, training, rng), std::move(orig));
}

}  // namespace detail

// One paired inner/outer block. Records outer attention weights when a trace
// is given.
inline std::pair<Tensor, Tensor> tnt_block(const Tensor& z, const Tensor& y,
                                           const TntBlockParams& blk, const SpatialConfig& cfg,
                                           bool training, Rng& rng,
                                           AttentionTrace* trace = nullptr) {
    const size_t n = cfg.num_patches(), m = cfg.num_subpatches();
    const size_t d = cfg.outer_dim, c = cfg.inner_dim;

    // Inner encoder: attention within each patch's sub-patch tokens.
    Tensor y1 = add(y, multi_head_self_attention_segmented(apply_layernorm(y, blk.inner_norm1), m,
                                                           blk.inner_attn, 0.0, training, rng));
    Tensor y2 = add(y1, mlp_forward(apply_layernorm(y1, blk.inner_norm2), blk.inner_mlp));

    // Inject flattened inner tokens into the patch tokens (class token untouched).
    Tensor inj = add_rowvec(matmul(reshape(y2, {n, m * c}), blk.inject_w), blk.inject_b);
    Tensor z_inj = concat_rows({slice_rows(z, 0, 1), add(slice_rows(z, 1, n + 1), inj)});

    // Outer encoder with stochastic depth on both residual branches.
    std::vector<Tensor>* head_weights = nullptr;
    std::vector<Tensor> recorded;
    if (trace) head_weights = &recorded;
    Tensor attn_branch = multi_head_self_attention(apply_layernorm(z_inj, blk.outer_norm1),
                                                   blk.outer_attn, 0.0, training, rng, head_weights);
    Tensor z1 = add(z_inj, detail::drop_branch(attn_branch, cfg.drop_path_p, training, rng));
    Tensor mlp_branch = mlp_forward(apply_layernorm(z1, blk.outer_norm2), blk.outer_mlp);
    Tensor z2 = add(z1, detail::drop_branch(mlp_branch, cfg.drop_path_p, training, rng));
    if (trace) trace->layers.push_back(std::move(recorded));
    return {z2, y2};
}

// Frame -> d-dimensional feature (layer-normalized class token, or mean of
// patch tokens when the class token is disabled).
inline Tensor spatial_forward(const Tensor& frame, const SpatialConfig& cfg,
                              const SpatialParams& params, bool training, Rng& rng,
                              AttentionTrace* trace = nullptr) {
    cfg.validate();
    if (frame.rank() != 3 || frame.shape()[0] != cfg.image_size || frame.shape()[1] != cfg.image_size)
        throw std::invalid_argument("spatial_forward: frame " + shape_str(frame.shape()) +
                                    " does not match image_size " + std::to_string(cfg.image_size));
    PatchGrid grid = make_patch_grid(frame, cfg);
    auto [z, y] = embed_and_position(grid, cfg, params);
    for (const auto& blk : params.blocks) {
        auto [z2, y2] = tnt_block(z, y, blk, cfg, training, rng, trace);
        z = z2;
        y = y2;
    }
    Tensor normed = apply_layernorm(z, params.final_norm);
    Tensor feat = cfg.use_class_token ? slice_rows(normed, 0, 1)
                                      : mean_rows(slice_rows(normed, 1, cfg.num_patches() + 1));
    return reshape(feat, {cfg.outer_dim});
}

}  // namespace paintnt
