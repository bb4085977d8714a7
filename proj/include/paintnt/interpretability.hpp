#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "paintnt/data.hpp"
#include "paintnt/model.hpp"

namespace paintnt {

// Per-patch attribution of a class decision, non-negative, one value per
// outer patch token.
struct RelevanceMap {
    std::vector<double> values;  // length n, row-major over the patch grid
    size_t grid_side = 0;        // image_size / patch_size
    int target_class = 0;

    std::vector<double> normalized() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        std::vector<double> out(values.size());
        if (sum <= 1e-12) {
            // Degenerate (e.g. identity rollout): uniform relevance.
            std::fill(out.begin(), out.end(), 1.0 / values.size());
        } else {
            for (size_t i = 0; i < values.size(); ++i) out[i] = values[i] / sum;
        }
        return out;
    }
};

// Head-mean of max(0, grad(A) .* A) for one layer's recorded weights.
// Requires backward() to have run so the weight tensors carry gradients.
inline std::vector<double> gradient_weighted_abar(const std::vector<Tensor>& head_weights) {
    if (head_weights.empty()) throw std::invalid_argument("gradient_weighted_abar: no recorded heads");
    const size_t rows = head_weights[0].rows(), cols = head_weights[0].cols();
    std::vector<double> abar(rows * cols, 0.0);
    for (const auto& w : head_weights) {
        if (!w.has_grad())
            throw std::invalid_argument("gradient_weighted_abar: attention weights carry no gradient");
        const auto& a = w.data();
        const auto& g = w.grad();
        for (size_t i = 0; i < abar.size(); ++i) abar[i] += std::max(0.0, g[i] * a[i]);
    }
    for (auto& v : abar) v /= head_weights.size();
    return abar;
}

// Rollout R <- normalize_rows(I + Abar_l) * R from input to output; returns
// the class-token row restricted to the patch tokens.
inline RelevanceMap rollout(const std::vector<std::vector<double>>& abars, size_t tokens,
                            size_t grid_side, int target_class) {
    std::vector<double> R(tokens * tokens, 0.0);
    for (size_t i = 0; i < tokens; ++i) R[i * tokens + i] = 1.0;
    std::vector<double> M(tokens * tokens), next(tokens * tokens);
    for (const auto& abar : abars) {
        if (abar.size() != tokens * tokens)
            throw std::invalid_argument("rollout: layer matrix size mismatch");
        for (size_t i = 0; i < tokens; ++i) {
            double row_sum = 0.0;
            for (size_t j = 0; j < tokens; ++j) {
                M[i * tokens + j] = abar[i * tokens + j] + (i == j ? 1.0 : 0.0);
                row_sum += M[i * tokens + j];
            }
            for (size_t j = 0; j < tokens; ++j) M[i * tokens + j] /= row_sum;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (size_t i = 0; i < tokens; ++i)
            for (size_t k = 0; k < tokens; ++k) {
                const double v = M[i * tokens + k];
                for (size_t j = 0; j < tokens; ++j) next[i * tokens + j] += v * R[k * tokens + j];
            }
        R.swap(next);
    }
    RelevanceMap map;
    map.grid_side = grid_side;
    map.target_class = target_class;
    map.values.assign(R.begin() + 1, R.begin() + tokens);  // class-token row, patch columns
    return map;
}

namespace detail {

inline RelevanceMap trace_to_map(const AttentionTrace& trace, const SpatialConfig& cfg,
                                 int target_class) {
    std::vector<std::vector<double>> abars;
    for (const auto& layer : trace.layers) abars.push_back(gradient_weighted_abar(layer));
    const size_t tokens = cfg.num_patches() + 1;
    return rollout(abars, tokens, cfg.image_size / cfg.patch_size, target_class);
}

}  // namespace detail

// One relevance map per frame of the video, from a single forward/backward
// pass seeded at the target-class logit.
inline std::vector<RelevanceMap> video_relevance_maps(PainModel& model,
                                                      const std::vector<Tensor>& frames,
                                                      int target_class) {
    if (target_class < 0 || static_cast<size_t>(target_class) >= model.temporal_cfg.num_classes)
        throw std::invalid_argument("video_relevance_maps: invalid target class " +
                                    std::to_string(target_class));
    model.zero_grads();
    std::vector<AttentionTrace> traces;
    Rng rng(0);
    Tensor logits = model.forward_video(frames, false, rng, &traces);
    Tensor target = slice_cols(reshape(logits, {1, logits.size()}),
                               static_cast<size_t>(target_class), target_class + 1);
    backward(sum_all(target));
    std::vector<RelevanceMap> maps;
    for (const auto& trace : traces)
        maps.push_back(detail::trace_to_map(trace, model.spatial_cfg, target_class));
    model.zero_grads();
    return maps;
}

// Mean relevance over all frames of a video.
inline RelevanceMap mean_relevance_map(const std::vector<RelevanceMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("mean_relevance_map: no maps");
    RelevanceMap out = maps[0];
    for (size_t m = 1; m < maps.size(); ++m)
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += maps[m].values[i];
    for (auto& v : out.values) v /= maps.size();
    return out;
}

// Single-frame diagnostic map: the frame is treated as a one-frame video
// (the latent-bottleneck size check does not apply to this path).
inline RelevanceMap relevance_map(PainModel& model, const Tensor& frame, int target_class) {
    if (target_class < 0 || static_cast<size_t>(target_class) >= model.temporal_cfg.num_classes)
        throw std::invalid_argument("relevance_map: invalid target class " +
                                    std::to_string(target_class));
    model.zero_grads();
    AttentionTrace trace;
    Rng rng(0);
    Tensor feature = spatial_forward(frame, model.spatial_cfg, model.spatial, false, rng, &trace);
    VideoFeature vf = concat_frame_features({feature});
    Tensor logits = detail::temporal_forward_impl(vf, model.temporal_cfg, model.temporal, false, rng);
    Tensor target = slice_cols(reshape(logits, {1, logits.size()}),
                               static_cast<size_t>(target_class), target_class + 1);
    backward(sum_all(target));
    RelevanceMap map = detail::trace_to_map(trace, model.spatial_cfg, target_class);
    model.zero_grads();
    return map;
}

// Writes the map as a P5 graymap at patch-grid resolution plus an upscaled
// variant at frame resolution next to it (<stem>_overlay.pgm).
inline void export_map_image(const RelevanceMap& map, const fs::path& path, size_t image_size) {
    const size_t g = map.grid_side;
    if (g * g != map.values.size())
        throw std::invalid_argument("export_map_image: grid does not match value count");
    write_pgm(map.values, g, g, path);
    const size_t scale = image_size / g;
    std::vector<double> up(image_size * image_size);
    for (size_t y = 0; y < image_size; ++y)
        for (size_t x = 0; x < image_size; ++x)
            up[y * image_size + x] = map.values[std::min(y / scale, g - 1) * g + std::min(x / scale, g - 1)];
    fs::path overlay = path.parent_path() / (path.stem().string() + "_overlay.pgm");
    write_pgm(up, image_size, image_size, overlay);
}

}  // namespace paintnt
