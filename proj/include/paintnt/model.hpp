#pragma once

#include <string>
#include <utility>
#include <vector>

#include "paintnt/spatial.hpp"
#include "paintnt/temporal.hpp"

namespace paintnt {

// Full pipeline: per-frame spatial encoder feeding the temporal encoder.
struct PainModel {
    SpatialConfig spatial_cfg;
    TemporalConfig temporal_cfg;
    SpatialParams spatial;
    TemporalParams temporal;

    static PainModel init(const SpatialConfig& scfg, const TemporalConfig& tcfg, uint64_t seed) {
        scfg.validate();
        tcfg.validate();
        if (scfg.outer_dim != tcfg.feature_dim)
            throw std::invalid_argument("model: spatial outer_dim " + std::to_string(scfg.outer_dim) +
                                        " must equal temporal feature_dim " +
                                        std::to_string(tcfg.feature_dim));
        PainModel m;
        m.spatial_cfg = scfg;
        m.temporal_cfg = tcfg;
        Rng rng(seed);
        Rng srng = rng.split(1);
        Rng trng = rng.split(2);
        m.spatial = SpatialParams::init(scfg, srng);
        m.temporal = TemporalParams::init(tcfg, trng);
        return m;
    }

    template <typename Fn>
    void visit_params(Fn&& fn) {
        spatial.visit(fn);
        temporal.visit(fn);
    }

    std::vector<std::pair<std::string, Tensor>> named_params() {
        std::vector<std::pair<std::string, Tensor>> out;
        visit_params([&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
        return out;
    }

    size_t param_count() {
        size_t total = 0;
        visit_params([&](const std::string&, Tensor& t) { total += t.size(); });
        return total;
    }

    void zero_grads() {
        visit_params([](const std::string&, Tensor& t) { t.zero_grad(); });
    }

    Tensor forward_video(const std::vector<Tensor>& frames, bool training, Rng& rng,
                         std::vector<AttentionTrace>* traces = nullptr) const {
        std::vector<Tensor> features;
        features.reserve(frames.size());
        for (const auto& frame : frames) {
            AttentionTrace* trace = nullptr;
            if (traces) {
                traces->emplace_back();
                trace = &traces->back();
            }
            features.push_back(spatial_forward(frame, spatial_cfg, spatial, training, rng, trace));
        }
        VideoFeature vf = concat_frame_features(features);
        return temporal_forward(vf, temporal_cfg, temporal, training, rng);
    }

    // Argmax prediction, ties broken toward the lower class index.
    int predict(const std::vector<Tensor>& frames) const {
        NoGradGuard ng;
        Rng rng(0);
        Tensor logits = forward_video(frames, false, rng);
        int best = 0;
        for (size_t i = 1; i < logits.size(); ++i)
            if (logits.at(i) > logits.at(best)) best = static_cast<int>(i);
        return best;
    }
};

}  // namespace paintnt
