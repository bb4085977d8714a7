#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/data.hpp"
#include "paintnt/model.hpp"

namespace paintnt {

struct TrainConfig {
    size_t epochs = 200;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.1;
    size_t warmup_epochs = 5;
    double label_smoothing = 0.1;
    size_t batch_size = 8;
    uint64_t seed = 42;
    bool augment = true;
    // Interleave shuffled per-class sample lists so every mini-batch is close
    // to class-balanced. With near-constant features the batch class-imbalance
    // component otherwise dominates the gradient noise on small datasets.
    bool balanced_batches = false;

    void validate() const {
        if (warmup_epochs >= epochs)
            throw std::invalid_argument("train config: warmup_epochs must be < epochs");
        if (label_smoothing < 0.0 || label_smoothing >= 1.0)
            throw std::invalid_argument("train config: label_smoothing must be in [0, 1)");
        if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be >= 1");
    }
};

// Linear warmup to learning_rate, then cosine decay to 0.
inline double lr_at(size_t epoch, const TrainConfig& cfg) {
    if (epoch >= cfg.epochs)
        throw std::invalid_argument("lr_at: epoch " + std::to_string(epoch) + " out of range [0, " +
                                    std::to_string(cfg.epochs) + ")");
    if (epoch < cfg.warmup_epochs)
        return cfg.learning_rate * static_cast<double>(epoch + 1) / cfg.warmup_epochs;
    const double t = static_cast<double>(epoch - cfg.warmup_epochs) /
                     static_cast<double>(cfg.epochs - cfg.warmup_epochs);
    return std::max(0.0, cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * t)));
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

struct OptimizerState {
    struct Slot {
        std::vector<double> m, v;
    };
    std::map<std::string, Slot> slots;
    size_t step = 0;
};

// Decoupled weight decay applies to rank-2 weight matrices only; position
// tables, latents, class token, norms, and biases are exempt.
inline bool weight_decay_applies(const std::string& name, const Tensor& t) {
    if (t.rank() != 2) return false;
    if (name.find("pos.") != std::string::npos) return false;
    if (name.find("class_token") != std::string::npos) return false;
    if (name.find("latents") != std::string::npos) return false;
    return true;
}

inline void adamw_step(std::vector<std::pair<std::string, Tensor>>& params, OptimizerState& state,
                       double lr, const TrainConfig& cfg, double grad_scale = 1.0) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& [name, t] : params) {
        auto& slot = state.slots[name];
        if (slot.m.size() != t.size()) {
            slot.m.assign(t.size(), 0.0);
            slot.v.assign(t.size(), 0.0);
        }
        const bool decay = weight_decay_applies(name, t);
        const std::vector<double>& g = t.grad();
        for (size_t i = 0; i < t.size(); ++i) {
            const double gi = g[i] * grad_scale;
            if (!std::isfinite(gi))
                throw std::runtime_error("adamw_step: non-finite gradient in parameter " + name);
            slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * gi;
            slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = slot.m[i] / bc1;
            const double vhat = slot.v[i] / bc2;
            t.at(i) -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            if (decay) t.at(i) -= lr * cfg.weight_decay * t.at(i);
        }
    }
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// Label-smoothed cross entropy: target q = (1-eps)*onehot + eps/K.
inline Tensor cross_entropy_smoothed(const Tensor& logits, size_t label, double eps) {
    const size_t K = logits.size();
    if (label >= K)
        throw std::invalid_argument("cross_entropy_smoothed: label " + std::to_string(label) +
                                    " out of range for " + std::to_string(K) + " classes");
    if (eps < 0.0 || eps >= 1.0)
        throw std::invalid_argument("cross_entropy_smoothed: smoothing must be in [0, 1)");
    std::vector<double> q(K, eps / K);
    q[label] += 1.0 - eps;

    double mx = logits.at(0);
    for (size_t i = 1; i < K; ++i) mx = std::max(mx, logits.at(i));
    double lse = 0.0;
    for (size_t i = 0; i < K; ++i) lse += std::exp(logits.at(i) - mx);
    lse = mx + std::log(lse);
    double loss = 0.0;
    for (size_t i = 0; i < K; ++i) loss -= q[i] * (logits.at(i) - lse);

    auto ln = logits.node();
    std::vector<double> p(K);
    for (size_t i = 0; i < K; ++i) p[i] = std::exp(logits.at(i) - lse);
    return detail::make_result({1}, {loss}, {logits},
                               [ln, q = std::move(q), p = std::move(p)](detail::TensorNode& self) {
                                   ln->ensure_grad();
                                   for (size_t i = 0; i < p.size(); ++i)
                                       ln->grad[i] += self.grad[0] * (p[i] - q[i]);
                               });
}

// ---------------------------------------------------------------------------
// TrivialAugment-style augmentation
// ---------------------------------------------------------------------------

enum class AugOp { Identity, HFlip, Brightness, Contrast, Rotate, Translate, Count };

inline Tensor apply_augment(const Tensor& frame, AugOp op, double magnitude) {
    const size_t H = frame.shape()[0], W = frame.shape()[1];
    Tensor out({H, W, 3});
    auto px = [&](long y, long x, size_t ch) -> double {
        y = std::clamp<long>(y, 0, static_cast<long>(H) - 1);
        x = std::clamp<long>(x, 0, static_cast<long>(W) - 1);
        return frame.at((static_cast<size_t>(y) * W + static_cast<size_t>(x)) * 3 + ch);
    };
    switch (op) {
        case AugOp::Identity:
            return frame;
        case AugOp::HFlip:
            for (size_t y = 0; y < H; ++y)
                for (size_t x = 0; x < W; ++x)
                    for (size_t ch = 0; ch < 3; ++ch)
                        out.at((y * W + x) * 3 + ch) = frame.at((y * W + (W - 1 - x)) * 3 + ch);
            break;
        case AugOp::Brightness: {
            const double delta = 0.3 * magnitude;
            for (size_t i = 0; i < frame.size(); ++i)
                out.at(i) = std::clamp(frame.at(i) + delta, 0.0, 1.0);
            break;
        }
        case AugOp::Contrast: {
            const double factor = 1.0 + 0.5 * magnitude;
            for (size_t i = 0; i < frame.size(); ++i)
                out.at(i) = std::clamp(0.5 + (frame.at(i) - 0.5) * factor, 0.0, 1.0);
            break;
        }
        case AugOp::Rotate: {
            const double angle = magnitude * 15.0 * M_PI / 180.0;
            const double ca = std::cos(angle), sa = std::sin(angle);
            const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
            for (size_t y = 0; y < H; ++y)
                for (size_t x = 0; x < W; ++x) {
                    const double sy = cy + (y - cy) * ca - (x - cx) * sa;
                    const double sx = cx + (y - cy) * sa + (x - cx) * ca;
                    for (size_t ch = 0; ch < 3; ++ch)
                        out.at((y * W + x) * 3 + ch) = px(std::lround(sy), std::lround(sx), ch);
                }
            break;
        }
        case AugOp::Translate: {
            const long dy = std::lround(magnitude * 0.1 * H);
            const long dx = std::lround(magnitude * 0.1 * W);
            for (size_t y = 0; y < H; ++y)
                for (size_t x = 0; x < W; ++x)
                    for (size_t ch = 0; ch < 3; ++ch)
                        out.at((y * W + x) * 3 + ch) = px(static_cast<long>(y) - dy,
                                                          static_cast<long>(x) - dx, ch);
            break;
        }
        default:
            throw std::invalid_argument("apply_augment: bad op");
    }
    return out;
}

struct AugmentDraw {
    AugOp op;
    double magnitude;  // signed, in [-1, 1]
};

inline AugmentDraw draw_augment(Rng& rng) {
    AugmentDraw d;
    d.op = static_cast<AugOp>(rng.uniform_index(static_cast<uint64_t>(AugOp::Count)));
    d.magnitude = rng.uniform(-1.0, 1.0);
    return d;
}

// One uniformly chosen op at a uniformly chosen magnitude.
inline Tensor trivial_augment(const Tensor& frame, Rng& rng) {
    AugmentDraw d = draw_augment(rng);
    return apply_augment(frame, d.op, d.magnitude);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochLog {
    size_t epoch;
    double lr;
    double train_loss;
    double train_acc;
    double val_acc;  // -1 when no validation set
};

struct FitOptions {
    const DatasetManifest* val = nullptr;
    // Return false to stop training after this epoch.
    std::function<bool(const EpochLog&)> on_epoch;
};

struct FitResult {
    std::vector<EpochLog> log;
};

// Reorder `order` so the classes round-robin: first one sample of each label
// (in label order), then the next of each, and so on. Within a label the
// relative order of `order` is preserved, so a shuffled input yields shuffled
// balanced batches.
inline void interleave_by_label(const DatasetManifest& data, std::vector<size_t>& order) {
    std::map<int, std::vector<size_t>> by_label;
    for (size_t idx : order) by_label[data.samples[idx].label].push_back(idx);
    std::vector<const std::vector<size_t>*> lists;
    for (auto& [label, list] : by_label) lists.push_back(&list);
    std::vector<size_t> cursor(lists.size(), 0);
    const size_t total = order.size();
    order.clear();
    while (order.size() < total)
        for (size_t c = 0; c < lists.size(); ++c)
            if (cursor[c] < lists[c]->size()) order.push_back((*lists[c])[cursor[c]++]);
}

inline double dataset_accuracy(const PainModel& model, const DatasetManifest& data) {
    if (data.samples.empty()) return 0.0;
    size_t correct = 0;
    for (const auto& s : data.samples)
        if (model.predict(s.frames) == s.label) ++correct;
    return static_cast<double>(correct) / data.samples.size();
}

inline FitResult fit(PainModel& model, const DatasetManifest& train, const TrainConfig& cfg,
                     const FitOptions& opts = {}) {
    cfg.validate();
    if (train.samples.empty()) throw std::invalid_argument("fit: empty dataset");
    for (const auto& s : train.samples)
        if (s.label < 0 || static_cast<size_t>(s.label) >= model.temporal_cfg.num_classes)
            throw std::invalid_argument("fit: label " + std::to_string(s.label) +
                                        " outside num_classes " +
                                        std::to_string(model.temporal_cfg.num_classes));
    Rng root(cfg.seed);
    OptimizerState state;
    auto params = model.named_params();
    FitResult result;

    std::vector<size_t> order(train.samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = root.split(epoch);
        // Fisher-Yates shuffle with the epoch stream.
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[erng.uniform_index(i)]);
        if (cfg.balanced_batches) interleave_by_label(train, order);

        const double lr = lr_at(epoch, cfg);
        double loss_sum = 0.0;
        size_t correct = 0;
        size_t batch_count = 0;
        model.zero_grads();
        for (size_t idx = 0; idx < order.size(); ++idx) {
            const VideoSample& sample = train.samples[order[idx]];
            std::vector<Tensor> frames;
            frames.reserve(sample.frames.size());
            if (cfg.augment) {
                AugmentDraw aug = draw_augment(erng);
                for (const auto& f : sample.frames) frames.push_back(apply_augment(f, aug.op, aug.magnitude));
            } else {
                frames = sample.frames;
            }
            Tensor logits = model.forward_video(frames, true, erng);
            Tensor loss = cross_entropy_smoothed(logits, static_cast<size_t>(sample.label),
                                                 cfg.label_smoothing);
            loss_sum += loss.item();
            size_t argmax = 0;
            for (size_t i = 1; i < logits.size(); ++i)
                if (logits.at(i) > logits.at(argmax)) argmax = i;
            if (static_cast<int>(argmax) == sample.label) ++correct;
            backward(loss);
            ++batch_count;
            if (batch_count == cfg.batch_size || idx + 1 == order.size()) {
                adamw_step(params, state, lr, cfg, 1.0 / batch_count);
                model.zero_grads();
                batch_count = 0;
            }
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.train_loss = loss_sum / train.samples.size();
        log.train_acc = static_cast<double>(correct) / train.samples.size();
        log.val_acc = opts.val ? dataset_accuracy(model, *opts.val) : -1.0;
        result.log.push_back(log);
        if (opts.on_epoch && !opts.on_epoch(log)) break;
    }
    return result;
}

inline void write_train_log(const std::vector<EpochLog>& log, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_train_log: cannot open " + path.string());
    out << "epoch,lr,train_loss,train_acc,val_acc\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss,
                      e.train_acc, e.val_acc);
        out << buf;
    }
}

}  // namespace paintnt
