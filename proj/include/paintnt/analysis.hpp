#pragma once

#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/data.hpp"
#include "paintnt/model.hpp"
#include "paintnt/training.hpp"

namespace paintnt {

// ---------------------------------------------------------------------------
// Parameter accounting
// ---------------------------------------------------------------------------

struct CountBreakdown {
    std::vector<std::pair<std::string, long long>> entries;
    long long total = 0;

    void add(const std::string& name, long long v) {
        entries.emplace_back(name, v);
        total += v;
    }
};

// Analytic parameter count; must match the element total of a constructed
// model for the same configs.
inline CountBreakdown count_params_breakdown(const SpatialConfig& s, const TemporalConfig& t) {
    s.validate();
    t.validate();
    CountBreakdown b;
    const long long n = s.num_patches(), m = s.num_subpatches();
    const long long d = s.outer_dim, c = s.inner_dim;
    const long long P = s.patch_pixel_dim(), S = s.subpatch_pixel_dim();
    const long long ih = static_cast<long long>(c * s.mlp_ratio);
    const long long oh = static_cast<long long>(d * s.mlp_ratio);
    auto attn = [](long long q_in, long long kv_in, long long inner, long long out) {
        return q_in * inner + inner + 2 * (kv_in * inner + inner) + inner * out + out;
    };
    auto mlp = [](long long in, long long hidden, long long out) {
        return in * hidden + hidden + hidden * out + out;
    };
    b.add("spatial.embed", P * d + d + S * c + c);
    b.add("spatial.positions", (n + 1) * d + m * c + d);
    const long long block = 2 * c + attn(c, c, c, c) + 2 * c + mlp(c, ih, c)  // inner
                            + m * c * d + d                                    // injection
                            + 2 * d + attn(d, d, d, d) + 2 * d + mlp(d, oh, d);  // outer
    b.add("spatial.blocks", static_cast<long long>(s.depth) * block);
    b.add("spatial.final_norm", 2 * d);

    const long long D = t.latent_dim, N = t.latent_count;
    const long long th = static_cast<long long>(D * t.mlp_ratio);
    b.add("temporal.latents", N * D);
    b.add("temporal.input_proj", (d + static_cast<long long>(t.position_dim())) * D + D);
    b.add("temporal.cross", 2 * D + 2 * D + attn(D, D, D, D) + 2 * D + mlp(D, th, D));
    b.add("temporal.self_blocks",
          static_cast<long long>(t.self_blocks) * (2 * D + attn(D, D, D, D) + 2 * D + mlp(D, th, D)));
    b.add("temporal.head", 2 * D + D * static_cast<long long>(t.num_classes) + t.num_classes);
    return b;
}

inline long long count_params(const SpatialConfig& s, const TemporalConfig& t) {
    return count_params_breakdown(s, t).total;
}

// ---------------------------------------------------------------------------
// FLOP accounting (1 MAC = 2 FLOPs; per-element costs: add/scale 1,
// softmax 5, layernorm 8, gelu 15)
// ---------------------------------------------------------------------------

namespace detail {

constexpr long long kSoftmaxPerElem = 5;
constexpr long long kLayerNormPerElem = 8;
constexpr long long kGeluPerElem = 15;

inline long long matmul_flops(long long m, long long k, long long n) { return 2 * m * k * n; }

inline long long attention_flops(long long q_rows, long long kv_rows, long long q_in,
                                 long long kv_in, long long inner, long long out) {
    long long f = 0;
    f += matmul_flops(q_rows, q_in, inner) + q_rows * inner;        // Q projection + bias
    f += 2 * (matmul_flops(kv_rows, kv_in, inner) + kv_rows * inner);  // K, V
    f += matmul_flops(q_rows, inner, kv_rows) + q_rows * kv_rows;   // scores + scale
    f += kSoftmaxPerElem * q_rows * kv_rows;
    f += matmul_flops(q_rows, kv_rows, inner);                      // weights * V
    f += matmul_flops(q_rows, inner, out) + q_rows * out;           // output projection
    return f;
}

inline long long mlp_flops(long long rows, long long in, long long hidden, long long out) {
    return matmul_flops(rows, in, hidden) + rows * hidden + kGeluPerElem * rows * hidden +
           matmul_flops(rows, hidden, out) + rows * out;
}

inline long long layernorm_flops(long long rows, long long dim) {
    return kLayerNormPerElem * rows * dim;
}

}  // namespace detail

inline long long spatial_frame_flops(const SpatialConfig& s) {
    using namespace detail;
    s.validate();
    const long long n = s.num_patches(), m = s.num_subpatches();
    const long long d = s.outer_dim, c = s.inner_dim;
    const long long ih = static_cast<long long>(c * s.mlp_ratio);
    const long long oh = static_cast<long long>(d * s.mlp_ratio);
    long long f = 0;
    f += matmul_flops(n, s.patch_pixel_dim(), d) + n * d;      // patch embedding
    f += (n + 1) * d;                                          // patch positions
    f += matmul_flops(n * m, s.subpatch_pixel_dim(), c) + n * m * c;  // sub-patch embedding
    f += n * m * c;                                            // sub-patch positions
    for (size_t blk = 0; blk < s.depth; ++blk) {
        f += layernorm_flops(n * m, c) + n * attention_flops(m, m, c, c, c, c) + n * m * c;
        f += layernorm_flops(n * m, c) + mlp_flops(n * m, c, ih, c) + n * m * c;
        f += matmul_flops(n, m * c, d) + n * d + n * d;        // injection + residual add
        f += layernorm_flops(n + 1, d) + attention_flops(n + 1, n + 1, d, d, d, d) + (n + 1) * d;
        f += layernorm_flops(n + 1, d) + mlp_flops(n + 1, d, oh, d) + (n + 1) * d;
    }
    f += layernorm_flops(n + 1, d);
    return f;
}

inline long long temporal_flops(const TemporalConfig& t, long long M) {
    using namespace detail;
    t.validate();
    const long long D = t.latent_dim, N = t.latent_count;
    const long long th = static_cast<long long>(D * t.mlp_ratio);
    const long long pos = t.position_dim();
    long long f = 0;
    f += 10 * M * pos;                                                  // fourier features
    f += matmul_flops(M, t.feature_dim + pos, D) + M * D;               // input projection
    f += layernorm_flops(N, D) + layernorm_flops(M, D);
    f += attention_flops(N, M, D, D, D, D) + N * D;                     // cross attention
    f += layernorm_flops(N, D) + mlp_flops(N, D, th, D) + N * D;
    for (size_t blk = 0; blk < t.self_blocks; ++blk) {
        f += layernorm_flops(N, D) + attention_flops(N, N, D, D, D, D) + N * D;
        f += layernorm_flops(N, D) + mlp_flops(N, D, th, D) + N * D;
    }
    f += N * D + layernorm_flops(1, D) + matmul_flops(1, D, t.num_classes) + t.num_classes;
    return f;
}

// Cross-attention score matmul alone (the M-linear bottleneck term).
inline long long cross_attention_score_flops(const TemporalConfig& t, long long M) {
    return detail::matmul_flops(t.latent_count, t.latent_dim, M);
}

struct CostReport {
    long long total_params = 0;
    CountBreakdown params;
    long long frames = 0;
    long long flops_total = 0;
    CountBreakdown flops;
};

inline CostReport count_flops(const SpatialConfig& s, const TemporalConfig& t, long long M) {
    if (M < 1) throw std::invalid_argument("count_flops: M must be >= 1");
    CostReport r;
    r.params = count_params_breakdown(s, t);
    r.total_params = r.params.total;
    r.frames = M;
    r.flops.add("spatial(total over frames)", M * spatial_frame_flops(s));
    r.flops.add("temporal", temporal_flops(t, M));
    r.flops_total = r.flops.total;
    return r;
}

// ---------------------------------------------------------------------------
// Config file ([spatial]/[temporal]/[train], key = value, unknown keys fail)
// ---------------------------------------------------------------------------

struct FullConfig {
    SpatialConfig spatial;
    TemporalConfig temporal;
    TrainConfig train;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline FullConfig parse_config(std::istream& in) {
    FullConfig cfg;
    std::string section;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "spatial" && section != "temporal" && section != "train")
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        auto u = [&] { return static_cast<size_t>(std::stoull(val)); };
        auto f = [&] { return std::stod(val); };
        auto b = [&] {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad boolean");
        };
        bool known = true;
        if (section == "spatial") {
            auto& s = cfg.spatial;
            if (key == "image_size") s.image_size = u();
            else if (key == "patch_size") s.patch_size = u();
            else if (key == "subpatch_size") s.subpatch_size = u();
            else if (key == "outer_dim") s.outer_dim = u();
            else if (key == "inner_dim") s.inner_dim = u();
            else if (key == "depth") s.depth = u();
            else if (key == "outer_heads") s.outer_heads = u();
            else if (key == "inner_heads") s.inner_heads = u();
            else if (key == "mlp_ratio") s.mlp_ratio = f();
            else if (key == "drop_path_p") s.drop_path_p = f();
            else if (key == "use_class_token") s.use_class_token = b();
            else known = false;
        } else if (section == "temporal") {
            auto& tc = cfg.temporal;
            if (key == "latent_count") tc.latent_count = u();
            else if (key == "latent_dim") tc.latent_dim = u();
            else if (key == "cross_heads") tc.cross_heads = u();
            else if (key == "self_heads") tc.self_heads = u();
            else if (key == "self_blocks") tc.self_blocks = u();
            else if (key == "fourier_bands") tc.fourier_bands = u();
            else if (key == "mlp_ratio") tc.mlp_ratio = f();
            else if (key == "attn_dropout_p") tc.attn_dropout_p = f();
            else if (key == "num_classes") tc.num_classes = u();
            else if (key == "max_frames") tc.max_frames = u();
            else known = false;
        } else if (section == "train") {
            auto& tr = cfg.train;
            if (key == "epochs") tr.epochs = u();
            else if (key == "learning_rate") tr.learning_rate = f();
            else if (key == "beta1") tr.beta1 = f();
            else if (key == "beta2") tr.beta2 = f();
            else if (key == "adam_eps") tr.adam_eps = f();
            else if (key == "weight_decay") tr.weight_decay = f();
            else if (key == "warmup_epochs") tr.warmup_epochs = u();
            else if (key == "label_smoothing") tr.label_smoothing = f();
            else if (key == "batch_size") tr.batch_size = u();
            else if (key == "seed") tr.seed = std::stoull(val);
            else if (key == "augment") tr.augment = b();
            else if (key == "balanced_batches") tr.balanced_batches = b();
            else known = false;
        } else {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": key outside a section");
        }
        if (!known)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                        key + "' in section [" + section + "]");
    }
    // Frame features feed the temporal module directly.
    cfg.temporal.feature_dim = cfg.spatial.outer_dim;
    return cfg;
}

inline FullConfig parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in);
}

inline std::string serialize_config(const FullConfig& c) {
    std::ostringstream os;
    os << "[spatial]\n";
    os << "image_size = " << c.spatial.image_size << "\n";
    os << "patch_size = " << c.spatial.patch_size << "\n";
    os << "subpatch_size = " << c.spatial.subpatch_size << "\n";
    os << "outer_dim = " << c.spatial.outer_dim << "\n";
    os << "inner_dim = " << c.spatial.inner_dim << "\n";
    os << "depth = " << c.spatial.depth << "\n";
    os << "outer_heads = " << c.spatial.outer_heads << "\n";
    os << "inner_heads = " << c.spatial.inner_heads << "\n";
    os << "mlp_ratio = " << c.spatial.mlp_ratio << "\n";
    os << "drop_path_p = " << c.spatial.drop_path_p << "\n";
    os << "use_class_token = " << (c.spatial.use_class_token ? "true" : "false") << "\n";
    os << "[temporal]\n";
    os << "latent_count = " << c.temporal.latent_count << "\n";
    os << "latent_dim = " << c.temporal.latent_dim << "\n";
    os << "cross_heads = " << c.temporal.cross_heads << "\n";
    os << "self_heads = " << c.temporal.self_heads << "\n";
    os << "self_blocks = " << c.temporal.self_blocks << "\n";
    os << "fourier_bands = " << c.temporal.fourier_bands << "\n";
    os << "mlp_ratio = " << c.temporal.mlp_ratio << "\n";
    os << "attn_dropout_p = " << c.temporal.attn_dropout_p << "\n";
    os << "num_classes = " << c.temporal.num_classes << "\n";
    os << "max_frames = " << c.temporal.max_frames << "\n";
    os << "[train]\n";
    os << "epochs = " << c.train.epochs << "\n";
    os << "learning_rate = " << c.train.learning_rate << "\n";
    os << "beta1 = " << c.train.beta1 << "\n";
    os << "beta2 = " << c.train.beta2 << "\n";
    os << "adam_eps = " << c.train.adam_eps << "\n";
    os << "weight_decay = " << c.train.weight_decay << "\n";
    os << "warmup_epochs = " << c.train.warmup_epochs << "\n";
    os << "label_smoothing = " << c.train.label_smoothing << "\n";
    os << "batch_size = " << c.train.batch_size << "\n";
    os << "seed = " << c.train.seed << "\n";
    os << "augment = " << (c.train.augment ? "true" : "false") << "\n";
    os << "balanced_batches = " << (c.train.balanced_batches ? "true" : "false") << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Checkpoint (magic, length-prefixed config text, named parameter records)
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'P', 'A', 'I', 'N', 'T', 'N', 'T', '1'};

inline void save_checkpoint(PainModel& model, const TrainConfig& train_cfg, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    out.write(kCheckpointMagic, 8);
    FullConfig cfg{model.spatial_cfg, model.temporal_cfg, train_cfg};
    const std::string text = serialize_config(cfg);
    const uint32_t text_len = static_cast<uint32_t>(text.size());
    out.write(reinterpret_cast<const char*>(&text_len), 4);
    out.write(text.data(), text.size());
    auto params = model.named_params();
    const uint32_t count = static_cast<uint32_t>(params.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (auto& [name, t] : params) {
        const uint32_t name_len = static_cast<uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&name_len), 4);
        out.write(name.data(), name.size());
        const uint32_t rank = static_cast<uint32_t>(t.rank());
        out.write(reinterpret_cast<const char*>(&rank), 4);
        for (size_t dim : t.shape()) {
            const uint64_t d = dim;
            out.write(reinterpret_cast<const char*>(&d), 8);
        }
        out.write(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(double));
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

struct LoadedCheckpoint {
    PainModel model;
    TrainConfig train_cfg;
};

inline LoadedCheckpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    uint32_t text_len = 0;
    in.read(reinterpret_cast<char*>(&text_len), 4);
    std::string text(text_len, '\0');
    in.read(text.data(), text_len);
    std::istringstream ts(text);
    FullConfig cfg = parse_config(ts);
    LoadedCheckpoint lc;
    lc.model = PainModel::init(cfg.spatial, cfg.temporal, 0);
    lc.train_cfg = cfg.train;
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    std::map<std::string, Tensor> by_name;
    lc.model.visit_params([&](const std::string& name, Tensor& t) { by_name.emplace(name, t); });
    if (count != by_name.size())
        throw std::runtime_error("load_checkpoint: parameter count mismatch (" +
                                 std::to_string(count) + " in file, " +
                                 std::to_string(by_name.size()) + " in model)");
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), 4);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 4);
        Shape shape(rank);
        for (uint32_t r = 0; r < rank; ++r) {
            uint64_t d = 0;
            in.read(reinterpret_cast<char*>(&d), 8);
            shape[r] = static_cast<size_t>(d);
        }
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("load_checkpoint: unknown parameter '" + name + "'");
        if (it->second.shape() != shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for '" + name + "'");
        in.read(reinterpret_cast<char*>(it->second.data().data()),
                it->second.size() * sizeof(double));
    }
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
    return lc;
}

// ---------------------------------------------------------------------------
// Inference benchmarking
// ---------------------------------------------------------------------------

struct BenchRow {
    size_t stride;
    size_t frames;
    double mean_runtime_s;
    double std_runtime_s;
    double accuracy;  // -1 when no labeled data given
};

// Wall-clock per-video inference at each stride; accuracy over the provided
// set when non-empty.
inline std::vector<BenchRow> bench_inference(const PainModel& model, const DatasetManifest& data,
                                             const std::vector<size_t>& strides, size_t runs) {
    if (data.samples.empty()) throw std::invalid_argument("bench_inference: empty dataset");
    if (runs < 1) throw std::invalid_argument("bench_inference: runs must be >= 1");
    std::vector<BenchRow> rows;
    for (size_t stride : strides) {
        VideoSample timing_sample = stride_sample(data.samples[0], stride);
        // warm-up
        model.predict(timing_sample.frames);
        std::vector<double> times;
        for (size_t r = 0; r < runs; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            model.predict(timing_sample.frames);
            auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= times.size();
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        const double sd = times.size() > 1 ? std::sqrt(var / (times.size() - 1)) : 0.0;
        size_t correct = 0;
        for (const auto& s : data.samples)
            if (model.predict(stride_sample(s, stride).frames) == s.label) ++correct;
        rows.push_back(BenchRow{stride, timing_sample.frame_count(), mean, sd,
                                static_cast<double>(correct) / data.samples.size()});
    }
    return rows;
}

inline void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << "stride,frames,mean_runtime_s,std_runtime_s,accuracy\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.6f,%.6f\n", r.stride, r.frames,
                      r.mean_runtime_s, r.std_runtime_s, r.accuracy);
        out << buf;
    }
}

}  // namespace paintnt
