#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/rng.hpp"
#include "paintnt/tensor.hpp"

namespace paintnt {

namespace fs = std::filesystem;

// One labeled video: frames in [0,1], pain level 0..4, subject id.
// hotspot_* carry the synthetic generator's blob center (-1 if unknown).
struct VideoSample {
    std::vector<Tensor> frames;  // each [H x W x 3]
    int label = 0;
    int subject_id = 0;
    int hotspot_row = -1;
    int hotspot_col = -1;

    size_t frame_count() const { return frames.size(); }
};

struct DatasetManifest {
    std::vector<VideoSample> samples;
    size_t subjects = 0;
    size_t per_class_per_subject = 0;
};

// ---------------------------------------------------------------------------
// Portable pixmap I/O (P6 color frames, P5 gray maps)
// ---------------------------------------------------------------------------

inline void write_ppm(const Tensor& frame, const fs::path& path) {
    if (frame.rank() != 3 || frame.shape()[2] != 3)
        throw std::invalid_argument("write_ppm: frame must be [H x W x 3]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path.string());
    const size_t H = frame.shape()[0], W = frame.shape()[1];
    out << "P6\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> bytes(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) {
        double v = std::clamp(frame.at(i), 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path.string());
}

inline Tensor read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_ppm: cannot open " + path.string());
    std::string magic;
    size_t W = 0, H = 0, maxval = 0;
    in >> magic;
    if (magic != "P6") throw std::runtime_error("read_ppm: " + path.string() + " is not a P6 pixmap");
    // Skip comments between header tokens.
    auto next_token = [&]() {
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
    };
    next_token(); in >> W;
    next_token(); in >> H;
    next_token(); in >> maxval;
    if (maxval != 255) throw std::runtime_error("read_ppm: " + path.string() + " maxval must be 255");
    in.get();  // single whitespace after header
    std::vector<unsigned char> bytes(W * H * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw std::runtime_error("read_ppm: truncated file " + path.string());
    Tensor frame({H, W, 3});
    for (size_t i = 0; i < bytes.size(); ++i) frame.at(i) = bytes[i] / 255.0;
    return frame;
}

inline void write_pgm(const std::vector<double>& values, size_t H, size_t W, const fs::path& path) {
    if (values.size() != H * W) throw std::invalid_argument("write_pgm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << W << " " << H << "\n255\n";
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    std::vector<unsigned char> bytes(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        // min==max convention: mid-gray
        double v = (hi > lo) ? (values[i] - lo) / (hi - lo) : 128.0 / 255.0;
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

inline std::vector<unsigned char> read_pgm(const fs::path& path, size_t& H, size_t& W) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path.string());
    std::string magic;
    size_t maxval = 0;
    in >> magic >> W >> H >> maxval;
    if (magic != "P5" || maxval != 255)
        throw std::runtime_error("read_pgm: " + path.string() + " is not an 8-bit P5 graymap");
    in.get();
    std::vector<unsigned char> bytes(W * H);
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw std::runtime_error("read_pgm: truncated file " + path.string());
    return bytes;
}

// ---------------------------------------------------------------------------
// Synthetic dataset (BioVid-shaped stand-in)
// ---------------------------------------------------------------------------

// Each video is background noise plus a Gaussian blob in a fixed face-like
// region whose amplitude ramps over time. Peak amplitude is strictly
// increasing in the pain label, so classes are separable in expectation and
// the blob patch gives interpretability a ground-truth hotspot.
inline DatasetManifest generate_synthetic(uint64_t seed, size_t subjects, size_t per_class,
                                          size_t frames, size_t size) {
    if (subjects < 1 || per_class < 1 || frames < 1 || size < 1)
        throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
    DatasetManifest m;
    m.subjects = subjects;
    m.per_class_per_subject = per_class;
    Rng root(seed);
    const double H = static_cast<double>(size);
    for (size_t subj = 0; subj < subjects; ++subj) {
        Rng subj_rng = root.split(subj);
        const double subject_offset = subj_rng.uniform(-0.04, 0.04);
        for (int label = 0; label < 5; ++label) {
            for (size_t rep = 0; rep < per_class; ++rep) {
                Rng vrng = subj_rng.split(static_cast<uint64_t>(label) * 1000 + rep);
                VideoSample vs;
                vs.label = label;
                vs.subject_id = static_cast<int>(subj);
                const double cy = 0.40 * H + vrng.uniform(-0.02, 0.02) * H;
                const double cx = 0.55 * H + vrng.uniform(-0.02, 0.02) * H;
                vs.hotspot_row = static_cast<int>(cy);
                vs.hotspot_col = static_cast<int>(cx);
                const double sigma = 0.09 * H;
                const double peak = 0.20 + 0.55 * (label / 4.0) + subject_offset +
                                    vrng.uniform(-0.02, 0.02);
                for (size_t t = 0; t < frames; ++t) {
                    const double ramp = frames == 1 ? 1.0 : static_cast<double>(t) / (frames - 1);
                    const double amp = peak * ramp;
                    Tensor frame({size, size, 3});
                    for (size_t y = 0; y < size; ++y)
                        for (size_t x = 0; x < size; ++x) {
                            const double dy = y - cy, dx = x - cx;
                            const double blob = amp * std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
                            for (size_t ch = 0; ch < 3; ++ch) {
                                const double noise = vrng.uniform(-0.05, 0.05);
                                frame.at((y * size + x) * 3 + ch) =
                                    std::clamp(0.30 + noise + blob, 0.0, 1.0);
                            }
                        }
                    vs.frames.push_back(std::move(frame));
                }
                m.samples.push_back(std::move(vs));
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Frame-directory dataset (manifest CSV + P6 frames)
// ---------------------------------------------------------------------------

inline void export_dataset(const DatasetManifest& m, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream manifest(out_dir / "manifest.csv");
    if (!manifest) throw std::runtime_error("export_dataset: cannot write manifest in " + out_dir.string());
    manifest << "dir,label,subject_id\n";
    for (size_t i = 0; i < m.samples.size(); ++i) {
        char dirname[32];
        std::snprintf(dirname, sizeof(dirname), "video_%05zu", i);
        fs::path vdir = out_dir / dirname;
        fs::create_directories(vdir);
        const auto& vs = m.samples[i];
        for (size_t f = 0; f < vs.frames.size(); ++f) {
            char fname[32];
            std::snprintf(fname, sizeof(fname), "frame_%05zu.ppm", f);
            write_ppm(vs.frames[f], vdir / fname);
        }
        manifest << dirname << "," << vs.label << "," << vs.subject_id << "\n";
    }
}

inline DatasetManifest load_frame_directory(const fs::path& manifest_file) {
    std::ifstream in(manifest_file);
    if (!in) throw std::runtime_error("load_frame_directory: cannot open manifest " + manifest_file.string());
    const fs::path base = manifest_file.parent_path();
    DatasetManifest m;
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.rfind("dir,", 0) != 0)
        throw std::runtime_error("load_frame_directory: manifest header must be 'dir,label,subject_id'");
    std::set<int> subject_ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string dir, label_s, subject_s;
        if (!std::getline(ss, dir, ',') || !std::getline(ss, label_s, ',') ||
            !std::getline(ss, subject_s))
            throw std::runtime_error("load_frame_directory: malformed manifest line: " + line);
        VideoSample vs;
        vs.label = std::stoi(label_s);
        if (vs.label < 0 || vs.label > 4)
            throw std::runtime_error("load_frame_directory: label " + label_s +
                                     " outside 0..4 in manifest line: " + line);
        vs.subject_id = std::stoi(subject_s);
        const fs::path vdir = base / dir;
        if (!fs::is_directory(vdir))
            throw std::runtime_error("load_frame_directory: missing video directory " + vdir.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(vdir))
            if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
        if (files.empty())
            throw std::runtime_error("load_frame_directory: no .ppm frames in " + vdir.string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) vs.frames.push_back(read_ppm(f));
        subject_ids.insert(vs.subject_id);
        m.samples.push_back(std::move(vs));
    }
    m.subjects = subject_ids.size();
    return m;
}

// ---------------------------------------------------------------------------
// Sampling and task construction
// ---------------------------------------------------------------------------

// Keeps frames 0, stride, 2*stride, ...: ceil(k/stride) frames.
inline VideoSample stride_sample(const VideoSample& sample, size_t stride) {
    if (stride < 1) throw std::invalid_argument("stride_sample: stride must be >= 1");
    VideoSample out = sample;
    out.frames.clear();
    for (size_t i = 0; i < sample.frames.size(); i += stride) out.frames.push_back(sample.frames[i]);
    return out;
}

inline DatasetManifest stride_sample(const DatasetManifest& m, size_t stride) {
    DatasetManifest out;
    out.subjects = m.subjects;
    out.per_class_per_subject = m.per_class_per_subject;
    for (const auto& s : m.samples) out.samples.push_back(stride_sample(s, stride));
    return out;
}

// Keeps labels {0, level}, relabeled to {0, 1}.
inline DatasetManifest make_binary_task(const DatasetManifest& m, int level) {
    if (level < 1 || level > 4)
        throw std::invalid_argument("make_binary_task: level must be in 1..4, got " +
                                    std::to_string(level));
    DatasetManifest out;
    out.subjects = m.subjects;
    out.per_class_per_subject = m.per_class_per_subject;
    bool has_np = false, has_level = false;
    for (const auto& s : m.samples) {
        if (s.label == 0 || s.label == level) {
            VideoSample vs = s;
            vs.label = (s.label == level) ? 1 : 0;
            has_np |= (s.label == 0);
            has_level |= (s.label == level);
            out.samples.push_back(std::move(vs));
        }
    }
    if (!has_np || !has_level)
        throw std::invalid_argument("make_binary_task: task requires both classes (NP and P" +
                                    std::to_string(level) + ")");
    return out;
}

}  // namespace paintnt
