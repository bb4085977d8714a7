#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "paintnt/data.hpp"
#include "test_support.hpp"

using namespace paintnt;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("dataset size bookkeeping") {
    // 87 subjects x 5 classes x 20 videos = 8700 samples.
    const size_t subjects = 87, per_class = 20;
    CHECK(subjects * 5 * per_class == 8700);
    DatasetManifest m = generate_synthetic(1, 3, 2, 2, 8);
    CHECK(m.samples.size() == 3 * 5 * 2);
    CHECK(m.subjects == 3);
    CHECK(m.per_class_per_subject == 2);
    for (const auto& s : m.samples) {
        CHECK(s.frames.size() == 2);
        CHECK(s.label >= 0);
        CHECK(s.label <= 4);
        CHECK(s.hotspot_row >= 0);
        CHECK(s.hotspot_col >= 0);
    }
}

TEST_CASE("stride sampling keeps ceil(k/stride) frames, first frame always") {
    // Brute-force the retained index set over a grid of lengths and strides.
    for (size_t k = 1; k <= 200; ++k) {
        VideoSample s;
        for (size_t i = 0; i < k; ++i) {
            Tensor f({1, 1, 3});
            f.at(0) = static_cast<double>(i);
            s.frames.push_back(std::move(f));
        }
        for (size_t stride = 1; stride <= 8; ++stride) {
            VideoSample out = stride_sample(s, stride);
            const size_t expect = (k + stride - 1) / stride;
            REQUIRE(out.frames.size() == expect);
            for (size_t i = 0; i < expect; ++i) CHECK(out.frames[i].at(0) == static_cast<double>(i * stride));
        }
    }
    // The documented operating points.
    VideoSample s;
    s.frames.assign(138, Tensor({1, 1, 3}));
    CHECK(stride_sample(s, 1).frames.size() == 138);
    CHECK(stride_sample(s, 2).frames.size() == 69);
    CHECK(stride_sample(s, 3).frames.size() == 46);
    CHECK(stride_sample(s, 4).frames.size() == 35);
    CHECK_THROWS_AS(stride_sample(s, 0), std::invalid_argument);
}

TEST_CASE("binary task construction") {
    DatasetManifest m = generate_synthetic(2, 2, 2, 1, 8);
    // Full 87x20 geometry: 87*(20+20) = 3480 per binary task.
    CHECK(87 * (20 + 20) == 3480);
    for (int level = 1; level <= 4; ++level) {
        DatasetManifest b = make_binary_task(m, level);
        CHECK(b.samples.size() == 2 * 2 * 2);  // NP + P_level per subject
        for (const auto& s : b.samples) CHECK((s.label == 0 || s.label == 1));
        size_t pos = 0;
        for (const auto& s : b.samples) pos += s.label;
        CHECK(pos == b.samples.size() / 2);
    }
    CHECK_THROWS_AS(make_binary_task(m, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_binary_task(m, 5), std::invalid_argument);

    DatasetManifest only_np;
    VideoSample s;
    s.label = 0;
    only_np.samples.push_back(s);
    CHECK_THROWS_AS(make_binary_task(only_np, 3), std::invalid_argument);
}

TEST_CASE("ppm round trip is exact at 8-bit resolution") {
    Rng rng(107);
    Tensor frame({6, 5, 3});
    for (auto& v : frame.data()) v = std::lround(rng.uniform() * 255.0) / 255.0;
    fs::path dir = temp_dir("paintnt_ppm_test");
    write_ppm(frame, dir / "f.ppm");
    Tensor back = read_ppm(dir / "f.ppm");
    REQUIRE(back.shape() == frame.shape());
    for (size_t i = 0; i < frame.size(); ++i) CHECK(back.at(i) == doctest::Approx(frame.at(i)).epsilon(1e-12));
    CHECK_THROWS_AS(read_ppm(dir / "missing.ppm"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("pgm writes min-max normalized maps") {
    fs::path dir = temp_dir("paintnt_pgm_test");
    write_pgm({0.0, 0.5, 1.0, 0.25}, 2, 2, dir / "m.pgm");
    size_t H = 0, W = 0;
    auto bytes = read_pgm(dir / "m.pgm", H, W);
    REQUIRE(H == 2);
    REQUIRE(W == 2);
    CHECK(bytes[0] == 0);
    CHECK(bytes[1] == 128);
    CHECK(bytes[2] == 255);
    CHECK(bytes[3] == 64);
    // Constant map: mid-gray convention.
    write_pgm({3.0, 3.0, 3.0, 3.0}, 2, 2, dir / "c.pgm");
    bytes = read_pgm(dir / "c.pgm", H, W);
    for (auto b : bytes) CHECK(b == 128);
    fs::remove_all(dir);
}

TEST_CASE("export and reload a dataset losslessly") {
    DatasetManifest m = generate_synthetic(3, 2, 1, 3, 8);
    fs::path dir = temp_dir("paintnt_export_test");
    export_dataset(m, dir);
    DatasetManifest back = load_frame_directory(dir / "manifest.csv");
    REQUIRE(back.samples.size() == m.samples.size());
    CHECK(back.subjects == m.subjects);
    for (size_t i = 0; i < m.samples.size(); ++i) {
        CHECK(back.samples[i].label == m.samples[i].label);
        CHECK(back.samples[i].subject_id == m.samples[i].subject_id);
        REQUIRE(back.samples[i].frames.size() == m.samples[i].frames.size());
        for (size_t f = 0; f < m.samples[i].frames.size(); ++f) {
            const Tensor& a = m.samples[i].frames[f];
            const Tensor& b = back.samples[i].frames[f];
            for (size_t j = 0; j < a.size(); ++j)
                CHECK(std::abs(a.at(j) - b.at(j)) <= 0.5 / 255.0 + 1e-12);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("loader errors name the offending path or line") {
    fs::path dir = temp_dir("paintnt_loader_test");
    {
        std::ofstream manifest(dir / "manifest.csv");
        manifest << "dir,label,subject_id\nvideo_x,2,0\n";
    }
    try {
        load_frame_directory(dir / "manifest.csv");
        FAIL("expected throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("video_x") != std::string::npos);
    }
    {
        std::ofstream manifest(dir / "bad_label.csv");
        manifest << "dir,label,subject_id\nvideo_x,7,0\n";
    }
    CHECK_THROWS_AS(load_frame_directory(dir / "bad_label.csv"), std::runtime_error);
    {
        std::ofstream manifest(dir / "bad_header.csv");
        manifest << "directory;label\n";
    }
    CHECK_THROWS_AS(load_frame_directory(dir / "bad_header.csv"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("synthetic amplitude grows with the pain label") {
    DatasetManifest m = generate_synthetic(4, 4, 3, 6, 16);
    // Mean intensity of the final frame inside the hotspot, per class.
    std::vector<double> mean(5, 0.0);
    std::vector<size_t> count(5, 0);
    for (const auto& s : m.samples) {
        const Tensor& last = s.frames.back();
        const size_t size = last.shape()[0];
        double acc = 0.0;
        size_t n = 0;
        for (long dy = -1; dy <= 1; ++dy)
            for (long dx = -1; dx <= 1; ++dx) {
                long y = s.hotspot_row + dy, x = s.hotspot_col + dx;
                if (y < 0 || x < 0 || y >= static_cast<long>(size) || x >= static_cast<long>(size)) continue;
                for (size_t ch = 0; ch < 3; ++ch) acc += last.at((y * size + x) * 3 + ch);
                n += 3;
            }
        mean[s.label] += acc / n;
        ++count[s.label];
    }
    for (int c = 0; c < 5; ++c) mean[c] /= count[c];
    for (int c = 1; c < 5; ++c) CHECK(mean[c] > mean[c - 1]);
    // First frame carries no blob (ramp starts at zero).
    const Tensor& first = m.samples[0].frames.front();
    double lo = 1.0, hi = 0.0;
    for (size_t i = 0; i < first.size(); ++i) {
        lo = std::min(lo, first.at(i));
        hi = std::max(hi, first.at(i));
    }
    CHECK(lo >= 0.25 - 1e-12);
    CHECK(hi <= 0.35 + 1e-12);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
    DatasetManifest a = generate_synthetic(9, 2, 1, 2, 8);
    DatasetManifest b = generate_synthetic(9, 2, 1, 2, 8);
    DatasetManifest c = generate_synthetic(10, 2, 1, 2, 8);
    REQUIRE(a.samples.size() == b.samples.size());
    double diff_same = 0.0, diff_other = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i)
        for (size_t f = 0; f < a.samples[i].frames.size(); ++f)
            for (size_t j = 0; j < a.samples[i].frames[f].size(); ++j) {
                diff_same += std::abs(a.samples[i].frames[f].at(j) - b.samples[i].frames[f].at(j));
                diff_other += std::abs(a.samples[i].frames[f].at(j) - c.samples[i].frames[f].at(j));
            }
    CHECK(diff_same == 0.0);
    CHECK(diff_other > 0.0);
    CHECK_THROWS_AS(generate_synthetic(1, 0, 1, 1, 8), std::invalid_argument);
}
