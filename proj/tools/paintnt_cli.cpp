#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "paintnt/analysis.hpp"
#include "paintnt/evaluation.hpp"
#include "paintnt/interpretability.hpp"
#include "paintnt/training.hpp"

using namespace paintnt;

namespace {

DatasetManifest load_data_dir(const std::string& dir) {
    fs::path p(dir);
    if (fs::is_directory(p)) p /= "manifest.csv";
    return load_frame_directory(p);
}

std::vector<Tensor> load_video_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a video directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    if (files.empty()) throw std::runtime_error("no .ppm frames in " + dir);
    std::sort(files.begin(), files.end());
    std::vector<Tensor> frames;
    for (const auto& f : files) frames.push_back(read_ppm(f));
    return frames;
}

FullConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return FullConfig{};
    return parse_config_file(path);
}

// Adapts num_classes to the task and relabels the dataset.
DatasetManifest prepare_task_data(const DatasetManifest& data, Task task) {
    return task_dataset(data, task);
}

PainModel build_model(FullConfig& cfg, Task task, uint64_t seed) {
    cfg.temporal.num_classes = task_classes(task);
    cfg.temporal.feature_dim = cfg.spatial.outer_dim;
    return PainModel::init(cfg.spatial, cfg.temporal, seed);
}

void save_checkpoint_atomic(PainModel& model, const TrainConfig& tc, const fs::path& out) {
    fs::path tmp = out;
    tmp += ".tmp";
    save_checkpoint(model, tc, tmp);
    fs::rename(tmp, out);
}

std::vector<size_t> parse_strides(const std::string& s) {
    std::vector<size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
    if (out.empty()) throw std::runtime_error("empty stride list");
    return out;
}

void print_report(const MetricsReport& r, std::ostream& os) {
    os << "task,micro_accuracy,macro_precision,macro_recall,macro_f1\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", r.task.c_str(), r.micro_accuracy,
                  r.macro_precision, r.macro_recall, r.macro_f1);
    os << buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pain-estimation pipeline: synthesis, training, evaluation, analysis"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a synthetic labeled-video dataset");
    uint64_t synth_seed = 1;
    size_t synth_subjects = 2, synth_per_class = 1, synth_frames = 8, synth_size = 32;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--subjects", synth_subjects, "number of subjects");
    synth->add_option("--per-class", synth_per_class, "videos per class per subject");
    synth->add_option("--frames", synth_frames, "frames per video");
    synth->add_option("--size", synth_size, "frame side length in pixels");
    synth->add_option("--out", synth_out, "output directory")->required();

    // --- train ---
    auto* train = app.add_subcommand("train", "train a model on a frame-directory dataset");
    std::string train_data, train_task = "mc", train_config, train_out, train_log;
    size_t train_stride = 1;
    train->add_option("--data", train_data, "dataset directory (with manifest.csv)")->required();
    train->add_option("--task", train_task, "np-p1..np-p4 or mc");
    train->add_option("--config", train_config, "INI config file");
    train->add_option("--stride", train_stride, "frame sampling stride");
    train->add_option("--out", train_out, "checkpoint output path")->required();
    train->add_option("--log", train_log, "per-epoch CSV log path");

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_task = "mc", eval_out;
    size_t eval_stride = 1;
    eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--task", eval_task, "np-p1..np-p4 or mc");
    eval->add_option("--stride", eval_stride, "frame sampling stride");
    eval->add_option("--out", eval_out, "CSV output path (default: stdout)");

    // --- loso ---
    auto* loso = app.add_subcommand("loso", "leave-one-subject-out cross-validation");
    std::string loso_data, loso_task = "mc", loso_config, loso_out;
    size_t loso_stride = 1;
    uint64_t loso_seed = 0;
    loso->add_option("--data", loso_data, "dataset directory")->required();
    loso->add_option("--task", loso_task, "np-p1..np-p4 or mc");
    loso->add_option("--config", loso_config, "INI config file");
    loso->add_option("--stride", loso_stride, "frame sampling stride");
    loso->add_option("--seed", loso_seed, "experiment seed");
    loso->add_option("--out", loso_out, "report output directory")->required();

    // --- sweep-stride ---
    auto* sweep = app.add_subcommand("sweep-stride", "runtime/accuracy table across strides");
    std::string sweep_ckpt, sweep_data, sweep_strides = "1,2,3,4", sweep_out;
    size_t sweep_runs = 3;
    sweep->add_option("--ckpt", sweep_ckpt, "checkpoint path")->required();
    sweep->add_option("--data", sweep_data, "dataset directory")->required();
    sweep->add_option("--strides", sweep_strides, "comma-separated stride list");
    sweep->add_option("--runs", sweep_runs, "timed runs per stride");
    sweep->add_option("--out", sweep_out, "CSV output path (default: stdout)");

    // --- relevance ---
    auto* rel = app.add_subcommand("relevance", "relevance map for a video directory");
    std::string rel_ckpt, rel_video, rel_out;
    int rel_class = 0;
    rel->add_option("--ckpt", rel_ckpt, "checkpoint path")->required();
    rel->add_option("--video", rel_video, "directory of .ppm frames")->required();
    rel->add_option("--class", rel_class, "target class index")->required();
    rel->add_option("--out", rel_out, "output PGM path")->required();

    // --- count ---
    auto* count = app.add_subcommand("count", "parameter and FLOP accounting");
    std::string count_config;
    long long count_frames = 138;
    count->add_option("--config", count_config, "INI config file (default: built-in defaults)");
    count->add_option("--frames", count_frames, "frame count M for the FLOP total");

    // --- bench ---
    auto* bench = app.add_subcommand("bench", "inference wall-clock benchmark");
    std::string bench_ckpt, bench_data, bench_strides = "1,2,3,4";
    size_t bench_runs = 20;
    bench->add_option("--ckpt", bench_ckpt, "checkpoint path")->required();
    bench->add_option("--data", bench_data, "dataset directory")->required();
    bench->add_option("--strides", bench_strides, "comma-separated stride list");
    bench->add_option("--runs", bench_runs, "timed runs per stride");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            DatasetManifest m =
                generate_synthetic(synth_seed, synth_subjects, synth_per_class, synth_frames, synth_size);
            export_dataset(m, synth_out);
            std::printf("wrote %zu videos (%zu subjects) to %s\n", m.samples.size(), m.subjects,
                        synth_out.c_str());
        } else if (*train) {
            Task task = parse_task(train_task);
            FullConfig cfg = load_config_or_default(train_config);
            DatasetManifest data = prepare_task_data(load_data_dir(train_data), task);
            if (train_stride > 1) data = stride_sample(data, train_stride);
            PainModel model = build_model(cfg, task, cfg.train.seed);
            FitResult res = fit(model, data, cfg.train);
            if (!train_log.empty()) write_train_log(res.log, train_log);
            save_checkpoint_atomic(model, cfg.train, train_out);
            std::printf("trained %zu epochs on %zu videos; final loss %.4f acc %.4f; checkpoint %s\n",
                        res.log.size(), data.samples.size(), res.log.back().train_loss,
                        res.log.back().train_acc, train_out.c_str());
        } else if (*eval) {
            Task task = parse_task(eval_task);
            LoadedCheckpoint lc = load_checkpoint(eval_ckpt);
            DatasetManifest data = prepare_task_data(load_data_dir(eval_data), task);
            if (eval_stride > 1) data = stride_sample(data, eval_stride);
            ConfusionMatrix cm(task_classes(task));
            for (const auto& s : data.samples) cm.add(s.label, lc.model.predict(s.frames));
            MetricsReport r = compute_metrics(cm);
            r.task = task_name(task);
            if (eval_out.empty()) {
                print_report(r, std::cout);
            } else {
                write_report_csv(r, eval_out);
                std::printf("wrote %s\n", eval_out.c_str());
            }
        } else if (*loso) {
            Task task = parse_task(loso_task);
            FullConfig cfg = load_config_or_default(loso_config);
            DatasetManifest data = load_data_dir(loso_data);
            if (loso_stride > 1) data = stride_sample(data, loso_stride);
            TrainerFn trainer = [&](const DatasetManifest& train_set, uint64_t fold_seed) {
                FullConfig fold_cfg = cfg;
                fold_cfg.train.seed = fold_seed;
                auto model = std::make_shared<PainModel>(build_model(fold_cfg, task, fold_seed + 1));
                fit(*model, train_set, fold_cfg.train);
                return Predictor([model](const VideoSample& s) { return model->predict(s.frames); });
            };
            TaskResult result = run_task(data, task, trainer, loso_seed);
            fs::create_directories(loso_out);
            for (size_t i = 0; i < result.per_fold.size(); ++i)
                write_report_csv(result.per_fold[i],
                                 fs::path(loso_out) / ("fold" + std::to_string(i) + ".csv"));
            write_report_csv(result.pooled_report, fs::path(loso_out) / "pooled.csv");
            std::printf("%zu folds; pooled accuracy %.4f, mean fold accuracy %.4f; reports in %s\n",
                        result.per_fold.size(), result.pooled_report.micro_accuracy,
                        result.mean_fold_accuracy, loso_out.c_str());
        } else if (*sweep || *bench) {
            const std::string& ckpt = *sweep ? sweep_ckpt : bench_ckpt;
            const std::string& data_dir = *sweep ? sweep_data : bench_data;
            const std::string& strides_s = *sweep ? sweep_strides : bench_strides;
            const size_t runs = *sweep ? sweep_runs : bench_runs;
            LoadedCheckpoint lc = load_checkpoint(ckpt);
            DatasetManifest data = load_data_dir(data_dir);
            auto rows = bench_inference(lc.model, data, parse_strides(strides_s), runs);
            if (*sweep && !sweep_out.empty()) {
                std::ofstream out(sweep_out);
                if (!out) throw std::runtime_error("cannot open " + sweep_out);
                write_bench_csv(rows, out);
                std::printf("wrote %s\n", sweep_out.c_str());
            } else {
                write_bench_csv(rows, std::cout);
            }
        } else if (*rel) {
            LoadedCheckpoint lc = load_checkpoint(rel_ckpt);
            std::vector<Tensor> frames = load_video_dir(rel_video);
            auto maps = video_relevance_maps(lc.model, frames, rel_class);
            RelevanceMap mean = mean_relevance_map(maps);
            mean.values = mean.normalized();
            export_map_image(mean, rel_out, lc.model.spatial_cfg.image_size);
            std::printf("wrote %s (and overlay) for class %d over %zu frames\n", rel_out.c_str(),
                        rel_class, frames.size());
        } else if (*count) {
            FullConfig cfg = load_config_or_default(count_config);
            cfg.temporal.feature_dim = cfg.spatial.outer_dim;
            CostReport r = count_flops(cfg.spatial, cfg.temporal, count_frames);
            std::printf("parameters: %lld\n", r.total_params);
            for (const auto& [name, v] : r.params.entries) std::printf("  %-28s %12lld\n", name.c_str(), v);
            std::printf("flops at M=%lld: %lld (%.2f GFLOPs)\n", r.frames, r.flops_total,
                        r.flops_total / 1e9);
            for (const auto& [name, v] : r.flops.entries) std::printf("  %-28s %15lld\n", name.c_str(), v);
            const long long per_frame = spatial_frame_flops(cfg.spatial);
            std::printf("per-frame spatial flops: %lld (%.2f GFLOPs)\n", per_frame, per_frame / 1e9);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
