#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "paintnt/data.hpp"

namespace paintnt {

struct ConfusionMatrix {
    std::vector<std::vector<size_t>> counts;  // rows = true class, cols = predicted

    explicit ConfusionMatrix(size_t k = 0) : counts(k, std::vector<size_t>(k, 0)) {}
    size_t classes() const { return counts.size(); }
    void add(int truth, int predicted) { counts.at(truth).at(predicted)++; }
    size_t total() const {
        size_t t = 0;
        for (const auto& row : counts)
            for (size_t c : row) t += c;
        return t;
    }
};

struct MetricsReport {
    std::string task;
    double micro_accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// Micro accuracy plus unweighted per-class precision/recall/F1 means.
// Zero-denominator class metrics are defined as 0.
inline MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const size_t K = cm.classes();
    if (K == 0 || cm.total() == 0)
        throw std::invalid_argument("compute_metrics: empty confusion matrix");
    MetricsReport r;
    size_t trace = 0;
    for (size_t c = 0; c < K; ++c) {
        trace += cm.counts[c][c];
        size_t col = 0, row = 0;
        for (size_t i = 0; i < K; ++i) {
            col += cm.counts[i][c];
            row += cm.counts[c][i];
        }
        const double precision = col ? static_cast<double>(cm.counts[c][c]) / col : 0.0;
        const double recall = row ? static_cast<double>(cm.counts[c][c]) / row : 0.0;
        const double f1 = (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
        r.macro_precision += precision / K;
        r.macro_recall += recall / K;
        r.macro_f1 += f1 / K;
    }
    r.micro_accuracy = static_cast<double>(trace) / cm.total();
    return r;
}

// ---------------------------------------------------------------------------
// LOSO protocol
// ---------------------------------------------------------------------------

struct LosoFold {
    int test_subject;
    std::vector<size_t> train_indices;
    std::vector<size_t> test_indices;
};

inline std::vector<LosoFold> loso_folds(const DatasetManifest& m) {
    std::set<int> subjects;
    for (const auto& s : m.samples) subjects.insert(s.subject_id);
    if (subjects.size() < 2)
        throw std::invalid_argument("loso_folds: at least 2 subjects required, got " +
                                    std::to_string(subjects.size()));
    std::vector<LosoFold> folds;
    for (int subj : subjects) {
        LosoFold f;
        f.test_subject = subj;
        for (size_t i = 0; i < m.samples.size(); ++i)
            (m.samples[i].subject_id == subj ? f.test_indices : f.train_indices).push_back(i);
        folds.push_back(std::move(f));
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Task harness
// ---------------------------------------------------------------------------

enum class Task { NpP1, NpP2, NpP3, NpP4, MC };

inline const char* task_name(Task t) {
    switch (t) {
        case Task::NpP1: return "np-p1";
        case Task::NpP2: return "np-p2";
        case Task::NpP3: return "np-p3";
        case Task::NpP4: return "np-p4";
        case Task::MC: return "mc";
    }
    return "?";
}

inline Task parse_task(const std::string& s) {
    for (Task t : {Task::NpP1, Task::NpP2, Task::NpP3, Task::NpP4, Task::MC})
        if (s == task_name(t)) return t;
    throw std::invalid_argument("unknown task '" + s + "' (expected np-p1..np-p4 or mc)");
}

inline size_t task_classes(Task t) { return t == Task::MC ? 5 : 2; }

inline DatasetManifest task_dataset(const DatasetManifest& m, Task t) {
    switch (t) {
        case Task::NpP1: return make_binary_task(m, 1);
        case Task::NpP2: return make_binary_task(m, 2);
        case Task::NpP3: return make_binary_task(m, 3);
        case Task::NpP4: return make_binary_task(m, 4);
        case Task::MC: return m;
    }
    throw std::invalid_argument("task_dataset: bad task");
}

// Returns a predictor for the given training subset. Fold seed derives from
// the experiment seed xor the fold index.
using Predictor = std::function<int(const VideoSample&)>;
using TrainerFn = std::function<Predictor(const DatasetManifest&, uint64_t fold_seed)>;

struct TaskResult {
    ConfusionMatrix pooled{0};
    MetricsReport pooled_report;
    std::vector<MetricsReport> per_fold;
    double mean_fold_accuracy = 0.0;
};

inline TaskResult run_task(const DatasetManifest& manifest, Task task, const TrainerFn& trainer,
                           uint64_t seed = 0) {
    DatasetManifest data = task_dataset(manifest, task);
    const size_t K = task_classes(task);
    auto folds = loso_folds(data);
    TaskResult result;
    result.pooled = ConfusionMatrix(K);
    double fold_acc_sum = 0.0;
    for (size_t fi = 0; fi < folds.size(); ++fi) {
        const auto& fold = folds[fi];
        DatasetManifest train_set;
        train_set.subjects = data.subjects - 1;
        for (size_t i : fold.train_indices) train_set.samples.push_back(data.samples[i]);
        Predictor predict = trainer(train_set, seed ^ fi);
        ConfusionMatrix fold_cm(K);
        for (size_t i : fold.test_indices) {
            const int pred = predict(data.samples[i]);
            fold_cm.add(data.samples[i].label, pred);
            result.pooled.add(data.samples[i].label, pred);
        }
        MetricsReport fr = compute_metrics(fold_cm);
        fr.task = std::string(task_name(task)) + "/fold" + std::to_string(fold.test_subject);
        fold_acc_sum += fr.micro_accuracy;
        result.per_fold.push_back(std::move(fr));
    }
    result.pooled_report = compute_metrics(result.pooled);
    result.pooled_report.task = task_name(task);
    result.mean_fold_accuracy = fold_acc_sum / folds.size();
    return result;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline void write_report_csv(const MetricsReport& r, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_csv: cannot open " + path.string());
    out << "task,micro_accuracy,macro_precision,macro_recall,macro_f1\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", r.task.c_str(), r.micro_accuracy,
                  r.macro_precision, r.macro_recall, r.macro_f1);
    out << buf;
}

// Rows Acc/Pre/Rec/F1, one column per task.
inline void write_report_table(const std::map<Task, MetricsReport>& reports, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_report_table: cannot open " + path.string());
    out << "metric";
    for (const auto& [task, r] : reports) out << "," << task_name(task);
    out << "\n";
    auto row = [&](const char* name, auto getter) {
        out << name;
        char buf[32];
        for (const auto& [task, r] : reports) {
            std::snprintf(buf, sizeof(buf), ",%.6f", getter(r));
            out << buf;
        }
        out << "\n";
    };
    row("accuracy", [](const MetricsReport& r) { return r.micro_accuracy; });
    row("precision", [](const MetricsReport& r) { return r.macro_precision; });
    row("recall", [](const MetricsReport& r) { return r.macro_recall; });
    row("f1", [](const MetricsReport& r) { return r.macro_f1; });
}

}  // namespace paintnt
