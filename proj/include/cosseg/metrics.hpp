#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cosseg/traffic.hpp"

namespace cosseg {

// K x K counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::vector<CosLabel> classes;
    std::vector<int64_t> counts; // row-major K*K

    int64_t& at(int true_cls, int pred_cls);
    int64_t at(int true_cls, int pred_cls) const;
    size_t k() const { return classes.size(); }
    int64_t total() const;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::vector<CosLabel> classes);

// One-vs-rest metrics for a single class. When the class has no test samples
// (TP + FN = 0) recall is reported as 0 and fnr as 1 with no_support set.
struct ClassMetrics {
    CosLabel label;
    int64_t support = 0; // TP + FN, the number of test segments of this class
    double accuracy = 0; // (TP + TN) / total
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double fnr = 0;
    bool no_support = false;
};

ClassMetrics per_class_metrics(const ConfusionMatrix& cm, int cls);

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double overall_accuracy = 0; // trace / total
    double macro_f1 = 0;
    double weighted_f1 = 0; // support-weighted
    int64_t total = 0;
};

MetricsReport report(const ConfusionMatrix& cm);

// Aligned text table: label, test segments, accuracy %, FNR.
std::string report_to_table(const MetricsReport& rep);
std::string report_to_json(const MetricsReport& rep);

} // namespace cosseg
