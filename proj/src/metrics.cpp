#include "cosseg/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace cosseg {

int64_t& ConfusionMatrix::at(int true_cls, int pred_cls) {
    return counts[static_cast<size_t>(true_cls) * k() + static_cast<size_t>(pred_cls)];
}

int64_t ConfusionMatrix::at(int true_cls, int pred_cls) const {
    return counts[static_cast<size_t>(true_cls) * k() + static_cast<size_t>(pred_cls)];
}

int64_t ConfusionMatrix::total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          std::vector<CosLabel> classes) {
    if (y_true.size() != y_pred.size())
        throw Error("confusion: y_true has " + std::to_string(y_true.size()) +
                    " entries, y_pred has " + std::to_string(y_pred.size()));
    ConfusionMatrix cm;
    cm.classes = std::move(classes);
    cm.counts.assign(cm.k() * cm.k(), 0);
    const int k = static_cast<int>(cm.k());
    for (size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= k)
            throw Error("confusion: unknown true label " + std::to_string(y_true[i]) +
                        " at sample " + std::to_string(i));
        if (y_pred[i] < 0 || y_pred[i] >= k)
            throw Error("confusion: unknown predicted label " + std::to_string(y_pred[i]) +
                        " at sample " + std::to_string(i));
        cm.at(y_true[i], y_pred[i])++;
    }
    return cm;
}

ClassMetrics per_class_metrics(const ConfusionMatrix& cm, int cls) {
    if (cls < 0 || cls >= static_cast<int>(cm.k()))
        throw Error("per_class_metrics: class " + std::to_string(cls) + " not in matrix");

    const int k = static_cast<int>(cm.k());
    int64_t tp = cm.at(cls, cls);
    int64_t fn = 0, fp = 0;
    for (int j = 0; j < k; ++j) {
        if (j == cls) continue;
        fn += cm.at(cls, j);
        fp += cm.at(j, cls);
    }
    const int64_t total = cm.total();
    const int64_t tn = total - tp - fn - fp;

    ClassMetrics m;
    m.label = cm.classes[static_cast<size_t>(cls)];
    m.support = tp + fn;
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    if (m.support > 0) {
        m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
        m.fnr = static_cast<double>(fn) / static_cast<double>(m.support);
    } else {
        m.recall = 0.0;
        m.fnr = 1.0;
        m.no_support = true;
    }
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

MetricsReport report(const ConfusionMatrix& cm) {
    MetricsReport rep;
    rep.total = cm.total();
    if (rep.total < 1) throw Error("report: empty confusion matrix");

    int64_t trace = 0;
    double f1_sum = 0.0, f1_weighted = 0.0;
    int64_t support_sum = 0;
    for (int c = 0; c < static_cast<int>(cm.k()); ++c) {
        trace += cm.at(c, c);
        ClassMetrics m = per_class_metrics(cm, c);
        f1_sum += m.f1;
        f1_weighted += m.f1 * static_cast<double>(m.support);
        support_sum += m.support;
        rep.per_class.push_back(std::move(m));
    }
    rep.overall_accuracy = static_cast<double>(trace) / static_cast<double>(rep.total);
    rep.macro_f1 = f1_sum / static_cast<double>(cm.k());
    rep.weighted_f1 = support_sum > 0 ? f1_weighted / static_cast<double>(support_sum) : 0.0;
    return rep;
}

std::string report_to_table(const MetricsReport& rep) {
    size_t name_width = 5;
    for (const ClassMetrics& m : rep.per_class)
        name_width = std::max(name_width, m.label.name.size());

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_width) + 2) << "label"
       << std::right << std::setw(14) << "test segments" << std::setw(12) << "accuracy %"
       << std::setw(9) << "FNR" << '\n';
    os << std::fixed;
    for (const ClassMetrics& m : rep.per_class) {
        os << std::left << std::setw(static_cast<int>(name_width) + 2) << m.label.name
           << std::right << std::setw(14) << m.support
           << std::setw(12) << std::setprecision(2) << m.accuracy * 100.0
           << std::setw(9) << std::setprecision(4) << m.fnr;
        if (m.no_support) os << "  (no support)";
        os << '\n';
    }
    os << std::setprecision(2)
       << "overall accuracy " << rep.overall_accuracy * 100.0 << "%"
       << "  macro F1 " << rep.macro_f1 * 100.0 << "%"
       << "  weighted F1 " << rep.weighted_f1 * 100.0 << "%\n";
    return os.str();
}

std::string report_to_json(const MetricsReport& rep) {
    using nlohmann::json;
    json per_class = json::array();
    for (const ClassMetrics& m : rep.per_class) {
        per_class.push_back({{"label", m.label.name},
                             {"id", m.label.id},
                             {"support", m.support},
                             {"accuracy", m.accuracy},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"fnr", m.fnr},
                             {"no_support", m.no_support}});
    }
    json doc{{"overall_accuracy", rep.overall_accuracy},
             {"macro_f1", rep.macro_f1},
             {"weighted_f1", rep.weighted_f1},
             {"total", rep.total},
             {"per_class", per_class}};
    return doc.dump();
}

} // namespace cosseg
