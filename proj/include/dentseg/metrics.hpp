#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dentseg/errors.hpp"
#include "dentseg/tensor.hpp"

namespace dentseg {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

enum class Aggregation { micro, macro };

inline std::string aggregation_name(Aggregation a) { return a == Aggregation::micro ? "micro" : "macro"; }

struct MetricsReport {
    double accuracy = 0, dice = 0, iou = 0, recall = 0, precision = 0, f1 = 0, specificity = 0;
    ConfusionCounts counts;
    Aggregation aggregation = Aggregation::micro;
    double threshold = 0.5;
};

/// Binarize predictions at `threshold` (strictly greater) and count pixels;
/// class 1 is the mask, class 0 the background.
inline ConfusionCounts confusion_counts(const Tensor4& pred_prob, const Tensor4& gt,
                                        double threshold = 0.5) {
    require_same_shape(pred_prob, gt, "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred_prob.size(); ++i) {
        const bool p = pred_prob.data[i] > threshold;
        const bool y = gt.data[i] > 0.5f;
        if (p && y) ++c.tp;
        else if (p && !y) ++c.fp;
        else if (!p && y) ++c.fn;
        else ++c.tn;
    }
    return c;
}

/// The seven reported metrics from raw counts. Zero-denominator convention:
/// recall = 1 when tp+fn = 0, specificity = 1 when tn+fp = 0 (vacuously
/// satisfied); every other zero denominator yields 0.
inline MetricsReport metrics_from_counts(const ConfusionCounts& c) {
    if (c.total() == 0) throw EmptyCounts("no pixels evaluated");
    auto ratio0 = [](double num, double den) { return den > 0 ? num / den : 0.0; };
    MetricsReport r;
    r.counts = c;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    r.accuracy = (tp + tn) / static_cast<double>(c.total());
    r.precision = ratio0(tp, tp + fp);
    r.recall = (c.tp + c.fn == 0) ? 1.0 : tp / (tp + fn);
    r.specificity = (c.tn + c.fp == 0) ? 1.0 : tn / (tn + fp);
    r.dice = ratio0(2.0 * tp, 2.0 * tp + fp + fn);
    r.iou = ratio0(tp, tp + fp + fn);
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    // in the binary pixel setting dice and f1 are the same quantity; keep
    // them bit-identical rather than re-derived
    r.f1 = r.dice;
    return r;
}

/// Row-stochastic 2x2 matrix; rows = true class (0 then 1), columns =
/// predicted class.
inline std::array<std::array<double, 2>, 2> normalized_confusion_matrix(const ConfusionCounts& c) {
    if (c.tn + c.fp == 0) throw EmptyRow("true class 0 has no pixels");
    if (c.fn + c.tp == 0) throw EmptyRow("true class 1 has no pixels");
    const double row0 = static_cast<double>(c.tn + c.fp);
    const double row1 = static_cast<double>(c.fn + c.tp);
    return {{{c.tn / row0, c.fp / row0}, {c.fn / row1, c.tp / row1}}};
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j{{"accuracy", r.accuracy},
                     {"dice", r.dice},
                     {"iou", r.iou},
                     {"recall", r.recall},
                     {"precision", r.precision},
                     {"f1", r.f1},
                     {"specificity", r.specificity},
                     {"counts",
                      {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
                     {"threshold", r.threshold},
                     {"aggregation", aggregation_name(r.aggregation)}};
    if (r.counts.tn + r.counts.fp > 0 && r.counts.fn + r.counts.tp > 0) {
        const auto m = normalized_confusion_matrix(r.counts);
        j["normalized_confusion_matrix"] = {{m[0][0], m[0][1]}, {m[1][0], m[1][1]}};
    }
    return j;
}

inline void validate_metrics_json(const nlohmann::json& j) {
    static const char* kRequired[] = {"accuracy", "dice",      "iou",    "recall",
                                      "precision", "f1",       "specificity",
                                      "counts",    "threshold", "aggregation"};
    for (const char* key : kRequired)
        if (!j.contains(key)) throw SchemaError(std::string("metrics JSON missing '") + key + "'");
    for (const char* key : {"tp", "fp", "fn", "tn"})
        if (!j["counts"].contains(key))
            throw SchemaError(std::string("metrics JSON counts missing '") + key + "'");
}

} // namespace dentseg
