#pragma once

#include <vector>

#include "dentseg/dataset.hpp"
#include "dentseg/metrics.hpp"
#include "dentseg/model.hpp"

namespace dentseg {

/// Evaluate a model over a set of preprocessed samples. Micro aggregation
/// pools confusion counts over every pixel of every sample and computes the
/// metrics once; macro averages per-sample metrics (counts still report the
/// pooled totals).
inline MetricsReport evaluate_samples(ModelGraph& model,
                                      const std::vector<PreprocessedSample>& samples,
                                      double threshold = 0.5,
                                      Aggregation aggregation = Aggregation::micro) {
    model.train_mode = false;
    ConfusionCounts pooled;
    MetricsReport macro_sum;
    for (const auto& s : samples) {
        const Tensor4 pred = model.forward(s.image);
        const ConfusionCounts c = confusion_counts(pred, s.mask, threshold);
        pooled += c;
        if (aggregation == Aggregation::macro) {
            const MetricsReport r = metrics_from_counts(c);
            macro_sum.accuracy += r.accuracy;
            macro_sum.dice += r.dice;
            macro_sum.iou += r.iou;
            macro_sum.recall += r.recall;
            macro_sum.precision += r.precision;
            macro_sum.f1 += r.f1;
            macro_sum.specificity += r.specificity;
        }
    }
    MetricsReport report;
    if (aggregation == Aggregation::micro) {
        report = metrics_from_counts(pooled);
    } else {
        const double n = static_cast<double>(samples.size());
        report.accuracy = macro_sum.accuracy / n;
        report.dice = macro_sum.dice / n;
        report.iou = macro_sum.iou / n;
        report.recall = macro_sum.recall / n;
        report.precision = macro_sum.precision / n;
        report.f1 = macro_sum.f1 / n;
        report.specificity = macro_sum.specificity / n;
        report.counts = pooled;
    }
    report.aggregation = aggregation;
    report.threshold = threshold;
    return report;
}

} // namespace dentseg
