#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "dentseg/trainer.hpp"

namespace dentseg {

/// Train-vs-validation accuracy line chart, one point per epoch.
inline void plot_accuracy_curves(const TrainingLog& log, const std::filesystem::path& out_png) {
    const int width = 900, height = 600, margin = 70;
    cv::Mat img(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
    const int px0 = margin, px1 = width - 30, py0 = height - margin, py1 = 30;

    double lo = 1.0, hi = 0.0;
    for (const auto& r : log.records) {
        lo = std::min({lo, r.train_acc, r.val_acc});
        hi = std::max({hi, r.train_acc, r.val_acc});
    }
    if (hi - lo < 1e-6) { lo -= 0.05; hi += 0.05; }
    const double pad = 0.05 * (hi - lo);
    lo = std::max(0.0, lo - pad);
    hi = std::min(1.0, hi + pad);

    const int n = static_cast<int>(log.records.size());
    auto xpix = [&](int i) {
        return n == 1 ? (px0 + px1) / 2 : px0 + (px1 - px0) * i / (n - 1);
    };
    auto ypix = [&](double acc) {
        return static_cast<int>(py0 - (py0 - py1) * (acc - lo) / (hi - lo));
    };

    cv::line(img, {px0, py0}, {px1, py0}, cv::Scalar(0, 0, 0));
    cv::line(img, {px0, py0}, {px0, py1}, cv::Scalar(0, 0, 0));
    for (int t = 0; t <= 5; ++t) {
        const double acc = lo + (hi - lo) * t / 5.0;
        const int y = ypix(acc);
        std::ostringstream lbl;
        lbl << std::fixed << std::setprecision(3) << acc;
        cv::line(img, {px0 - 4, y}, {px0, y}, cv::Scalar(0, 0, 0));
        cv::putText(img, lbl.str(), {6, y + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4, cv::Scalar(0, 0, 0));
    }
    cv::putText(img, "epoch", {(px0 + px1) / 2 - 20, height - 20}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0));

    const cv::Scalar train_color(180, 90, 0), val_color(0, 100, 220); // BGR
    auto draw_series = [&](bool val, const cv::Scalar& color) {
        cv::Point prev;
        for (int i = 0; i < n; ++i) {
            const auto& r = log.records[i];
            const cv::Point pt(xpix(i), ypix(val ? r.val_acc : r.train_acc));
            cv::circle(img, pt, 2, color, cv::FILLED);
            if (i > 0) cv::line(img, prev, pt, color, 1, cv::LINE_AA);
            prev = pt;
        }
    };
    draw_series(false, train_color);
    draw_series(true, val_color);
    cv::putText(img, "train accuracy", {px1 - 200, py1 + 14}, cv::FONT_HERSHEY_SIMPLEX, 0.5, train_color);
    cv::putText(img, "val accuracy", {px1 - 200, py1 + 34}, cv::FONT_HERSHEY_SIMPLEX, 0.5, val_color);

    if (!cv::imwrite(out_png.string(), img))
        throw DecodeError("cannot write '" + out_png.string() + "'");
}

/// 2x2 row-normalized confusion-matrix heatmap with per-cell value labels.
inline void plot_confusion_heatmap(const std::array<std::array<double, 2>, 2>& m,
                                   const std::filesystem::path& out_png) {
    const int cell = 220, margin = 90;
    const int size = 2 * cell + margin + 20;
    cv::Mat img(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
    const char* labels[2] = {"0", "1"};
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            const double v = m[r][c];
            // light-to-dark blue ramp
            const cv::Scalar fill(255 - 160 * v, 230 - 170 * v, 250 - 210 * v);
            const cv::Rect rect(margin + c * cell, margin + r * cell, cell, cell);
            cv::rectangle(img, rect, fill, cv::FILLED);
            cv::rectangle(img, rect, cv::Scalar(60, 60, 60), 1);
            std::ostringstream lbl;
            lbl << std::fixed << std::setprecision(2) << v;
            const cv::Scalar text = v > 0.6 ? cv::Scalar(255, 255, 255) : cv::Scalar(0, 0, 0);
            cv::putText(img, lbl.str(), {rect.x + cell / 2 - 30, rect.y + cell / 2 + 10},
                        cv::FONT_HERSHEY_SIMPLEX, 0.9, text, 2);
        }
        cv::putText(img, labels[r], {margin / 2, margin + r * cell + cell / 2},
                    cv::FONT_HERSHEY_SIMPLEX, 0.8, cv::Scalar(0, 0, 0), 2);
        cv::putText(img, labels[r], {margin + r * cell + cell / 2, margin - 20},
                    cv::FONT_HERSHEY_SIMPLEX, 0.8, cv::Scalar(0, 0, 0), 2);
    }
    cv::putText(img, "predicted", {margin + cell - 50, margin / 3}, cv::FONT_HERSHEY_SIMPLEX, 0.6,
                cv::Scalar(0, 0, 0));
    if (!cv::imwrite(out_png.string(), img))
        throw DecodeError("cannot write '" + out_png.string() + "'");
}

} // namespace dentseg
