#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thyroid {

// Malignant is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class Metric { accuracy, auroc, sensitivity, specificity, precision, f1 };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::accuracy,    Metric::auroc,     Metric::sensitivity,
                                                  Metric::specificity, Metric::precision, Metric::f1};
// The five measurements of a cross-validated model, in report order.
inline constexpr std::array<Metric, 5> kModelMetrics{Metric::accuracy, Metric::auroc, Metric::sensitivity,
                                                     Metric::specificity, Metric::precision};
// Model-vs-expert comparison columns; AUROC has no expert counterpart.
inline constexpr std::array<Metric, 5> kComparisonMetrics{Metric::accuracy, Metric::f1, Metric::sensitivity,
                                                          Metric::specificity, Metric::precision};

std::string_view metric_name(Metric m) noexcept;
std::optional<Metric> find_metric(std::string_view name) noexcept;

/// Metric values at full precision. An empty optional means the metric is
/// undefined (a zero denominator, or AUROC with a single class), never 0.
struct MetricSet {
    std::optional<double> accuracy, sensitivity, specificity, precision, f1, auroc;

    std::optional<double> get(Metric m) const noexcept;
    void set(Metric m, std::optional<double> value) noexcept;

    friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);

MetricSet metrics_from_confusion(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr;
    double tpr;
    double threshold;  // score at or above which rows are called positive
};

/// ROC curve from (0,0) to (1,1) with one vertex per distinct score; tied
/// scores move the curve as a single diagonal step. Throws
/// UndefinedMetricError unless both classes are present.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> truth);

/// Trapezoidal area under roc_curve. Equals the tie-corrected pairwise
/// statistic (#{pos > neg} + #{pos == neg} / 2) / (n_pos * n_neg).
double auroc(std::span<const double> scores, std::span<const int> truth);

// AUROC, or nullopt when only one class is present.
std::optional<double> try_auroc(std::span<const double> scores, std::span<const int> truth);

// Thresholded metrics plus AUROC from scores.
MetricSet evaluate_scores(std::span<const double> scores, std::span<const int> truth, double threshold);

// Two-column CSV (fpr,tpr) with a header.
std::string roc_to_csv(std::span<const RocPoint> curve);

}  // namespace thyroid
