#include "thyroid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"

namespace thyroid {

std::string_view metric_name(Metric m) noexcept {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::auroc: return "auroc";
        case Metric::sensitivity: return "sensitivity";
        case Metric::specificity: return "specificity";
        case Metric::precision: return "precision";
        case Metric::f1: return "f1";
    }
    return "unknown";
}

std::optional<Metric> find_metric(std::string_view name) noexcept {
    for (auto m : {Metric::accuracy, Metric::auroc, Metric::sensitivity, Metric::specificity, Metric::precision,
                   Metric::f1}) {
        if (metric_name(m) == name) return m;
    }
    return std::nullopt;
}

std::optional<double> MetricSet::get(Metric m) const noexcept {
    switch (m) {
        case Metric::accuracy: return accuracy;
        case Metric::auroc: return auroc;
        case Metric::sensitivity: return sensitivity;
        case Metric::specificity: return specificity;
        case Metric::precision: return precision;
        case Metric::f1: return f1;
    }
    return std::nullopt;
}

void MetricSet::set(Metric m, std::optional<double> value) noexcept {
    switch (m) {
        case Metric::accuracy: accuracy = value; break;
        case Metric::auroc: auroc = value; break;
        case Metric::sensitivity: sensitivity = value; break;
        case Metric::specificity: specificity = value; break;
        case Metric::precision: precision = value; break;
        case Metric::f1: f1 = value; break;
    }
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw InputError("confusion: predicted has " + std::to_string(predicted.size()) + " entries, truth has " +
                         std::to_string(truth.size()));
    if (truth.empty()) throw InputError("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t) ++cm.tp;
        else if (p) ++cm.fp;
        else if (t) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

MetricSet metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw InputError("confusion matrix is empty");
    auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    MetricSet m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
    m.specificity = ratio(cm.tn, cm.tn + cm.fp);
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    if (m.precision && m.sensitivity && *m.precision + *m.sensitivity > 0.0)
        m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
    return m;
}

namespace {

struct Counts {
    double pos = 0, neg = 0;
};

void check_inputs(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size())
        throw InputError("ROC: " + std::to_string(scores.size()) + " scores for " + std::to_string(truth.size()) +
                         " labels");
    for (double s : scores) {
        if (std::isnan(s)) throw InputError("ROC: NaN score");
    }
}

// Score-descending order, ties adjacent.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

Counts class_counts(std::span<const int> truth) {
    Counts c;
    for (int t : truth) (t ? c.pos : c.neg) += 1.0;
    return c;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> truth) {
    check_inputs(scores, truth);
    const Counts total = class_counts(truth);
    if (total.pos == 0 || total.neg == 0) throw UndefinedMetricError("ROC curve needs both classes");

    const auto order = descending_order(scores);
    std::vector<RocPoint> curve{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) (truth[order[i]] ? tp : fp) += 1.0;
        curve.push_back({fp / total.neg, tp / total.pos, s});
    }
    return curve;
}

double auroc(std::span<const double> scores, std::span<const int> truth) {
    check_inputs(scores, truth);
    const Counts total = class_counts(truth);
    if (total.pos == 0 || total.neg == 0) throw UndefinedMetricError("AUROC needs both classes");

    // Trapezoids accumulated in count units (half-integers), scaled once.
    const auto order = descending_order(scores);
    double tp = 0, fp = 0, area = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        const double tp0 = tp, fp0 = fp;
        for (; i < order.size() && scores[order[i]] == s; ++i) (truth[order[i]] ? tp : fp) += 1.0;
        area += (fp - fp0) * (tp + tp0) * 0.5;
    }
    return area / (total.pos * total.neg);
}

std::optional<double> try_auroc(std::span<const double> scores, std::span<const int> truth) {
    const Counts total = class_counts(truth);
    if (total.pos == 0 || total.neg == 0) return std::nullopt;
    return auroc(scores, truth);
}

MetricSet evaluate_scores(std::span<const double> scores, std::span<const int> truth, double threshold) {
    std::vector<int> predicted(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= threshold ? 1 : 0;
    MetricSet m = metrics_from_confusion(confusion(predicted, truth));
    m.auroc = try_auroc(scores, truth);
    return m;
}

std::string roc_to_csv(std::span<const RocPoint> curve) {
    std::string out = "fpr,tpr\n";
    for (const auto& p : curve) out += shortest(p.fpr) + "," + shortest(p.tpr) + "\n";
    return out;
}

}  // namespace thyroid
