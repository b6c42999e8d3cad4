#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "thyroid/errors.hpp"
#include "thyroid/metrics.hpp"

using namespace thyroid;

namespace {

double pair_statistic(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            pairs += 1;
            if (s[i] > s[j]) wins += 1;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

struct Instance {
    std::vector<double> scores;
    std::vector<int> truth;
};

Instance random_instance(std::mt19937_64& gen, bool ties) {
    std::uniform_int_distribution<int> len(2, 50);
    const int n = len(gen);
    Instance inst;
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> coarse(0, 5);
    for (int i = 0; i < n; ++i) {
        inst.scores.push_back(ties ? coarse(gen) / 5.0 : u(gen));
        inst.truth.push_back(u(gen) < 0.5 ? 1 : 0);
    }
    inst.truth[0] = 1;
    inst.truth[1] = 0;
    return inst;
}

}  // namespace

TEST_CASE("confusion counts") {
    const std::vector<int> t{1, 1, 0};
    const auto cm = confusion(t, t);
    CHECK(cm == ConfusionMatrix{.tp = 2, .fp = 0, .tn = 1, .fn = 0});
    const std::vector<int> inv{0, 0, 1};
    const auto bad = confusion(inv, t);
    CHECK(bad.tp == 0);
    CHECK(bad.tn == 0);
    CHECK(bad.total() == 3);
    const std::vector<int> shorter{1};
    CHECK_THROWS_AS(confusion(shorter, t), InputError);
}

TEST_CASE("expert matrix metrics") {
    const auto m = metrics_from_confusion({.tp = 487, .fp = 71, .tn = 342, .fn = 331});
    CHECK(std::abs(*m.accuracy - 0.6734) <= 5e-4);
    CHECK(std::abs(*m.sensitivity - 0.5954) <= 5e-4);
    CHECK(std::abs(*m.specificity - 0.8281) <= 5e-4);
    CHECK(std::abs(*m.precision - 0.8728) <= 5e-4);
    CHECK(std::abs(*m.f1 - 0.7078) <= 5e-4);
    CHECK_FALSE(m.auroc.has_value());
}

TEST_CASE("f1 from precision and sensitivity") {
    const double p = 0.8321, s = 0.8629;
    CHECK(std::abs(2 * p * s / (p + s) - 0.8472) <= 5e-4);
}

TEST_CASE("undefined metrics are explicit") {
    const auto m = metrics_from_confusion({.tp = 0, .fp = 3, .tn = 7, .fn = 0});
    CHECK_FALSE(m.sensitivity.has_value());
    CHECK(*m.precision == 0.0);
    CHECK(*m.specificity == doctest::Approx(0.7));
    CHECK(*m.accuracy == doctest::Approx(0.7));
    CHECK_FALSE(m.f1.has_value());

    const auto none = metrics_from_confusion({.tp = 0, .fp = 0, .tn = 7, .fn = 0});
    CHECK_FALSE(none.sensitivity.has_value());
    CHECK_FALSE(none.precision.has_value());
}

TEST_CASE("metrics agree with direct recomputation and the prevalence identity") {
    std::mt19937_64 gen(11);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<int> pred, truth;
        const int n = 1 + static_cast<int>(gen() % 40);
        for (int i = 0; i < n; ++i) {
            pred.push_back(coin(gen));
            truth.push_back(coin(gen));
        }
        const auto m = metrics_from_confusion(confusion(pred, truth));
        double correct = 0, pos = 0, tp = 0, neg = 0, tn = 0, called = 0;
        for (int i = 0; i < n; ++i) {
            correct += pred[i] == truth[i];
            pos += truth[i];
            tp += pred[i] && truth[i];
            neg += !truth[i];
            tn += !pred[i] && !truth[i];
            called += pred[i];
        }
        CHECK(*m.accuracy == doctest::Approx(correct / n));
        if (pos > 0) CHECK(*m.sensitivity == doctest::Approx(tp / pos));
        else CHECK_FALSE(m.sensitivity);
        if (neg > 0) CHECK(*m.specificity == doctest::Approx(tn / neg));
        if (called > 0) CHECK(*m.precision == doctest::Approx(tp / called));
        else CHECK_FALSE(m.precision);
        if (pos > 0 && neg > 0) {
            const double prev = pos / n;
            CHECK(std::abs(*m.accuracy - (*m.sensitivity * prev + *m.specificity * (1 - prev))) < 1e-12);
        }
    }
}

TEST_CASE("roc curve shapes") {
    const std::vector<double> sep{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    const auto c = roc_curve(sep, y);
    REQUIRE(c.size() == 5);
    CHECK(c.front().fpr == 0.0);
    CHECK(c.front().tpr == 0.0);
    // the perfect curve passes through (0, 1)
    bool corner = false;
    for (const auto& p : c) corner = corner || (p.fpr == 0.0 && p.tpr == 1.0);
    CHECK(corner);
    CHECK(c.back().fpr == 1.0);
    CHECK(c.back().tpr == 1.0);

    const std::vector<double> flat{0.3, 0.3, 0.3, 0.3};
    const auto f = roc_curve(flat, y);
    REQUIRE(f.size() == 2);
    CHECK(f[1].fpr == 1.0);
    CHECK(f[1].tpr == 1.0);

    const std::vector<double> s{0.9, 0.6, 0.4, 0.2};
    const std::vector<int> t{1, 0, 1, 0};
    const auto g = roc_curve(s, t);
    CHECK(g[1].fpr == 0.0);
    CHECK(g[1].tpr == 0.5);
    CHECK(auroc(s, t) == 0.75);

    const std::vector<int> one{1, 1, 1, 1};
    CHECK_THROWS_AS(roc_curve(s, one), UndefinedMetricError);
    CHECK_FALSE(try_auroc(s, one).has_value());
    CHECK(roc_to_csv(g).rfind("fpr,tpr\n", 0) == 0);
}

TEST_CASE("auroc extremes") {
    const std::vector<int> y{1, 0, 1, 0};
    CHECK(auroc(std::vector<double>{0.9, 0.1, 0.8, 0.2}, y) == 1.0);
    CHECK(auroc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
    CHECK(auroc(std::vector<double>{0.1, 0.9, 0.2, 0.8}, y) == 0.0);
}

TEST_CASE("trapezoidal auroc equals the pair statistic") {
    std::mt19937_64 gen(2718);
    for (int i = 0; i < 1000; ++i) {
        const auto inst = random_instance(gen, i % 2 == 0);
        CHECK(std::abs(auroc(inst.scores, inst.truth) - pair_statistic(inst.scores, inst.truth)) <= 1e-12);
    }
}

TEST_CASE("auroc is rank-invariant and mirrors under negation") {
    std::mt19937_64 gen(31);
    for (int i = 0; i < 200; ++i) {
        const auto inst = random_instance(gen, false);
        const double a = auroc(inst.scores, inst.truth);
        std::vector<double> warped, neg;
        for (double s : inst.scores) {
            warped.push_back(std::exp(3 * s) + s * s * s);
            neg.push_back(-s);
        }
        CHECK(auroc(warped, inst.truth) == a);
        CHECK(std::abs(auroc(neg, inst.truth) - (1 - a)) <= 1e-12);
    }
}

TEST_CASE("evaluate_scores thresholds at >=") {
    const std::vector<double> s{0.5, 0.49, 0.7, 0.1};
    const std::vector<int> y{1, 0, 1, 0};
    const auto m = evaluate_scores(s, y, 0.5);
    CHECK(*m.accuracy == 1.0);
    CHECK(*m.auroc == 1.0);
    CHECK(metric_name(Metric::auroc) == "auroc");
    CHECK(find_metric("f1") == Metric::f1);
    CHECK_FALSE(find_metric("recall").has_value());
}
