#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/importance.hpp"
#include "thyroid/metrics.hpp"

using namespace thyroid;

namespace {

std::vector<int> all_rows(const EncodedMatrix& m) {
    std::vector<int> rows(static_cast<std::size_t>(m.rows()));
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

std::vector<int> range(int from, int to) {
    std::vector<int> rows;
    for (int i = from; i < to; ++i) rows.push_back(i);
    return rows;
}

ModelImportance table(std::string model, std::map<std::string, double> drops) {
    ModelImportance mi;
    mi.model = std::move(model);
    mi.drops = std::move(drops);
    return mi;
}

}  // namespace

TEST_CASE("shuffling leaves other columns untouched") {
    const auto m = encode(preprocess(synthesize(80, 41)));
    Eigen::MatrixXd x = m.values;
    const auto& cols = m.columns_of("composition");
    Rng rng(3);
    shuffle_variable(x, cols, rng);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const bool moved = std::find(cols.begin(), cols.end(), static_cast<int>(c)) != cols.end();
        if (moved) {
            // same multiset of values
            std::vector<double> a(m.values.col(c).data(), m.values.col(c).data() + m.rows());
            std::vector<double> b(x.col(c).data(), x.col(c).data() + x.rows());
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
        } else {
            CHECK(x.col(c) == m.values.col(c));
        }
    }
    // indicator columns move as one unit, so each row stays a valid one-hot pattern
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (int c : cols) s += x(i, c);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("a variable the model never uses has no importance") {
    const auto m = encode(preprocess(synthesize(400, 42)));
    auto blind = m;
    for (int c : m.columns_of("nodule_echogenicity")) blind.values.col(c).setZero();
    const auto rows = all_rows(m);
    const auto model = train(ModelSpec(ModelKind::gbm, 2), blind, range(0, m.rows() / 2));
    const auto test = range(m.rows() / 2, m.rows());
    const auto r = permutation_importance(model, m, test, "nodule_echogenicity", 20, 7);
    CHECK(std::abs(r.drop) < 0.02);
    CHECK(r.shuffled.size() == 20);
}

TEST_CASE("shuffle AUROCs match scoring explicitly shuffled copies") {
    const auto m = encode(preprocess(synthesize(150, 17)));
    const auto train_rows = range(0, m.rows() / 2);
    const auto test = range(m.rows() / 2, m.rows());
    const Eigen::MatrixXd x = gather_rows(m.values, test);
    std::vector<int> y;
    for (int r : test) y.push_back(m.labels[static_cast<std::size_t>(r)]);
    for (auto kind : kAllModelKinds) {
        ModelSpec spec(kind, 3);
        if (kind == ModelKind::random_forest) spec.set("n_trees", "60");
        const auto model = train(spec, m, train_rows);
        // Few levels (table lookup), one-hot groups and a continuous variable.
        for (const std::string v : {"calcification", "location", "nodule_echogenicity", "size"}) {
            const int repeats = 12;
            const auto got = permutation_importance(model, m, test, v, repeats, 29);
            REQUIRE(got.shuffled.size() == static_cast<std::size_t>(repeats));
            for (int r = 0; r < repeats; ++r) {
                Eigen::MatrixXd shuffled = x;
                Rng rng(29, {static_cast<std::uint64_t>(r)});
                shuffle_variable(shuffled, m.columns_of(v), rng);
                const Eigen::VectorXd s = model.score_matrix(shuffled);
                const double want = auroc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y);
                if (kind == ModelKind::random_forest) CHECK(got.shuffled[static_cast<std::size_t>(r)] == want);
                else CHECK(std::abs(got.shuffled[static_cast<std::size_t>(r)] - want) < 1e-9);
            }
        }
    }
}

TEST_CASE("shuffling a feature equal to the label halves a perfect AUROC") {
    std::vector<NoduleRecord> recs;
    for (int p = 0; p < 400; ++p) {
        auto r = fixtures::record(std::to_string(p), 0, 1.0 + 0.001 * p, p % 3 == 0);
        r.set(Variable::calcification, p % 3 == 0 ? 1 : 0);
        recs.push_back(r);
    }
    const auto m = encode(preprocess(fixtures::dataset(recs)));
    const auto model = train(ModelSpec(ModelKind::lda), m, all_rows(m));
    const auto r = permutation_importance(model, m, all_rows(m), "calcification", 50, 1);
    CHECK(r.baseline == doctest::Approx(1.0));
    CHECK(std::abs(r.drop - 0.5) < 0.04);
}

TEST_CASE("more shuffles shrink the spread of the estimate") {
    const auto m = encode(preprocess(synthesize(300, 43)));
    const auto model = train(ModelSpec(ModelKind::logistic), m, range(0, m.rows() / 2));
    const auto test = range(m.rows() / 2, m.rows());
    auto spread = [&](int repeats) {
        std::vector<double> drops;
        for (std::uint64_t s = 1; s <= 20; ++s)
            drops.push_back(permutation_importance(model, m, test, "calcification", repeats, s * 1000).drop);
        const double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / drops.size();
        double ss = 0.0;
        for (double d : drops) ss += (d - mean) * (d - mean);
        return std::pair{mean, ss / (drops.size() - 1)};
    };
    const auto [m1, v1] = spread(1);
    const auto [m50, v50] = spread(50);
    CHECK(m1 > 0.0);
    CHECK(m50 > 0.0);
    CHECK(v50 < v1);
}

TEST_CASE("permutation importance errors") {
    const auto m = encode(preprocess(synthesize(60, 44)));
    const auto model = train(ModelSpec(ModelKind::lda), m, all_rows(m));
    CHECK_THROWS_AS(permutation_importance(model, m, all_rows(m), "volume", 5, 1), ConfigError);
    std::vector<int> benign;
    for (int i = 0; i < m.rows(); ++i) {
        if (m.labels[static_cast<std::size_t>(i)] == 0) benign.push_back(i);
    }
    CHECK_THROWS_AS(permutation_importance(model, m, benign, "size", 5, 1), UndefinedMetricError);
    CHECK_THROWS_AS(permutation_importance(model, m, all_rows(m), "size", 0, 1), ConfigError);
}

TEST_CASE("normalization by the largest mean") {
    const auto t = aggregate_importance({table("lda", {{"size", 0.05}, {"calcification", 0.10}, {"shape", 0.02}})});
    REQUIRE(t.normalized);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].variable == "calcification");
    CHECK(*t.rows[0].normalized == 1.0);
    CHECK(*t.rows[1].normalized == doctest::Approx(0.5));
    CHECK(*t.rows[2].normalized == doctest::Approx(0.2));
    CHECK(t.rows[1].mean == 0.05);
}

TEST_CASE("averaging across models does not depend on their order") {
    std::vector<ModelImportance> in{
        table("gbm", {{"size", 0.1}, {"shape", -0.01}, {"margin", 0.3}}),
        table("lda", {{"size", 0.2}, {"shape", 0.02}, {"margin", 0.1}}),
        table("logistic", {{"size", 0.07}, {"shape", 0.0}, {"margin", 0.11}}),
    };
    const auto a = aggregate_importance(in);
    std::reverse(in.begin(), in.end());
    const auto b = aggregate_importance(in);
    std::rotate(in.begin(), in.begin() + 1, in.end());
    const auto c = aggregate_importance(in);
    CHECK(importance_to_csv(a) == importance_to_csv(b));
    CHECK(importance_to_json(a) == importance_to_json(c));
    CHECK(a.models == std::vector<std::string>{"gbm", "lda", "logistic"});
    CHECK(a.rows[0].variable == "margin");
    CHECK(a.rows[0].mean == doctest::Approx(0.17));
    for (const auto& r : a.rows) CHECK(*r.normalized <= 1.0);
}

TEST_CASE("no positive drop skips normalization") {
    const auto t = aggregate_importance({table("gbm", {{"size", -0.01}, {"shape", 0.0}})});
    CHECK_FALSE(t.normalized);
    for (const auto& r : t.rows) CHECK_FALSE(r.normalized);
    // ties keep predictor order: size precedes shape in the schema
    const auto tie = aggregate_importance({table("gbm", {{"shape", 0.0}, {"size", 0.0}})});
    CHECK(tie.rows[0].variable == "size");
}

TEST_CASE("aggregation rejects mismatched variable sets") {
    CHECK_THROWS_AS(aggregate_importance({table("a", {{"size", 0.1}}), table("b", {{"shape", 0.1}})}), ConfigError);
    CHECK_THROWS_AS(aggregate_importance({table("a", {{"size", 0.1}}), table("b", {{"size", 0.1}, {"shape", 0.1}})}),
                    ConfigError);
    CHECK_THROWS_AS(aggregate_importance({}), ConfigError);
}

TEST_CASE("figure export clips negative values") {
    const auto t = aggregate_importance({table("gbm", {{"size", 0.2}, {"shape", -0.05}})});
    const auto csv = importance_figure_csv(t);
    CHECK(csv.find("size,1.0000") != std::string::npos);
    CHECK(csv.find("shape,0.0000") != std::string::npos);
    CHECK(importance_to_csv(t).find("-0.05") != std::string::npos);
}

TEST_CASE("held-out importance finds the planted signal") {
    const auto m = encode(preprocess(synthesize(300, 45)));
    const auto plan = make_fold_plan(patients_of(m), 5, 1, 3);
    ImportanceOptions o;
    o.shuffle_reps = 5;
    const std::vector<ModelSpec> specs{ModelSpec(ModelKind::logistic), ModelSpec(ModelKind::lda)};
    const auto per_model = cv_importance(m, specs, plan, o);
    REQUIRE(per_model.size() == 2);
    CHECK(per_model[0].folds_used == 5);
    const auto t = aggregate_importance(per_model, o.shuffle_reps);
    std::vector<std::string> top;
    for (std::size_t i = 0; i < 4; ++i) top.push_back(t.rows[i].variable);
    std::sort(top.begin(), top.end());
    CHECK(top == std::vector<std::string>{"blood_flow", "calcification", "composition", "size"});

    ImportanceOptions wide = o;
    wide.workers = 3;
    CHECK(importance_to_csv(aggregate_importance(cv_importance(m, specs, plan, wide), 5)) == importance_to_csv(t));

    const auto both = run_cv_importance(m, specs, plan, CvOptions{}, wide);
    CHECK(cv_to_csv(both.cv) == cv_to_csv(run_cv(m, specs, plan)));
    CHECK(importance_to_csv(aggregate_importance(both.importance, 5)) == importance_to_csv(t));
}

TEST_CASE("calcified nodules only are malignant") {
    std::vector<NoduleRecord> recs;
    for (int p = 0; p < 10; ++p) {
        auto r = fixtures::record(std::to_string(p), 0, 1.0, p < 4);
        r.set(Variable::calcification, p < 4 ? 1 : 0);
        recs.push_back(r);
    }
    const auto p = malignancy_profile(fixtures::dataset(recs), "calcification");
    REQUIRE(p.levels.size() == 2);
    for (const auto& l : p.levels) {
        if (l.level == "present") CHECK(*l.percent == 100.0);
        else CHECK(*l.percent == 0.0);
    }
}

TEST_CASE("profiles agree with an independent group-by count") {
    const auto ds = synthesize(250, 46);
    const auto profiles = all_profiles(ds);
    std::size_t total = 0, malignant = 0;
    for (const auto& r : ds.records) {
        ++total;
        malignant += r.malignancy.value_or(0);
    }
    for (const auto& p : profiles) {
        const auto var = *find_variable(p.variable);
        std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
        for (const auto& r : ds.records) {
            std::string key;
            if (var == Variable::size) key = r.at(var) <= kDefaultSizeThreshold ? "<= 0.8" : "> 0.8";
            else key = std::string(info(var).levels[static_cast<std::size_t>(r.level(var))]);
            ++counts[key].first;
            counts[key].second += r.malignancy.value_or(0);
        }
        double weighted = 0.0;
        std::size_t n = 0;
        for (const auto& l : p.levels) {
            CHECK(l.count == counts[l.level].first);
            CHECK(l.malignant == counts[l.level].second);
            if (l.count == 0) {
                CHECK_FALSE(l.percent);
                continue;
            }
            CHECK(*l.percent == 100.0 * counts[l.level].second / counts[l.level].first);
            weighted += *l.percent * l.count;
            n += l.count;
        }
        CHECK(n == total);
        CHECK(weighted / n == doctest::Approx(100.0 * malignant / total).epsilon(1e-12));
    }
}

TEST_CASE("profile arguments") {
    const auto ds = synthesize(30, 47);
    CHECK_THROWS_AS(malignancy_profile(ds, "volume"), ConfigError);
    CHECK_THROWS_AS(malignancy_profile(ds, "age"), ConfigError);
    const auto bins = size_profile(ds, {0.5, 1.0, 2.0});
    CHECK(bins.levels.size() == 4);
    CHECK(bins.levels[1].level == "(0.5, 1]");
    CHECK_THROWS_AS(size_profile(ds, {1.0, 0.5}), ConfigError);
    CHECK(profiles_to_csv({malignancy_profile(ds, "size")}).rfind("variable,level,count,malignant,percent", 0) == 0);
}
