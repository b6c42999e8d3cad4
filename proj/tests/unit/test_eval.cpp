#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/rng.hpp"

using namespace thyroid;

namespace {

std::vector<std::string> ids(int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(std::to_string(i));
    return out;
}

std::vector<ModelSpec> quick_specs(std::uint64_t seed = 3) {
    std::vector<ModelSpec> specs;
    for (auto kind : kAllModelKinds) {
        ModelSpec s(kind, seed);
        if (kind == ModelKind::random_forest) s.set("n_trees", "25");
        if (kind == ModelKind::gbm) s.set("n_trees", "20");
        specs.push_back(s);
    }
    return specs;
}

}  // namespace

TEST_CASE("fold plan sizes") {
    const auto plan = make_fold_plan(ids(20), 10, 3, 1);
    for (int r = 0; r < 3; ++r) {
        for (int f = 0; f < 10; ++f) CHECK(plan.test_patients(r, f).size() == 2);
    }
    const auto big = make_fold_plan(ids(724), 10, 2, 9);
    for (int r = 0; r < 2; ++r) {
        std::size_t total = 0;
        for (int f = 0; f < 10; ++f) {
            const auto s = big.test_patients(r, f).size();
            CHECK((s == 72 || s == 73));
            total += s;
        }
        CHECK(total == 724);
    }
}

TEST_CASE("fold plans are seeded") {
    const auto a = make_fold_plan(ids(50), 5, 4, 77);
    const auto b = make_fold_plan(ids(50), 5, 4, 77);
    const auto c = make_fold_plan(ids(50), 5, 4, 78);
    bool differs = false;
    for (int r = 0; r < 4; ++r) {
        for (int f = 0; f < 5; ++f) {
            CHECK(a.test_patients(r, f) == b.test_patients(r, f));
            differs = differs || a.test_patients(r, f) != c.test_patients(r, f);
        }
    }
    CHECK(differs);
    // repetitions shuffle independently
    CHECK(a.test_patients(0, 0) != a.test_patients(1, 0));
    // input order does not matter
    auto shuffled = ids(50);
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(make_fold_plan(shuffled, 5, 4, 77).test_patients(2, 3) == a.test_patients(2, 3));
}

TEST_CASE("fold plan validation") {
    CHECK_THROWS_AS(make_fold_plan(ids(5), 10, 1, 1), ConfigError);
    CHECK_THROWS_AS(make_fold_plan(ids(5), 1, 1, 1), ConfigError);
    CHECK_THROWS_AS(make_fold_plan(ids(5), 2, 0, 1), ConfigError);
    CHECK_THROWS_AS(make_fold_plan(ids(5), 2, 1, 1).fold_of(0, "99"), ConfigError);
}

TEST_CASE("grouped folds keep patients whole and partition the rows") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = encode(preprocess(synthesize(100 + 50 * seed, seed)));
        const auto plan = make_fold_plan(patients_of(m), 10, 2, seed);
        for (int r = 0; r < 2; ++r) {
            std::vector<int> hits(static_cast<std::size_t>(m.rows()), 0);
            for (int f = 0; f < 10; ++f) {
                const auto rows = fold_rows(m, plan, r, f);
                std::set<std::string> tr, te;
                for (int i : rows.train) tr.insert(m.groups[static_cast<std::size_t>(i)]);
                for (int i : rows.test) te.insert(m.groups[static_cast<std::size_t>(i)]);
                for (const auto& p : te) CHECK(tr.count(p) == 0);
                CHECK(rows.train.size() + rows.test.size() == static_cast<std::size_t>(m.rows()));
                for (int i : rows.test) hits[static_cast<std::size_t>(i)]++;
            }
            for (int h : hits) CHECK(h == 1);
        }
    }
}

TEST_CASE("k = 2 on four patients predicts each nodule once per repetition") {
    std::vector<NoduleRecord> recs;
    int idx = 0;
    for (int p = 1; p <= 4; ++p) {
        for (int loc = 0; loc < 2; ++loc) recs.push_back(fixtures::record(std::to_string(p), loc, 1.0 + idx++, (p + loc) % 2));
    }
    const auto m = encode(preprocess(fixtures::dataset(recs)));
    const auto plan = make_fold_plan(patients_of(m), 2, 3, 5);
    const auto cv = run_cv(m, {ModelSpec(ModelKind::logistic)}, plan);
    const auto& mc = cv.model(ModelKind::logistic);
    REQUIRE(mc.scores.size() == 3);
    for (const auto& rep : mc.scores) CHECK(rep.size() == 8);
}

TEST_CASE("single-class training folds are flagged and the run continues") {
    std::vector<NoduleRecord> recs;
    for (int p = 1; p <= 4; ++p) recs.push_back(fixtures::record(std::to_string(p), 0, 1.0 + p, p == 1 ? 1 : 0));
    const auto m = encode(preprocess(fixtures::dataset(recs)));
    const auto plan = make_fold_plan(patients_of(m), 4, 1, 2);
    const auto cv = run_cv(m, quick_specs(), plan);
    for (const auto& mc : cv.models) {
        CHECK(mc.degenerate.size() == 1);
        CHECK(mc.per_rep.size() == 1);
    }
}

TEST_CASE("cross-validation output is independent of the worker count") {
    const auto m = encode(preprocess(synthesize(120, 31)));
    const auto plan = make_fold_plan(patients_of(m), 5, 2, 4);
    CvOptions one, many;
    many.workers = 4;
    const auto a = run_cv(m, quick_specs(), plan, one);
    const auto b = run_cv(m, quick_specs(), plan, many);
    CHECK(cv_to_csv(a) == cv_to_csv(b));
    CHECK(cv_to_json(a) == cv_to_json(b));
    for (std::size_t i = 0; i < a.models.size(); ++i) CHECK(a.models[i].scores == b.models[i].scores);
}

TEST_CASE("pooled and macro averaging") {
    const auto m = encode(preprocess(synthesize(150, 32)));
    const auto plan = make_fold_plan(patients_of(m), 5, 2, 4);
    CvOptions macro;
    macro.averaging = Averaging::macro;
    const auto a = run_cv(m, {ModelSpec(ModelKind::lda)}, plan);
    const auto b = run_cv(m, {ModelSpec(ModelKind::lda)}, plan, macro);
    // identical predictions, different aggregation
    CHECK(a.models[0].scores == b.models[0].scores);
    CHECK(*a.models[0].per_rep[0].accuracy != doctest::Approx(-1));
    CHECK(a.models[0].per_rep[0].auroc != b.models[0].per_rep[0].auroc);
    CHECK(find_averaging("macro") == Averaging::macro);
}

TEST_CASE("threshold applies to probability scores only") {
    CvOptions o;
    o.threshold = 0.3;
    CHECK(threshold_for(ModelKind::gbm, o) == 0.3);
    CHECK(threshold_for(ModelKind::svm_linear, o) == 0.0);
    CHECK(threshold_for(ModelKind::logistic, CvOptions{}) == 0.5);
}

TEST_CASE("identity bootstrap reproduces cross-validation") {
    const auto m = encode(preprocess(synthesize(100, 33)));
    const auto plan = make_fold_plan(patients_of(m), 5, 2, 8);
    const auto specs = quick_specs(12);
    const auto cv = run_cv(m, specs, plan);
    BootstrapOptions bo;
    bo.replicates = 1;
    bo.resample = Resample::identity;
    bo.keep_scores = true;
    const auto bs = run_bootstrap(m, specs, plan, bo);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        CHECK(bs.models[i].replicates == cv.models[i].per_rep);
        CHECK(bs.models[i].scores == cv.models[i].scores);
    }
}

TEST_CASE("bootstrap summaries") {
    const auto m = encode(preprocess(synthesize(100, 34)));
    const auto plan = make_fold_plan(patients_of(m), 5, 2, 8);
    for (auto mode : {Resample::rows, Resample::patients}) {
        BootstrapOptions bo;
        bo.replicates = 15;
        bo.resample = mode;
        bo.seed = 5;
        const auto bs = run_bootstrap(m, {ModelSpec(ModelKind::logistic), ModelSpec(ModelKind::lda)}, plan, bo);
        for (const auto& mb : bs.models) {
            CHECK(mb.replicates.size() == 30);
            for (const auto& [metric, d] : mb.summary) {
                if (!d.mean) continue;
                CHECK(*d.q025 <= *d.median);
                CHECK(*d.median <= *d.q975);
                CHECK(*d.q025 <= *d.mean);
                CHECK(*d.mean <= *d.q975);
            }
        }
        BootstrapOptions more = bo;
        more.cv.workers = 3;
        CHECK(bootstrap_to_csv(run_bootstrap(m, {ModelSpec(ModelKind::logistic)}, plan, more)) ==
              bootstrap_to_csv(run_bootstrap(m, {ModelSpec(ModelKind::logistic)}, plan, bo)));
    }
}

TEST_CASE("bootstrap redraws single-class resamples") {
    // one malignant nodule among many: row resamples often miss it
    std::vector<NoduleRecord> recs;
    for (int p = 1; p <= 30; ++p) recs.push_back(fixtures::record(std::to_string(p), 0, 1.0 + p, p <= 2 ? 1 : 0));
    const auto m = encode(preprocess(fixtures::dataset(recs)));
    const auto plan = make_fold_plan(patients_of(m), 3, 1, 1);
    BootstrapOptions bo;
    bo.replicates = 20;
    const auto bs = run_bootstrap(m, {ModelSpec(ModelKind::logistic)}, plan, bo);
    CHECK(bs.models[0].redraws > 0);
    BootstrapOptions capped = bo;
    capped.max_redraws = 0;
    CHECK_FALSE(run_bootstrap(m, {ModelSpec(ModelKind::logistic)}, plan, capped).models[0].degenerate.empty());
}

TEST_CASE("summarize_distribution") {
    const std::vector<double> constant(10, 0.7);
    const auto c = summarize_distribution(constant);
    CHECK(*c.q025 == 0.7);
    CHECK(*c.q975 == 0.7);
    CHECK(*c.sd == doctest::Approx(0.0));

    std::vector<double> seq;
    for (int i = 1; i <= 100; ++i) seq.push_back(i);
    CHECK(*summarize_distribution(seq).median == 50.5);

    Rng rng(44);
    std::vector<double> u;
    for (int i = 0; i < 10000; ++i) u.push_back(rng.uniform());
    CHECK(std::abs(*summarize_distribution(u).q975 - 0.975) <= 0.01);

    const std::vector<std::optional<double>> none{std::nullopt, std::nullopt};
    const auto d = summarize_distribution(none);
    CHECK_FALSE(d.mean.has_value());
    CHECK(d.undefined == 2);
    const std::vector<std::optional<double>> some{0.2, std::nullopt, 0.4};
    const auto e = summarize_distribution(some);
    CHECK(e.n == 2);
    CHECK(e.undefined == 1);
    CHECK(*e.mean == doctest::Approx(0.3));
}

TEST_CASE("report renderings") {
    const auto m = encode(preprocess(synthesize(80, 35)));
    const auto plan = make_fold_plan(patients_of(m), 4, 2, 8);
    const auto cv = run_cv(m, quick_specs(), plan);
    const auto table = cv_table_csv(cv);
    CHECK(table.rfind("model,accuracy,auroc,sensitivity,specificity,precision\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 7);
    CHECK(std::count(table.begin(), table.end(), '*') >= 5);
    const auto tidy = cv_to_csv(cv);
    CHECK(std::count(tidy.begin(), tidy.end(), '\n') == 1 + 6 * 6 * 4);
    CHECK(cv_reps_csv(cv).find("random_forest,1,auroc,") != std::string::npos);
    const auto j = nlohmann::json::parse(cv_to_json(cv));
    CHECK(j["models"].size() == 6);

    BootstrapOptions bo;
    bo.replicates = 3;
    const auto bs = run_bootstrap(m, {ModelSpec(ModelKind::lda)}, plan, bo);
    CHECK(bootstrap_table_csv(bs).rfind("model,metric,lower,upper,mean\nLDA,accuracy,", 0) == 0);
    const auto reps = bootstrap_replicates_csv(bs);
    CHECK(std::count(reps.begin(), reps.end(), '\n') == 1 + 3 * 2 * 6);
    CHECK(nlohmann::json::parse(bootstrap_to_json(bs))["replicates"] == 3);
}

TEST_CASE("planted signal is recovered by cross-validation" * doctest::timeout(300)) {
    const auto m = encode(preprocess(synthesize(1000, 36)));
    const auto plan = make_fold_plan(patients_of(m), 10, 1, 1);
    const auto cv = run_cv(m, {ModelSpec(ModelKind::random_forest, 2)}, plan);
    CHECK(*cv.models[0].mean.at(Metric::auroc).mean > 0.85);
}
