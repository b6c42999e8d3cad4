#include "thyroid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "thyroid/data.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/parallel.hpp"
#include "thyroid/rng.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {

// ---------------------------------------------------------------------------
// Fold plans

FoldPlan::FoldPlan(std::vector<std::string> patients, int k, int reps, std::uint64_t seed)
    : k_(k), reps_(reps), seed_(seed), patients_(std::move(patients)) {
    std::sort(patients_.begin(), patients_.end(), [](const std::string& a, const std::string& b) {
        return patient_id_less(a, b);
    });
    patients_.erase(std::unique(patients_.begin(), patients_.end()), patients_.end());
    if (k < 2) throw ConfigError("fold count k must be at least 2");
    if (reps < 1) throw ConfigError("repetition count must be at least 1");
    if (static_cast<std::size_t>(k) > patients_.size())
        throw ConfigError("fold count k = " + std::to_string(k) + " exceeds the " + std::to_string(patients_.size()) +
                          " patients");

    const std::size_t n = patients_.size();
    fold_index_.assign(static_cast<std::size_t>(reps), std::vector<int>(n, 0));
    folds_.assign(static_cast<std::size_t>(reps), std::vector<std::vector<std::string>>(static_cast<std::size_t>(k)));
    for (int r = 0; r < reps; ++r) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(seed, {static_cast<std::uint64_t>(r)});
        rng.shuffle(order);
        auto& index = fold_index_[static_cast<std::size_t>(r)];
        for (std::size_t pos = 0; pos < n; ++pos) index[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
        for (std::size_t p = 0; p < n; ++p)
            folds_[static_cast<std::size_t>(r)][static_cast<std::size_t>(index[p])].push_back(patients_[p]);
    }
}

const std::vector<std::string>& FoldPlan::test_patients(int rep, int fold) const {
    return folds_.at(static_cast<std::size_t>(rep)).at(static_cast<std::size_t>(fold));
}

int FoldPlan::fold_of(int rep, const std::string& patient) const {
    const auto it = std::lower_bound(patients_.begin(), patients_.end(), patient,
                                     [](const std::string& a, const std::string& b) { return patient_id_less(a, b); });
    if (it == patients_.end() || *it != patient) throw ConfigError("patient '" + patient + "' is not in the fold plan");
    return fold_index_.at(static_cast<std::size_t>(rep))[static_cast<std::size_t>(it - patients_.begin())];
}

FoldPlan make_fold_plan(std::vector<std::string> patients, int k, int reps, std::uint64_t seed) {
    return FoldPlan(std::move(patients), k, reps, seed);
}

std::vector<std::string> patients_of(const EncodedMatrix& m) {
    std::vector<std::string> ids(m.groups.begin(), m.groups.end());
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) { return patient_id_less(a, b); });
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

FoldRows fold_rows(const EncodedMatrix& m, const FoldPlan& plan, int rep, int fold) {
    FoldRows out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const int f = plan.fold_of(rep, m.groups[static_cast<std::size_t>(r)]);
        (f == fold ? out.test : out.train).push_back(static_cast<int>(r));
    }
    std::set<std::string> test_patients;
    for (int r : out.test) test_patients.insert(m.groups[static_cast<std::size_t>(r)]);
    for (int r : out.train) {
        if (test_patients.count(m.groups[static_cast<std::size_t>(r)]))
            throw ComputationError("patient '" + m.groups[static_cast<std::size_t>(r)] +
                                   "' appears in both training and test rows");
    }
    return out;
}

std::string_view averaging_name(Averaging a) noexcept { return a == Averaging::pooled ? "pooled" : "macro"; }

std::optional<Averaging> find_averaging(std::string_view name) noexcept {
    if (name == "pooled") return Averaging::pooled;
    if (name == "macro") return Averaging::macro;
    return std::nullopt;
}

double threshold_for(ModelKind kind, const CvOptions& options) {
    if (!is_probabilistic(kind)) return 0.0;
    return options.threshold.value_or(0.5);
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace {

std::uint64_t fold_seed(const ModelSpec& spec, int rep, int fold) {
    return derive_seed(spec.seed(), {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(fold)});
}

// Splits of every (rep, fold), checked to partition the rows per repetition.
std::vector<std::vector<FoldRows>> all_splits(const EncodedMatrix& m, const FoldPlan& plan) {
    if (m.rows() == 0) throw InputError("cross-validation on an empty matrix");
    std::vector<std::vector<FoldRows>> splits(static_cast<std::size_t>(plan.reps()));
    for (int r = 0; r < plan.reps(); ++r) {
        std::vector<int> seen(static_cast<std::size_t>(m.rows()), 0);
        for (int f = 0; f < plan.k(); ++f) {
            auto rows = fold_rows(m, plan, r, f);
            for (int i : rows.test) seen[static_cast<std::size_t>(i)]++;
            splits[static_cast<std::size_t>(r)].push_back(std::move(rows));
        }
        if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
            throw ComputationError("test folds do not partition the rows in repetition " + std::to_string(r));
    }
    return splits;
}

std::vector<int> labels_of(const EncodedMatrix& m, std::span<const int> rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (int r : rows) y.push_back(m.labels[static_cast<std::size_t>(r)]);
    return y;
}

struct RepOutcome {
    MetricSet metrics;
    ConfusionMatrix confusion;
    std::vector<double> pooled;
};

std::optional<double> mean_defined(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

RepOutcome rep_outcome(const EncodedMatrix& m, const std::vector<FoldRows>& splits,
                       const std::vector<std::vector<double>>& fold_scores, double threshold, Averaging averaging) {
    RepOutcome out;
    out.pooled.assign(static_cast<std::size_t>(m.rows()), 0.0);
    for (std::size_t f = 0; f < splits.size(); ++f) {
        const auto& test = splits[f].test;
        for (std::size_t i = 0; i < test.size(); ++i) out.pooled[static_cast<std::size_t>(test[i])] = fold_scores[f][i];
    }
    out.confusion = confusion(classify(out.pooled, threshold), m.labels);
    if (averaging == Averaging::pooled) {
        out.metrics = evaluate_scores(out.pooled, m.labels, threshold);
        return out;
    }
    std::vector<MetricSet> per_fold;
    for (std::size_t f = 0; f < splits.size(); ++f) {
        const auto truth = labels_of(m, splits[f].test);
        per_fold.push_back(evaluate_scores(fold_scores[f], truth, threshold));
    }
    for (Metric metric : {Metric::accuracy, Metric::auroc, Metric::sensitivity, Metric::specificity,
                          Metric::precision, Metric::f1}) {
        std::vector<std::optional<double>> values;
        for (const auto& s : per_fold) values.push_back(s.get(metric));
        out.metrics.set(metric, mean_defined(values));
    }
    return out;
}


}  // namespace

// ---------------------------------------------------------------------------
// Cross-validation

MetricSet ModelCv::mean_set() const {
    MetricSet s;
    for (const auto& [metric, mm] : mean) s.set(metric, mm.mean);
    return s;
}

const ModelCv& CvResult::model(ModelKind kind) const {
    for (const auto& m : models) {
        if (m.spec.kind() == kind) return m;
    }
    throw ConfigError("model '" + std::string(kind_name(kind)) + "' was not cross-validated");
}

CvResult run_cv(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                const CvOptions& options) {
    if (specs.empty()) throw ConfigError("no models to cross-validate");
    const auto splits = all_splits(m, plan);
    const auto n_models = specs.size();
    const auto reps = static_cast<std::size_t>(plan.reps());
    const auto k = static_cast<std::size_t>(plan.k());

    // [model][rep][fold]
    std::vector<std::vector<std::vector<std::vector<double>>>> scores(
        n_models, std::vector<std::vector<std::vector<double>>>(reps, std::vector<std::vector<double>>(k)));
    std::vector<std::vector<std::vector<Diagnostics>>> diags(
        n_models, std::vector<std::vector<Diagnostics>>(reps, std::vector<Diagnostics>(k)));

    parallel_for(n_models * reps * k, options.workers, [&](std::size_t task) {
        const std::size_t mi = task / (reps * k);
        const std::size_t r = (task / k) % reps;
        const std::size_t f = task % k;
        const auto& split = splits[r][f];
        const auto spec = specs[mi].with_seed(fold_seed(specs[mi], static_cast<int>(r), static_cast<int>(f)));
        const auto model = train(spec, m, split.train);
        scores[mi][r][f] = score(model, m, split.test);
        diags[mi][r][f] = model.diagnostics();
        if (options.on_fold) options.on_fold({mi, static_cast<int>(r), static_cast<int>(f), model, split});
    });

    CvResult result;
    result.k = plan.k();
    result.reps = plan.reps();
    result.averaging = options.averaging;
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        ModelCv mc(specs[mi]);
        mc.threshold = threshold_for(specs[mi].kind(), options);
        mc.diagnostics = diags[mi];
        for (std::size_t r = 0; r < reps; ++r) {
            auto outcome = rep_outcome(m, splits[r], scores[mi][r], mc.threshold, options.averaging);
            mc.scores.push_back(std::move(outcome.pooled));
            mc.per_rep.push_back(outcome.metrics);
            mc.confusion_per_rep.push_back(outcome.confusion);
            for (std::size_t f = 0; f < k; ++f) {
                if (diags[mi][r][f].degenerate) mc.degenerate.push_back({-1, static_cast<int>(r), static_cast<int>(f)});
            }
        }
        for (Metric metric : kAllMetrics) {
            std::vector<std::optional<double>> values;
            for (const auto& s : mc.per_rep) values.push_back(s.get(metric));
            const auto d = summarize_distribution(values);
            mc.mean[metric] = MetricMean{d.mean, d.sd, d.n, d.undefined};
        }
        result.models.push_back(std::move(mc));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bootstrap

std::string_view resample_name(Resample r) noexcept {
    switch (r) {
        case Resample::rows: return "rows";
        case Resample::patients: return "patients";
        case Resample::identity: return "identity";
    }
    return "rows";
}

std::optional<Resample> find_resample(std::string_view name) noexcept {
    for (auto r : {Resample::rows, Resample::patients, Resample::identity}) {
        if (resample_name(r) == name) return r;
    }
    return std::nullopt;
}

DistributionSummary summarize_distribution(std::span<const std::optional<double>> values) {
    DistributionSummary s;
    std::vector<double> defined;
    for (const auto& v : values) {
        if (v) defined.push_back(*v);
        else ++s.undefined;
    }
    s.n = defined.size();
    if (defined.empty()) return s;
    s.mean = stats::mean(defined);
    s.sd = defined.size() > 1 ? stats::sample_sd(defined) : 0.0;
    std::sort(defined.begin(), defined.end());
    s.q025 = stats::quantile_sorted(defined, 0.025);
    s.median = stats::quantile_sorted(defined, 0.5);
    s.q975 = stats::quantile_sorted(defined, 0.975);
    return s;
}

DistributionSummary summarize_distribution(std::span<const double> values) {
    std::vector<std::optional<double>> opt;
    opt.reserve(values.size());
    for (double v : values) {
        if (std::isnan(v)) opt.emplace_back();
        else opt.emplace_back(v);
    }
    return summarize_distribution(opt);
}

const ModelBootstrap& BootstrapSummary::model(ModelKind kind) const {
    for (const auto& m : models) {
        if (m.spec.kind() == kind) return m;
    }
    throw ConfigError("model '" + std::string(kind_name(kind)) + "' was not bootstrapped");
}

namespace {

bool both_classes(const EncodedMatrix& m, std::span<const int> rows) {
    bool pos = false, neg = false;
    for (int r : rows) {
        (m.labels[static_cast<std::size_t>(r)] ? pos : neg) = true;
        if (pos && neg) return true;
    }
    return false;
}

std::vector<int> draw_rows(Rng& rng, std::span<const int> train) {
    std::vector<int> out(train.size());
    for (auto& v : out) v = train[rng.below(train.size())];
    return out;
}

std::vector<int> draw_patients(Rng& rng, const EncodedMatrix& m, std::span<const int> train) {
    // Training rows grouped by patient, in first-appearance order.
    std::vector<std::vector<int>> groups;
    std::map<std::string, std::size_t> index;
    for (int r : train) {
        const auto& g = m.groups[static_cast<std::size_t>(r)];
        auto [it, inserted] = index.try_emplace(g, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(r);
    }
    std::vector<int> out;
    out.reserve(train.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[rng.below(groups.size())];
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

}  // namespace

BootstrapSummary run_bootstrap(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                               const BootstrapOptions& options) {
    if (specs.empty()) throw ConfigError("no models to bootstrap");
    if (options.replicates < 1) throw ConfigError("bootstrap replicate count must be at least 1");
    if (options.max_redraws < 0) throw ConfigError("max_redraws must be >= 0");
    const auto splits = all_splits(m, plan);
    const auto n_models = specs.size();
    const auto reps = static_cast<std::size_t>(plan.reps());
    const auto k = static_cast<std::size_t>(plan.k());
    const auto n_rep = static_cast<std::size_t>(options.replicates);
    const std::size_t slots = n_rep * reps;

    std::vector<std::vector<MetricSet>> metrics(n_models, std::vector<MetricSet>(slots));
    std::vector<std::vector<std::vector<double>>> kept(n_models, std::vector<std::vector<double>>(options.keep_scores ? slots : 0));
    std::vector<std::vector<std::vector<int>>> flagged(n_models, std::vector<std::vector<int>>(slots));
    std::vector<std::vector<std::size_t>> redraws(n_models, std::vector<std::size_t>(slots, 0));

    parallel_for(n_models * slots, options.cv.workers, [&](std::size_t task) {
        const std::size_t mi = task / slots;
        const std::size_t slot = task % slots;
        const std::size_t b = slot / reps;
        const std::size_t r = slot % reps;
        std::vector<std::vector<double>> fold_scores(k);
        for (std::size_t f = 0; f < k; ++f) {
            const auto& split = splits[r][f];
            std::vector<int> sample;
            if (options.resample == Resample::identity) {
                sample = split.train;
            } else {
                Rng rng(options.seed, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f),
                                       static_cast<std::uint64_t>(b)});
                auto draw = [&] {
                    return options.resample == Resample::rows ? draw_rows(rng, split.train)
                                                              : draw_patients(rng, m, split.train);
                };
                sample = draw();
                const bool trainable = both_classes(m, split.train);
                int attempts = 0;
                while (trainable && !both_classes(m, sample) && attempts < options.max_redraws) {
                    sample = draw();
                    ++attempts;
                }
                redraws[mi][slot] += static_cast<std::size_t>(attempts);
            }
            const auto spec = specs[mi].with_seed(fold_seed(specs[mi], static_cast<int>(r), static_cast<int>(f)));
            const auto model = train(spec, m, sample);
            if (model.diagnostics().degenerate) flagged[mi][slot].push_back(static_cast<int>(f));
            fold_scores[f] = score(model, m, split.test);
        }
        const double threshold = threshold_for(specs[mi].kind(), options.cv);
        auto outcome = rep_outcome(m, splits[r], fold_scores, threshold, options.cv.averaging);
        metrics[mi][slot] = outcome.metrics;
        if (options.keep_scores) kept[mi][slot] = std::move(outcome.pooled);
    });

    BootstrapSummary out;
    out.replicates = options.replicates;
    out.reps = plan.reps();
    out.resample = options.resample;
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        ModelBootstrap mb(specs[mi]);
        mb.threshold = threshold_for(specs[mi].kind(), options.cv);
        mb.replicates = std::move(metrics[mi]);
        mb.scores = std::move(kept[mi]);
        for (std::size_t slot = 0; slot < slots; ++slot) {
            mb.redraws += redraws[mi][slot];
            for (int f : flagged[mi][slot])
                mb.degenerate.push_back({static_cast<int>(slot / reps), static_cast<int>(slot % reps), f});
        }
        for (Metric metric : kAllMetrics) {
            std::vector<std::optional<double>> values;
            for (const auto& s : mb.replicates) values.push_back(s.get(metric));
            mb.summary[metric] = summarize_distribution(values);
        }
        out.models.push_back(std::move(mb));
    }
    return out;
}

}  // namespace thyroid
