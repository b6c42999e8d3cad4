#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thyroid/encode.hpp"
#include "thyroid/metrics.hpp"
#include "thyroid/models/model.hpp"

namespace thyroid {

/// Patient-level fold assignment for repeated k-fold cross-validation.
/// Each repetition shuffles the sorted patient list with its own stream and
/// deals patients round-robin into k folds, so fold sizes differ by at most
/// one patient.
class FoldPlan {
public:
    FoldPlan(std::vector<std::string> patients, int k, int reps, std::uint64_t seed);

    int k() const noexcept { return k_; }
    int reps() const noexcept { return reps_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& patients() const noexcept { return patients_; }

    // Test patients of (rep, fold), in patient order.
    const std::vector<std::string>& test_patients(int rep, int fold) const;
    // Fold of a patient in a repetition; throws ConfigError for unknown ids.
    int fold_of(int rep, const std::string& patient) const;

private:
    int k_;
    int reps_;
    std::uint64_t seed_;
    std::vector<std::string> patients_;                 // sorted, unique
    std::vector<std::vector<int>> fold_index_;          // [rep][patient index]
    std::vector<std::vector<std::vector<std::string>>> folds_;  // [rep][fold]
};

FoldPlan make_fold_plan(std::vector<std::string> patients, int k, int reps, std::uint64_t seed);

// Distinct patient ids of an encoded matrix.
std::vector<std::string> patients_of(const EncodedMatrix& m);

// Train/test row split of one (rep, fold).
struct FoldRows {
    std::vector<int> train;
    std::vector<int> test;
};

/// Row split of (rep, fold). Throws ComputationError if a patient appears
/// on both sides and ConfigError if a row's patient is not in the plan.
FoldRows fold_rows(const EncodedMatrix& m, const FoldPlan& plan, int rep, int fold);

enum class Averaging {
    pooled,  // metrics on all test predictions of a repetition
    macro,   // mean of per-fold metrics within a repetition
};

std::string_view averaging_name(Averaging a) noexcept;
std::optional<Averaging> find_averaging(std::string_view name) noexcept;

struct FoldVisit {
    std::size_t model = 0;  // index into the spec list
    int rep = 0;
    int fold = 0;
    const TrainedModel& trained;
    const FoldRows& rows;
};

struct CvOptions {
    Averaging averaging = Averaging::pooled;
    // Classification threshold for probability-scored kinds; SVM margins
    // always use 0.
    std::optional<double> threshold;
    std::size_t workers = 1;
    // Called from the worker that trained each fold model, after scoring.
    // Calls for different folds may run concurrently.
    std::function<void(const FoldVisit&)> on_fold;
};

double threshold_for(ModelKind kind, const CvOptions& options);

// A (rep, fold) whose training rows held a single class.
struct DegenerateFold {
    int replicate = -1;  // -1 outside the bootstrap
    int rep = 0;
    int fold = 0;
};

// Mean of the defined entries of one metric across repetitions.
struct MetricMean {
    std::optional<double> mean;
    std::optional<double> sd;
    std::size_t defined = 0;
    std::size_t undefined = 0;
};

struct ModelCv {
    explicit ModelCv(ModelSpec s) : spec(std::move(s)) {}

    ModelSpec spec;
    double threshold = 0.5;
    std::vector<std::vector<double>> scores;  // [rep][row], pooled test scores
    std::vector<MetricSet> per_rep;
    std::vector<ConfusionMatrix> confusion_per_rep;
    std::map<Metric, MetricMean> mean;
    std::vector<DegenerateFold> degenerate;
    std::vector<std::vector<Diagnostics>> diagnostics;  // [rep][fold]

    MetricSet mean_set() const;
};

struct CvResult {
    int k = 0;
    int reps = 0;
    Averaging averaging = Averaging::pooled;
    std::vector<ModelCv> models;

    const ModelCv& model(ModelKind kind) const;
};

/// Repeated grouped cross-validation of every spec. Each (model, rep, fold)
/// trains with a seed derived from (spec seed, rep, fold). Output does not
/// depend on the worker count.
CvResult run_cv(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                const CvOptions& options = {});

// ---------------------------------------------------------------------------
// Bootstrap

enum class Resample {
    rows,      // nodule rows with replacement, same count
    patients,  // training patients with replacement, same count
    identity,  // no resampling (reproduces run_cv)
};

std::string_view resample_name(Resample r) noexcept;
std::optional<Resample> find_resample(std::string_view name) noexcept;

struct BootstrapOptions {
    int replicates = 1000;
    Resample resample = Resample::rows;
    std::uint64_t seed = 1;
    int max_redraws = 100;
    bool keep_scores = false;  // retain pooled scores per (replicate, rep)
    CvOptions cv;
};

/// Empirical summary of replicate values; undefined entries are excluded
/// and counted. Quantiles interpolate linearly between order statistics.
struct DistributionSummary {
    std::size_t n = 0;
    std::size_t undefined = 0;
    std::optional<double> mean, sd, q025, median, q975;
};

DistributionSummary summarize_distribution(std::span<const std::optional<double>> values);
DistributionSummary summarize_distribution(std::span<const double> values);

struct ModelBootstrap {
    explicit ModelBootstrap(ModelSpec s) : spec(std::move(s)) {}

    ModelSpec spec;
    double threshold = 0.5;
    std::vector<MetricSet> replicates;  // index replicate * reps + rep
    std::vector<std::vector<double>> scores;  // same indexing, if kept
    std::map<Metric, DistributionSummary> summary;
    std::vector<DegenerateFold> degenerate;  // resamples still single-class after redraws
    std::size_t redraws = 0;
};

struct BootstrapSummary {
    int replicates = 0;
    int reps = 0;
    Resample resample = Resample::rows;
    std::vector<ModelBootstrap> models;

    const ModelBootstrap& model(ModelKind kind) const;
};

/// Fold-level bootstrap: for every replicate and (rep, fold) the training
/// rows are resampled, the model retrained with the same seed as in run_cv,
/// and the untouched test fold scored. Replicates of a repetition are pooled
/// per (replicate, rep). Resampling streams are keyed by (seed, rep, fold,
/// replicate).
BootstrapSummary run_bootstrap(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                               const BootstrapOptions& options);

// ---------------------------------------------------------------------------
// Reports

// Tidy long format: model, metric, statistic, value (full precision).
std::string cv_to_csv(const CvResult& r);
std::string cv_to_json(const CvResult& r);
// Model x metric table at 4 decimals; '*' marks each column's maximum.
std::string cv_table_csv(const CvResult& r);
// Per-repetition metrics: model, rep, metric, value.
std::string cv_reps_csv(const CvResult& r);

std::string bootstrap_to_csv(const BootstrapSummary& s);
std::string bootstrap_to_json(const BootstrapSummary& s);
// Interval table: model, metric, lower, upper, mean at 4 decimals.
std::string bootstrap_table_csv(const BootstrapSummary& s);
// Long format replicate values: model, replicate, rep, metric, value.
std::string bootstrap_replicates_csv(const BootstrapSummary& s);

}  // namespace thyroid
