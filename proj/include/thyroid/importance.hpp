#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thyroid/data.hpp"
#include "thyroid/encode.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/models/model.hpp"
#include "thyroid/rng.hpp"

namespace thyroid {

/// Permutes the given rows of a block of columns as one unit: row i of the
/// block receives the values of row perm[i]. Other columns are untouched.
void shuffle_variable(Eigen::MatrixXd& x, std::span<const int> columns, Rng& rng);

struct PermutationResult {
    double baseline = 0.0;         // AUROC on the unshuffled rows
    std::vector<double> shuffled;  // AUROC after each shuffle
    double drop = 0.0;             // baseline - mean(shuffled); may be negative
};

/// AUROC drop of a trained model when one clinical variable is shuffled
/// across `rows`, averaged over `repeats` shuffles. All encoded columns of
/// the variable move together. Shuffle r uses the stream (seed, r). Throws
/// ConfigError for an unknown variable and UndefinedMetricError when the
/// rows hold a single class.
PermutationResult permutation_importance(const TrainedModel& model, const EncodedMatrix& m, std::span<const int> rows,
                                         const std::string& variable, int repeats, std::uint64_t seed);

struct ImportanceOptions {
    int shuffle_reps = 10;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
};

/// Mean AUROC drop per variable for one model, averaged over the
/// cross-validation folds in which it was defined.
struct ModelImportance {
    std::string model;
    std::map<std::string, double> drops;  // variable -> mean drop
    std::size_t folds_used = 0;
    std::size_t folds_skipped = 0;  // single-class test folds
};

/// Held-out permutation importance: the test rows of every (rep, fold) model
/// of run_cv are shuffled. Streams are keyed by (seed, rep, fold, variable,
/// shuffle).
std::vector<ModelImportance> cv_importance(const EncodedMatrix& m, const std::vector<ModelSpec>& specs,
                                           const FoldPlan& plan, const ImportanceOptions& options);

struct CvImportance {
    CvResult cv;
    std::vector<ModelImportance> importance;
};

/// run_cv and cv_importance in one pass over the fold models. The worker
/// count comes from `options`; the CV part equals run_cv(m, specs, plan,
/// cv_options).
CvImportance run_cv_importance(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                               const CvOptions& cv_options, const ImportanceOptions& options);

struct ImportanceRow {
    std::string variable;
    std::map<std::string, double> per_model;
    double mean = 0.0;
    std::optional<double> normalized;  // mean / max mean
};

struct ImportanceTable {
    std::vector<std::string> models;  // sorted by name
    std::vector<ImportanceRow> rows;  // descending mean; ties in predictor order
    bool normalized = false;          // false when no mean drop is positive
    int shuffle_reps = 0;
};

/// Averages drops across models and divides by the largest mean. Inputs
/// must cover the same variables. The result does not depend on input order.
ImportanceTable aggregate_importance(const std::vector<ModelImportance>& per_model, int shuffle_reps = 0);

// variable, rank, mean_drop, normalized, then one raw column per model.
std::string importance_to_csv(const ImportanceTable& t);
std::string importance_to_json(const ImportanceTable& t);
// Bar-plot data for the top `top` variables; negative values shown as 0.
std::string importance_figure_csv(const ImportanceTable& t, std::size_t top = 10);

// ---------------------------------------------------------------------------
// Malignancy profiles

struct ProfileLevel {
    std::string level;
    std::size_t count = 0;
    std::size_t malignant = 0;
    std::optional<double> percent;  // undefined for empty levels
};

struct MalignancyProfile {
    std::string variable;
    std::vector<ProfileLevel> levels;
};

inline constexpr double kDefaultSizeThreshold = 0.8;

/// Percent malignant per level of a categorical variable, or per size bin
/// ("<= t", "> t"). Throws ConfigError for other numeric variables.
MalignancyProfile malignancy_profile(const Dataset& ds, const std::string& variable,
                                     double size_threshold = kDefaultSizeThreshold);

/// Size profile over several bins with increasing upper edges; the last bin
/// is open ended.
MalignancyProfile size_profile(const Dataset& ds, const std::vector<double>& edges);

// Profiles of every categorical predictor plus size.
std::vector<MalignancyProfile> all_profiles(const Dataset& ds, double size_threshold = kDefaultSizeThreshold,
                                            const std::vector<double>& size_edges = {});

std::string profiles_to_csv(const std::vector<MalignancyProfile>& profiles);
std::string profiles_to_json(const std::vector<MalignancyProfile>& profiles);
// variable, level, value (percent malignant).
std::string profiles_figure_csv(const std::vector<MalignancyProfile>& profiles);

}  // namespace thyroid
