#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thyroid/data.hpp"
#include "thyroid/metrics.hpp"

namespace thyroid {

// (patient_id, location level)
using NoduleKey = std::pair<std::string, int>;

/// A clinician's call per nodule. An empty optional marks a nodule that was
/// not assessed.
///
/// File format: CSV with the columns patient_id, location and prediction.
/// Predictions are malignant/benign or 1/0; an empty cell, NA or
/// "not assessed" marks an unassessed nodule. Locations use the dataset
/// spellings (right, left, isthmus and the default aliases).
struct ExpertAssessment {
    std::map<NoduleKey, std::optional<int>> calls;
};

ExpertAssessment parse_expert(std::string_view text);
ExpertAssessment load_expert(const std::filesystem::path& path);
std::string expert_to_csv(const ExpertAssessment& e);

// Throws DataError listing expert keys that match no nodule of `ds`.
void check_expert_keys(const Dataset& ds, const ExpertAssessment& expert);

struct AssessorResult {
    std::string assessor;
    ConfusionMatrix confusion;
    MetricSet metrics;
    std::size_t excluded = 0;  // nodules without a call
};

struct Comparison {
    AssessorResult model;
    AssessorResult expert;
};

/// Confronts a model's cross-validated calls and the expert's calls with the
/// truth. `model_calls` follows the record order of `ds`. Nodules the expert
/// did not assess, including those missing from the file, are left out of
/// the expert's counts only. Throws DataError listing expert keys that match
/// no nodule.
Comparison compare_with_expert(const Dataset& ds, std::span<const int> model_calls, const std::string& model_name,
                               const ExpertAssessment& expert);

// Five-metric table: assessor, accuracy, f1, sensitivity, specificity,
// precision, assessed, excluded. 4 decimals.
std::string comparison_table_csv(const Comparison& c);
// Confusion matrices: assessor, predicted, actual benign, actual malignant.
std::string comparison_confusion_csv(const Comparison& c);
std::string comparison_to_json(const Comparison& c);

}  // namespace thyroid
