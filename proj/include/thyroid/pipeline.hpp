#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thyroid/config.hpp"
#include "thyroid/data.hpp"

namespace thyroid {

// Output file names, relative to RunConfig::out.
namespace files {
inline constexpr const char* kConfig = "run_config.txt";
inline constexpr const char* kSummaryCsv = "cohort_summary.csv";
inline constexpr const char* kSummaryJson = "cohort_summary.json";
inline constexpr const char* kCvTable = "cv_table.csv";
inline constexpr const char* kCvCsv = "cv_metrics.csv";
inline constexpr const char* kCvJson = "cv_metrics.json";
inline constexpr const char* kCvReps = "cv_reps.csv";
inline constexpr const char* kCvPredictions = "cv_predictions.csv";
inline constexpr const char* kBootstrapTable = "bootstrap_table.csv";
inline constexpr const char* kBootstrapCsv = "bootstrap_summary.csv";
inline constexpr const char* kBootstrapJson = "bootstrap_summary.json";
inline constexpr const char* kBootstrapReplicates = "bootstrap_replicates.csv";
inline constexpr const char* kImportanceFigure = "importance_bars.csv";
inline constexpr const char* kImportanceCsv = "importance.csv";
inline constexpr const char* kImportanceJson = "importance.json";
inline constexpr const char* kProfilesFigure = "profile_bars.csv";
inline constexpr const char* kProfilesCsv = "profiles.csv";
inline constexpr const char* kProfilesJson = "profiles.json";
inline constexpr const char* kComparisonTable = "comparison_table.csv";
inline constexpr const char* kComparisonConfusion = "comparison_confusion.csv";
inline constexpr const char* kComparisonJson = "comparison.json";
inline constexpr const char* kSynthetic = "synthetic.csv";
}  // namespace files

// Loads the configured CSV (or draws the synthetic cohort) and preprocesses it.
Dataset load_dataset(const RunConfig& config);

// Each command validates the configuration, writes its files and the
// resolved configuration into config.out, and returns the paths written.
std::vector<std::filesystem::path> cmd_summarize(const RunConfig& config);
std::vector<std::filesystem::path> cmd_cv(const RunConfig& config);
std::vector<std::filesystem::path> cmd_bootstrap(const RunConfig& config);
std::vector<std::filesystem::path> cmd_importance(const RunConfig& config);
std::vector<std::filesystem::path> cmd_compare(const RunConfig& config);
std::vector<std::filesystem::path> cmd_synth(const RunConfig& config);
// summarize, cv, bootstrap (when bootstrap.reps > 0), importance, and
// compare when an expert file is configured.
std::vector<std::filesystem::path> cmd_all(const RunConfig& config);

}  // namespace thyroid
