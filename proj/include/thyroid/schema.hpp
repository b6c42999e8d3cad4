#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace thyroid {

// The 18 clinical predictors, in column order of the clinical table.
enum class Variable : std::uint8_t {
    age,
    sex,
    ft3,
    ft4,
    tsh,
    tpo,
    tgab,
    thyroid_echogenicity,
    size,
    location,
    multifocality,
    shape,
    margin,
    calcification,
    nodule_echogenicity,
    blood_flow,
    composition,
    laterality,
};

inline constexpr std::size_t kNumPredictors = 18;

enum class VarKind : std::uint8_t { integer, real, categorical };

// How the clinical table summarizes a numeric variable.
enum class NumericSummaryStyle : std::uint8_t { mean_sd, median_iqr };

struct VariableInfo {
    Variable id;
    std::string_view name;     // canonical snake_case name, used in files
    std::string_view display;  // human-readable label for reports
    VarKind kind;
    // Categorical levels in reference-table order; the first is the
    // reference level of the indicator encoding.
    std::span<const std::string_view> levels;
    // Reference-cohort counts per level (categoricals only).
    std::span<const int> reference_counts;
    NumericSummaryStyle summary_style = NumericSummaryStyle::mean_sd;
    // Reference location/scale: mean/SD or median/IQR per summary_style.
    double reference_center = 0.0;
    double reference_spread = 0.0;

    bool categorical() const noexcept { return kind == VarKind::categorical; }
    std::size_t level_count() const noexcept { return levels.size(); }
};

/// All predictors in enum order.
std::span<const VariableInfo> predictors() noexcept;

const VariableInfo& info(Variable v) noexcept;

inline std::size_t index_of(Variable v) noexcept { return static_cast<std::size_t>(v); }

std::optional<Variable> find_variable(std::string_view name) noexcept;

// Level index of `level` for a categorical variable, if valid.
std::optional<int> find_level(Variable v, std::string_view level) noexcept;

// The response variable.
inline constexpr std::string_view kLabelName = "malignancy";
inline constexpr std::array<std::string_view, 2> kLabelLevels{"benign", "malignant"};
inline constexpr std::array<int, 2> kLabelReferenceCounts{413, 819};
inline constexpr std::string_view kPatientIdName = "patient_id";

// Reference cohort age range.
inline constexpr int kReferenceAgeMin = 13;
inline constexpr int kReferenceAgeMax = 82;

}  // namespace thyroid
