#include "thyroid/schema.hpp"

#include <algorithm>

namespace thyroid {
namespace {

using namespace std::string_view_literals;

constexpr std::array kSex{"male"sv, "female"sv};
constexpr std::array kSexCounts{200, 1032};
constexpr std::array kEvenness{"even"sv, "uneven"sv};
constexpr std::array kEvennessCounts{1098, 134};
constexpr std::array kLocation{"right"sv, "left"sv, "isthmus"sv};
constexpr std::array kLocationCounts{584, 548, 100};
constexpr std::array kFocality{"unifocal"sv, "multifocal"sv};
constexpr std::array kFocalityCounts{664, 568};
constexpr std::array kShape{"regular"sv, "irregular"sv};
constexpr std::array kShapeCounts{977, 255};
constexpr std::array kMargin{"clear"sv, "unclear"sv};
constexpr std::array kMarginCounts{406, 826};
constexpr std::array kCalcification{"absent"sv, "present"sv};
constexpr std::array kCalcificationCounts{740, 492};
constexpr std::array kEcho{"none"sv, "isoechoic"sv, "medium"sv, "hyper"sv, "hypo"sv};
constexpr std::array kEchoCounts{16, 15, 144, 7, 1050};
constexpr std::array kFlow{"normal"sv, "enriched"sv};
constexpr std::array kFlowCounts{786, 446};
constexpr std::array kComposition{"cystic"sv, "mixed"sv, "solid"sv};
constexpr std::array kCompositionCounts{30, 97, 1105};
constexpr std::array kLaterality{"unilateral"sv, "multilateral"sv};
constexpr std::array kLateralityCounts{286, 946};

constexpr VariableInfo numeric(Variable id, std::string_view name, std::string_view display, VarKind kind,
                               NumericSummaryStyle style, double center, double spread) {
    return VariableInfo{id, name, display, kind, {}, {}, style, center, spread};
}

template <std::size_t N>
constexpr VariableInfo categorical(Variable id, std::string_view name, std::string_view display,
                                   const std::array<std::string_view, N>& levels, const std::array<int, N>& counts) {
    return VariableInfo{id, name, display, VarKind::categorical, levels, counts};
}

const std::array<VariableInfo, kNumPredictors> kPredictors{
    numeric(Variable::age, "age", "Age (years)", VarKind::integer, NumericSummaryStyle::mean_sd, 46.61, 12.44),
    categorical(Variable::sex, "sex", "Gender", kSex, kSexCounts),
    numeric(Variable::ft3, "ft3", "FT3", VarKind::real, NumericSummaryStyle::median_iqr, 4.35, 0.82),
    numeric(Variable::ft4, "ft4", "FT4", VarKind::real, NumericSummaryStyle::median_iqr, 14.51, 2.56),
    numeric(Variable::tsh, "tsh", "TSH", VarKind::real, NumericSummaryStyle::median_iqr, 1.46, 1.63),
    numeric(Variable::tpo, "tpo", "TPO", VarKind::real, NumericSummaryStyle::median_iqr, 0.63, 5.37),
    numeric(Variable::tgab, "tgab", "TgAb", VarKind::real, NumericSummaryStyle::median_iqr, 2.69, 11.88),
    categorical(Variable::thyroid_echogenicity, "thyroid_echogenicity", "Thyroid echogenicity", kEvenness,
                kEvennessCounts),
    numeric(Variable::size, "size", "Size (cm)", VarKind::real, NumericSummaryStyle::mean_sd, 1.73, 1.31),
    categorical(Variable::location, "location", "Location", kLocation, kLocationCounts),
    categorical(Variable::multifocality, "multifocality", "Multifocality", kFocality, kFocalityCounts),
    categorical(Variable::shape, "shape", "Shape", kShape, kShapeCounts),
    categorical(Variable::margin, "margin", "Margin", kMargin, kMarginCounts),
    categorical(Variable::calcification, "calcification", "Calcification", kCalcification, kCalcificationCounts),
    categorical(Variable::nodule_echogenicity, "nodule_echogenicity", "Nodule echogenicity", kEcho, kEchoCounts),
    categorical(Variable::blood_flow, "blood_flow", "Blood flow", kFlow, kFlowCounts),
    categorical(Variable::composition, "composition", "Composition", kComposition, kCompositionCounts),
    categorical(Variable::laterality, "laterality", "Laterality", kLaterality, kLateralityCounts),
};

}  // namespace

std::span<const VariableInfo> predictors() noexcept { return kPredictors; }

const VariableInfo& info(Variable v) noexcept { return kPredictors[index_of(v)]; }

std::optional<Variable> find_variable(std::string_view name) noexcept {
    for (const auto& p : kPredictors) {
        if (p.name == name) return p.id;
    }
    return std::nullopt;
}

std::optional<int> find_level(Variable v, std::string_view level) noexcept {
    const auto& levels = info(v).levels;
    const auto it = std::find(levels.begin(), levels.end(), level);
    if (it == levels.end()) return std::nullopt;
    return static_cast<int>(it - levels.begin());
}

}  // namespace thyroid
