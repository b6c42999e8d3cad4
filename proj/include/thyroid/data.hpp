#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thyroid/schema.hpp"

namespace thyroid {

/// One thyroid nodule. Predictor values are stored by variable index;
/// categorical values hold the level index. Fields are optional so that raw
/// ingested rows can carry missing or rejected cells until preprocessing.
struct NoduleRecord {
    std::string patient_id;
    std::array<std::optional<double>, kNumPredictors> values{};
    std::optional<int> malignancy;  // 1 = malignant

    const std::optional<double>& get(Variable v) const noexcept { return values[index_of(v)]; }
    void set(Variable v, double value) noexcept { values[index_of(v)] = value; }

    // Value of a present field; throws DataError when missing.
    double at(Variable v) const;
    int level(Variable v) const { return static_cast<int>(at(v)); }

    bool complete() const noexcept;

    friend bool operator==(const NoduleRecord&, const NoduleRecord&) = default;
};

enum class Provenance : std::uint8_t { real, synthetic };

// A cell that failed type or domain validation during ingestion. The cell is
// left missing so that preprocessing rejects the row.
struct RowIssue {
    std::size_t row = 0;  // 0-based data row (header excluded)
    std::string field;
    std::string message;
};

struct Dataset {
    std::vector<NoduleRecord> records;
    Provenance provenance = Provenance::real;
    std::vector<RowIssue> issues;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
};

// Source column candidates and raw-value dictionary for one schema field.
struct FieldMapping {
    std::vector<std::string> columns;                  // header candidates, case-insensitive
    std::map<std::string, std::string> values;         // normalized raw text -> canonical level

    friend bool operator==(const FieldMapping&, const FieldMapping&) = default;
};

/// Maps CSV headers and cell spellings onto the schema. Keys of `fields` are
/// the canonical field names: "patient_id", every predictor, and "malignancy".
///
/// Text grammar (one entry per line, '#' starts a comment):
///
///     missing = "", NA, N/A
///     column.<field> = Header | Alternative Header
///     value.<field>.<level> = raw | other raw
///
/// A file is applied on top of the built-in defaults, so every field stays
/// mapped. Assigning the same key twice in one file is an error.
struct ColumnMapping {
    std::map<std::string, FieldMapping> fields;
    std::vector<std::string> missing_tokens;

    static ColumnMapping defaults();
    static ColumnMapping parse(std::string_view text);
    static ColumnMapping load(const std::filesystem::path& path);

    // Renders the mapping in the grammar above. parse(to_text()) == *this.
    std::string to_text() const;

    friend bool operator==(const ColumnMapping&, const ColumnMapping&) = default;
};

struct LoadOptions {
    // Throw RowError on the first unparseable cell instead of recording it.
    bool strict = false;
};

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping, LoadOptions options = {});
Dataset parse_csv_dataset(std::string_view text, const ColumnMapping& mapping, LoadOptions options = {});

/// Renders a dataset with canonical headers and level names. Missing cells
/// are written as "NA". Numeric values use the shortest round-trip form.
std::string to_csv(const Dataset& ds);

/// Keeps the largest nodule per (patient, location), then drops records with
/// any missing field. Output is sorted by patient id, then location.
Dataset preprocess(const Dataset& raw);

// Orders patient ids numerically when both are integers, else lexically.
bool patient_id_less(std::string_view a, std::string_view b) noexcept;

// ---------------------------------------------------------------------------
// Descriptive statistics

struct NumericSummary {
    Variable variable;
    std::size_t count = 0;
    double mean = 0, sd = 0, median = 0, iqr = 0, min = 0, max = 0;
};

struct LevelCount {
    std::string level;
    std::size_t count = 0;
    double percent = 0;
};

struct CategoricalSummary {
    std::string variable;  // predictor name or "malignancy"
    std::vector<LevelCount> levels;
};

struct DatasetSummary {
    std::size_t n_records = 0;
    std::size_t n_patients = 0;
    std::vector<NumericSummary> numeric;
    std::vector<CategoricalSummary> categorical;  // predictors, then malignancy

    const NumericSummary& numeric_of(Variable v) const;
    const CategoricalSummary& categorical_of(std::string_view name) const;
};

DatasetSummary summarize(const Dataset& ds);

// Table layout: section, characteristic, statistic, value, percentage.
// Values rendered to 2 decimals, matching the clinical table.
std::string summary_to_csv(const DatasetSummary& s);
std::string summary_to_json(const DatasetSummary& s);

// ---------------------------------------------------------------------------
// Synthetic cohorts

// Signal terms: "<numeric variable>" or "<categorical variable>=<level>".
using SignalMap = std::map<std::string, double>;

SignalMap default_signal();

/// Logistic malignancy model of the synthetic generator. Numeric terms act
/// on the variable's standardized generator scale (log scale for
/// log-normal fields); categorical terms are level indicators. The intercept
/// is calibrated so the expected malignant fraction matches the reference
/// cohort.
class SignalModel {
public:
    explicit SignalModel(const SignalMap& signal);

    double intercept() const noexcept { return intercept_; }
    double linear_predictor(const NoduleRecord& r) const;
    double probability(const NoduleRecord& r) const;

    struct Term {
        Variable variable;
        std::optional<int> level;  // set for categorical indicators
        double weight;
    };
    const std::vector<Term>& terms() const noexcept { return terms_; }

private:
    std::vector<Term> terms_;
    double intercept_ = 0.0;
};

// Target malignant fraction of synthetic cohorts.
inline constexpr double kReferenceMalignantFraction = 819.0 / 1232.0;

// Generator-scale standardization of a numeric variable: z-score of the
// value (age) or of its logarithm (log-normal fields).
double generator_z(Variable v, double value);

// Parameters of the log-normal marginal for a log-normal field.
struct LogNormal {
    double mu;
    double sigma;
};
LogNormal lognormal_for(Variable v);

/// Draws a reproducible cohort: 1-3 nodules per patient at distinct
/// locations, categoricals from reference marginals, numerics from fitted
/// parametric marginals, labels from SignalModel. Throws ConfigError for
/// n_patients < 10 or an unknown signal term.
Dataset synthesize(std::size_t n_patients, std::uint64_t seed, const SignalMap& signal = default_signal());

}  // namespace thyroid
