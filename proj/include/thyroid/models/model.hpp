#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thyroid/encode.hpp"
#include "thyroid/models/forest.hpp"
#include "thyroid/models/gbm.hpp"
#include "thyroid/models/lda.hpp"
#include "thyroid/models/logistic.hpp"
#include "thyroid/models/standardize.hpp"
#include "thyroid/models/svm.hpp"

namespace thyroid {

enum class ModelKind { gbm, logistic, lda, svm_radial, svm_linear, random_forest };

// Report order.
inline constexpr std::array<ModelKind, 6> kAllModelKinds{ModelKind::gbm,        ModelKind::logistic,
                                                         ModelKind::lda,        ModelKind::svm_radial,
                                                         ModelKind::svm_linear, ModelKind::random_forest};

std::string_view kind_name(ModelKind k) noexcept;     // "random_forest"
std::string_view kind_display(ModelKind k) noexcept;  // "Random Forest"
std::optional<ModelKind> find_kind(std::string_view name) noexcept;

// Kinds whose scores are probabilities in [0, 1].
bool is_probabilistic(ModelKind k) noexcept;

using Hyperparameters = std::variant<GbmParams, LogisticParams, LdaParams, SvmParams, ForestParams>;

/// A model kind with validated hyperparameters and a seed for the
/// stochastic kinds.
class ModelSpec {
public:
    explicit ModelSpec(ModelKind kind, std::uint64_t seed = 1);
    ModelSpec(ModelKind kind, Hyperparameters params, std::uint64_t seed);

    ModelKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Hyperparameters& params() const noexcept { return params_; }

    template <typename P>
    const P& as() const {
        return std::get<P>(params_);
    }

    ModelSpec with_seed(std::uint64_t seed) const;

    // Sets one hyperparameter by name, e.g. set("n_trees", "200"). Throws
    // ConfigError for unknown keys or invalid values.
    void set(std::string_view key, std::string_view value);

    // Hyperparameters as ordered key/value text (for provenance files).
    std::map<std::string, std::string> to_map() const;

private:
    void validate() const;

    ModelKind kind_;
    Hyperparameters params_;
    std::uint64_t seed_;
};

struct Diagnostics {
    long iterations = 0;
    double final_loss = 0.0;  // kind-specific: -log-likelihood, log-loss, or -dual objective
    bool converged = true;
    bool degenerate = false;  // trained on a single class
    bool fallback = false;    // logistic ridge fallback after separation
};

// Fitted state of a model trained on one class only.
struct ConstantFit {
    double value = 0.0;
};

struct LogisticModel {
    Standardizer scaler;
    LogisticFit fit;
};
struct LdaModel {
    Standardizer scaler;
    LdaFit fit;
};
struct SvmModel {
    Standardizer scaler;
    SvmFit fit;
};

using FittedParameters = std::variant<ConstantFit, GbmFit, LogisticModel, LdaModel, SvmModel, ForestFit>;

/// An immutable fitted classifier. Scores are finite; higher means more
/// likely malignant. GBM, logistic and LDA scores are probabilities; SVM
/// scores are signed margins (threshold 0); forest scores are vote fractions.
class TrainedModel {
public:
    TrainedModel(ModelKind kind, FittedParameters fitted, Diagnostics diag, Eigen::Index n_features);

    ModelKind kind() const noexcept { return kind_; }
    const Diagnostics& diagnostics() const noexcept { return diag_; }
    const FittedParameters& fitted() const noexcept { return fitted_; }
    Eigen::Index n_features() const noexcept { return n_features_; }

    bool probabilistic() const noexcept { return is_probabilistic(kind_); }
    // 0.5 for probability-like scores, 0 for SVM margins.
    double default_threshold() const noexcept;

    // Scores raw (unstandardized) encoded rows, one per matrix row.
    Eigen::VectorXd score_matrix(const Eigen::MatrixXd& x) const;

    // Versioned JSON form; from_json(to_json()) scores identically.
    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    ModelKind kind_;
    FittedParameters fitted_;
    Diagnostics diag_;
    Eigen::Index n_features_;
};

inline constexpr int kModelFormatVersion = 1;

/// Fits a model on the given rows of an unstandardized encoding. Linear
/// models and SVMs z-score numeric columns with statistics of the training
/// rows. Single-class rows give a degenerate constant model.
TrainedModel train(const ModelSpec& spec, const EncodedMatrix& m, std::span<const int> rows);

// Low-level entry point on a dense block; `numeric_columns` selects the
// columns standardized for linear models and SVMs.
TrainedModel train_dense(const ModelSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                         const std::vector<bool>& numeric_columns);

std::vector<double> score(const TrainedModel& model, const EncodedMatrix& m, std::span<const int> rows);

// 1 iff score >= threshold.
std::vector<int> classify(std::span<const double> scores, double threshold);

// Gathers rows of a matrix (duplicates allowed).
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const int> rows);

std::vector<bool> numeric_mask(const EncodedMatrix& m);

}  // namespace thyroid
