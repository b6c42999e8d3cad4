#include "thyroid/models/model.hpp"

#include <cmath>
#include <numeric>

#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {

std::string_view kind_name(ModelKind k) noexcept {
    switch (k) {
        case ModelKind::gbm: return "gbm";
        case ModelKind::logistic: return "logistic";
        case ModelKind::lda: return "lda";
        case ModelKind::svm_radial: return "svm_radial";
        case ModelKind::svm_linear: return "svm_linear";
        case ModelKind::random_forest: return "random_forest";
    }
    return "unknown";
}

std::string_view kind_display(ModelKind k) noexcept {
    switch (k) {
        case ModelKind::gbm: return "GBM";
        case ModelKind::logistic: return "Logistic";
        case ModelKind::lda: return "LDA";
        case ModelKind::svm_radial: return "SVM (Radial)";
        case ModelKind::svm_linear: return "SVM (Linear)";
        case ModelKind::random_forest: return "Random Forest";
    }
    return "unknown";
}

std::optional<ModelKind> find_kind(std::string_view name) noexcept {
    for (auto k : kAllModelKinds) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

bool is_probabilistic(ModelKind k) noexcept { return k != ModelKind::svm_radial && k != ModelKind::svm_linear; }

// ---------------------------------------------------------------------------
// ModelSpec

namespace {

Hyperparameters default_params(ModelKind kind) {
    switch (kind) {
        case ModelKind::gbm: return GbmParams{};
        case ModelKind::logistic: return LogisticParams{};
        case ModelKind::lda: return LdaParams{};
        case ModelKind::svm_radial:
        case ModelKind::svm_linear: return SvmParams{};
        case ModelKind::random_forest: return ForestParams{};
    }
    return LogisticParams{};
}

double to_double(std::string_view key, std::string_view text) {
    const auto v = parse_double(text);
    if (!v || !std::isfinite(*v)) throw ConfigError("hyperparameter '" + std::string(key) + "': not a number: '" + std::string(text) + "'");
    return *v;
}

long to_long(std::string_view key, std::string_view text) {
    const double v = to_double(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError("hyperparameter '" + std::string(key) + "' must be an integer");
    return static_cast<long>(v);
}

bool to_bool(std::string_view key, std::string_view text) {
    const auto t = lower(trim(text));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("hyperparameter '" + std::string(key) + "' must be true or false");
}

template <typename... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <typename... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

ModelSpec::ModelSpec(ModelKind kind, std::uint64_t seed) : ModelSpec(kind, default_params(kind), seed) {}

ModelSpec::ModelSpec(ModelKind kind, Hyperparameters params, std::uint64_t seed)
    : kind_(kind), params_(std::move(params)), seed_(seed) {
    validate();
}

ModelSpec ModelSpec::with_seed(std::uint64_t seed) const { return ModelSpec(kind_, params_, seed); }

void ModelSpec::validate() const {
    auto fail = [&](const std::string& msg) { throw ConfigError(std::string(kind_name(kind_)) + ": " + msg); };
    std::visit(Overloaded{
                   [&](const GbmParams& p) {
                       if (kind_ != ModelKind::gbm) fail("hyperparameters do not match the model kind");
                       if (p.n_trees < 0) fail("n_trees must be >= 0");
                       if (p.max_depth < 0) fail("max_depth must be >= 0");
                       if (!(p.shrinkage > 0.0 && p.shrinkage <= 1.0)) fail("shrinkage must be in (0, 1]");
                       if (p.min_leaf < 1) fail("min_leaf must be >= 1");
                       if (!(p.subsample > 0.0 && p.subsample <= 1.0)) fail("subsample must be in (0, 1]");
                   },
                   [&](const LogisticParams& p) {
                       if (kind_ != ModelKind::logistic) fail("hyperparameters do not match the model kind");
                       if (p.max_iter < 1) fail("max_iter must be >= 1");
                       if (!(p.ridge >= 0.0)) fail("ridge must be >= 0");
                       if (!(p.tolerance > 0.0)) fail("tolerance must be > 0");
                       if (!(p.fallback_ridge > 0.0)) fail("fallback_ridge must be > 0");
                       if (!(p.divergence_norm > 0.0)) fail("divergence_norm must be > 0");
                   },
                   [&](const LdaParams& p) {
                       if (kind_ != ModelKind::lda) fail("hyperparameters do not match the model kind");
                       if (!(p.ridge_scale > 0.0)) fail("ridge_scale must be > 0");
                   },
                   [&](const SvmParams& p) {
                       if (kind_ != ModelKind::svm_radial && kind_ != ModelKind::svm_linear)
                           fail("hyperparameters do not match the model kind");
                       if (!(p.cost > 0.0)) fail("cost must be > 0");
                       if (!(p.gamma >= 0.0)) fail("gamma must be >= 0");
                       if (!(p.tolerance > 0.0)) fail("tolerance must be > 0");
                       if (p.max_iter < 0) fail("max_iter must be >= 0");
                   },
                   [&](const ForestParams& p) {
                       if (kind_ != ModelKind::random_forest) fail("hyperparameters do not match the model kind");
                       if (p.n_trees < 1) fail("n_trees must be >= 1");
                       if (p.mtry < 0) fail("mtry must be >= 0");
                       if (p.max_depth < -1) fail("max_depth must be >= -1");
                       if (p.min_leaf < 1) fail("min_leaf must be >= 1");
                   },
               },
               params_);
}

void ModelSpec::set(std::string_view key, std::string_view value) {
    const Hyperparameters previous = params_;
    bool known = true;
    std::visit(Overloaded{
                   [&](GbmParams& p) {
                       if (key == "n_trees") p.n_trees = static_cast<int>(to_long(key, value));
                       else if (key == "max_depth") p.max_depth = static_cast<int>(to_long(key, value));
                       else if (key == "shrinkage") p.shrinkage = to_double(key, value);
                       else if (key == "min_leaf") p.min_leaf = static_cast<int>(to_long(key, value));
                       else if (key == "subsample") p.subsample = to_double(key, value);
                       else known = false;
                   },
                   [&](LogisticParams& p) {
                       if (key == "max_iter") p.max_iter = static_cast<int>(to_long(key, value));
                       else if (key == "ridge") p.ridge = to_double(key, value);
                       else if (key == "tolerance") p.tolerance = to_double(key, value);
                       else if (key == "fallback_ridge") p.fallback_ridge = to_double(key, value);
                       else if (key == "divergence_norm") p.divergence_norm = to_double(key, value);
                       else known = false;
                   },
                   [&](LdaParams& p) {
                       if (key == "ridge_scale") p.ridge_scale = to_double(key, value);
                       else known = false;
                   },
                   [&](SvmParams& p) {
                       if (key == "cost") p.cost = to_double(key, value);
                       else if (key == "gamma") p.gamma = to_double(key, value);
                       else if (key == "tolerance") p.tolerance = to_double(key, value);
                       else if (key == "max_iter") p.max_iter = to_long(key, value);
                       else known = false;
                   },
                   [&](ForestParams& p) {
                       if (key == "n_trees") p.n_trees = static_cast<int>(to_long(key, value));
                       else if (key == "mtry") p.mtry = static_cast<int>(to_long(key, value));
                       else if (key == "max_depth") p.max_depth = static_cast<int>(to_long(key, value));
                       else if (key == "min_leaf") p.min_leaf = static_cast<int>(to_long(key, value));
                       else if (key == "bootstrap") p.bootstrap = to_bool(key, value);
                       else known = false;
                   },
               },
               params_);
    if (!known) throw ConfigError("unknown hyperparameter '" + std::string(key) + "' for " + std::string(kind_name(kind_)));
    try {
        validate();
    } catch (...) {
        params_ = previous;
        throw;
    }
}

std::map<std::string, std::string> ModelSpec::to_map() const {
    std::map<std::string, std::string> out;
    auto num = [](double v) { return shortest(v); };
    std::visit(Overloaded{
                   [&](const GbmParams& p) {
                       out = {{"n_trees", std::to_string(p.n_trees)}, {"max_depth", std::to_string(p.max_depth)},
                              {"shrinkage", num(p.shrinkage)},      {"min_leaf", std::to_string(p.min_leaf)},
                              {"subsample", num(p.subsample)}};
                   },
                   [&](const LogisticParams& p) {
                       out = {{"max_iter", std::to_string(p.max_iter)}, {"ridge", num(p.ridge)},
                              {"tolerance", num(p.tolerance)},         {"fallback_ridge", num(p.fallback_ridge)},
                              {"divergence_norm", num(p.divergence_norm)}};
                   },
                   [&](const LdaParams& p) { out = {{"ridge_scale", num(p.ridge_scale)}}; },
                   [&](const SvmParams& p) {
                       out = {{"cost", num(p.cost)},
                              {"gamma", num(p.gamma)},
                              {"tolerance", num(p.tolerance)},
                              {"max_iter", std::to_string(p.max_iter)}};
                   },
                   [&](const ForestParams& p) {
                       out = {{"n_trees", std::to_string(p.n_trees)}, {"mtry", std::to_string(p.mtry)},
                              {"max_depth", std::to_string(p.max_depth)}, {"min_leaf", std::to_string(p.min_leaf)},
                              {"bootstrap", p.bootstrap ? "true" : "false"}};
                   },
               },
               params_);
    return out;
}

// ---------------------------------------------------------------------------
// Training and scoring

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const int> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= x.rows()) throw InputError("row index " + std::to_string(rows[i]) + " out of range");
        out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    }
    return out;
}

std::vector<bool> numeric_mask(const EncodedMatrix& m) {
    std::vector<bool> mask;
    mask.reserve(m.columns.size());
    for (const auto& c : m.columns) mask.push_back(c.numeric());
    return mask;
}

TrainedModel::TrainedModel(ModelKind kind, FittedParameters fitted, Diagnostics diag, Eigen::Index n_features)
    : kind_(kind), fitted_(std::move(fitted)), diag_(diag), n_features_(n_features) {}

double TrainedModel::default_threshold() const noexcept { return probabilistic() ? 0.5 : 0.0; }

TrainedModel train_dense(const ModelSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                         const std::vector<bool>& numeric_columns) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw InputError("train: label count mismatch");
    if (x.rows() == 0) throw InputError("train: no training rows");
    if (!x.allFinite()) throw InputError("train: non-finite feature values");
    if (static_cast<Eigen::Index>(numeric_columns.size()) != x.cols()) throw InputError("train: column mask size mismatch");

    const auto kind = spec.kind();
    const auto positives = std::accumulate(y.begin(), y.end(), std::size_t{0}, [](std::size_t a, int v) { return a + (v ? 1 : 0); });
    Diagnostics diag;
    if (positives == 0 || positives == y.size()) {
        diag.degenerate = true;
        const bool malignant = positives > 0;
        double value = malignant ? 1.0 : 0.0;
        if (!is_probabilistic(kind) && !malignant) value = -1.0;
        return TrainedModel(kind, ConstantFit{value}, diag, x.cols());
    }

    switch (kind) {
        case ModelKind::gbm: {
            auto fit = fit_gbm(x, y, spec.as<GbmParams>(), spec.seed());
            diag.iterations = static_cast<long>(fit.trees.size());
            diag.final_loss = fit.loss_trace.back();
            return TrainedModel(kind, std::move(fit), diag, x.cols());
        }
        case ModelKind::logistic: {
            LogisticModel model{Standardizer::fit(x, numeric_columns), {}};
            model.fit = fit_logistic(model.scaler.apply(x), y, spec.as<LogisticParams>());
            diag.iterations = model.fit.iterations;
            diag.converged = model.fit.converged;
            diag.fallback = model.fit.separation;
            diag.final_loss = -model.fit.log_likelihood;
            return TrainedModel(kind, std::move(model), diag, x.cols());
        }
        case ModelKind::lda: {
            LdaModel model{Standardizer::fit(x, numeric_columns), {}};
            model.fit = fit_lda(model.scaler.apply(x), y, spec.as<LdaParams>());
            return TrainedModel(kind, std::move(model), diag, x.cols());
        }
        case ModelKind::svm_radial:
        case ModelKind::svm_linear: {
            SvmModel model{Standardizer::fit(x, numeric_columns), {}};
            const auto kernel = kind == ModelKind::svm_radial ? Kernel::rbf : Kernel::linear;
            model.fit = fit_svm(model.scaler.apply(x), y, kernel, spec.as<SvmParams>());
            diag.iterations = model.fit.iterations;
            diag.converged = model.fit.converged;
            diag.final_loss = -model.fit.dual_objective;
            model.fit.alpha.clear();
            model.fit.alpha.shrink_to_fit();
            return TrainedModel(kind, std::move(model), diag, x.cols());
        }
        case ModelKind::random_forest: {
            auto fit = fit_forest(x, y, spec.as<ForestParams>(), spec.seed());
            diag.iterations = static_cast<long>(fit.trees.size());
            return TrainedModel(kind, std::move(fit), diag, x.cols());
        }
    }
    throw ConfigError("unknown model kind");
}

TrainedModel train(const ModelSpec& spec, const EncodedMatrix& m, std::span<const int> rows) {
    if (rows.empty()) throw InputError("train: empty row set");
    if (m.standardized) throw InputError("train: expects the unstandardized encoding");
    const Eigen::MatrixXd x = gather_rows(m.values, rows);
    std::vector<int> y;
    y.reserve(rows.size());
    for (int r : rows) y.push_back(m.labels[static_cast<std::size_t>(r)]);
    return train_dense(spec, x, y, numeric_mask(m));
}

Eigen::VectorXd TrainedModel::score_matrix(const Eigen::MatrixXd& x) const {
    if (x.cols() != n_features_)
        throw SchemaError("model expects " + std::to_string(n_features_) + " columns, got " + std::to_string(x.cols()));
    if (!x.allFinite()) throw InputError("score: non-finite feature values");
    const auto n = x.rows();
    Eigen::VectorXd out(n);
    std::visit(Overloaded{
                   [&](const ConstantFit& f) { out.setConstant(f.value); },
                   [&](const GbmFit& f) {
                       for (Eigen::Index i = 0; i < n; ++i) out[i] = stats::sigmoid(f.raw(x.row(i)));
                   },
                   [&](const LogisticModel& m) {
                       const Eigen::VectorXd eta = (m.scaler.apply(x) * m.fit.coef).array() + m.fit.intercept;
                       for (Eigen::Index i = 0; i < n; ++i) out[i] = stats::sigmoid(eta[i]);
                   },
                   [&](const LdaModel& m) {
                       const Eigen::VectorXd eta = (m.scaler.apply(x) * m.fit.direction).array() + m.fit.offset;
                       for (Eigen::Index i = 0; i < n; ++i) out[i] = stats::sigmoid(eta[i]);
                   },
                   [&](const SvmModel& m) { out = m.fit.decision(m.scaler.apply(x)); },
                   [&](const ForestFit& f) { out = f.predict_matrix(x); },
               },
               fitted_);
    return out;
}

std::vector<double> score(const TrainedModel& model, const EncodedMatrix& m, std::span<const int> rows) {
    if (m.cols() != model.n_features())
        throw SchemaError("model expects " + std::to_string(model.n_features()) + " columns, got " + std::to_string(m.cols()));
    const Eigen::VectorXd s = model.score_matrix(gather_rows(m.values, rows));
    return {s.data(), s.data() + s.size()};
}

std::vector<int> classify(std::span<const double> scores, double threshold) {
    std::vector<int> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(Eigen::VectorXd(m.row(i).transpose())));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd mat(const json& j) {
    Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto& data = j.at("data");
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = vec(data.at(static_cast<std::size_t>(i))).transpose();
    return m;
}

json trees(const std::vector<DecisionTree>& ts) {
    json arr = json::array();
    for (const auto& t : ts) arr.push_back(t.to_json());
    return arr;
}

std::vector<DecisionTree> trees(const json& j) {
    std::vector<DecisionTree> out;
    for (const auto& t : j) out.push_back(DecisionTree::from_json(t));
    return out;
}

}  // namespace

nlohmann::json TrainedModel::to_json() const {
    json fitted;
    std::visit(Overloaded{
                   [&](const ConstantFit& f) { fitted = {{"type", "constant"}, {"value", f.value}}; },
                   [&](const GbmFit& f) {
                       fitted = {{"type", "gbm"}, {"initial", f.initial}, {"trees", trees(f.trees)}, {"loss_trace", f.loss_trace}};
                   },
                   [&](const LogisticModel& m) {
                       fitted = {{"type", "logistic"},
                                 {"scaler", m.scaler.to_json()},
                                 {"intercept", m.fit.intercept},
                                 {"coef", vec(m.fit.coef)},
                                 {"penalty", m.fit.penalty}};
                   },
                   [&](const LdaModel& m) {
                       fitted = {{"type", "lda"},
                                 {"scaler", m.scaler.to_json()},
                                 {"mean_benign", vec(m.fit.mean_benign)},
                                 {"mean_malignant", vec(m.fit.mean_malignant)},
                                 {"pooled_cov", mat(m.fit.pooled_cov)},
                                 {"prior_malignant", m.fit.prior_malignant},
                                 {"direction", vec(m.fit.direction)},
                                 {"offset", m.fit.offset}};
                   },
                   [&](const SvmModel& m) {
                       fitted = {{"type", "svm"},
                                 {"scaler", m.scaler.to_json()},
                                 {"kernel", m.fit.kernel == Kernel::rbf ? "rbf" : "linear"},
                                 {"gamma", m.fit.gamma},
                                 {"support", mat(m.fit.support)},
                                 {"coef", vec(m.fit.coef)},
                                 {"rho", m.fit.rho},
                                 {"weights", vec(m.fit.weights)}};
                   },
                   [&](const ForestFit& f) { fitted = {{"type", "forest"}, {"trees", trees(f.trees)}}; },
               },
               fitted_);
    return {
        {"format", "thyroid-model"},
        {"version", kModelFormatVersion},
        {"kind", kind_name(kind_)},
        {"n_features", n_features_},
        {"diagnostics",
         {{"iterations", diag_.iterations},
          {"final_loss", diag_.final_loss},
          {"converged", diag_.converged},
          {"degenerate", diag_.degenerate},
          {"fallback", diag_.fallback}}},
        {"fitted", fitted},
    };
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "thyroid-model") throw DataError("not a serialized model");
        const int version = j.at("version").get<int>();
        if (version > kModelFormatVersion) throw DataError("model format version " + std::to_string(version) + " is newer than supported");
        const auto kind = find_kind(j.at("kind").get<std::string>());
        if (!kind) throw DataError("unknown model kind in serialized model");

        Diagnostics diag;
        const auto& d = j.at("diagnostics");
        diag.iterations = d.at("iterations").get<long>();
        diag.final_loss = d.at("final_loss").get<double>();
        diag.converged = d.at("converged").get<bool>();
        diag.degenerate = d.at("degenerate").get<bool>();
        diag.fallback = d.at("fallback").get<bool>();

        const auto& f = j.at("fitted");
        const auto type = f.at("type").get<std::string>();
        FittedParameters fitted;
        if (type == "constant") {
            fitted = ConstantFit{f.at("value").get<double>()};
        } else if (type == "gbm") {
            GbmFit g;
            g.initial = f.at("initial").get<double>();
            g.trees = trees(f.at("trees"));
            g.loss_trace = f.at("loss_trace").get<std::vector<double>>();
            fitted = std::move(g);
        } else if (type == "logistic") {
            LogisticModel m{Standardizer::from_json(f.at("scaler")), {}};
            m.fit.intercept = f.at("intercept").get<double>();
            m.fit.coef = vec(f.at("coef"));
            m.fit.penalty = f.at("penalty").get<double>();
            fitted = std::move(m);
        } else if (type == "lda") {
            LdaModel m{Standardizer::from_json(f.at("scaler")), {}};
            m.fit.mean_benign = vec(f.at("mean_benign"));
            m.fit.mean_malignant = vec(f.at("mean_malignant"));
            m.fit.pooled_cov = mat(f.at("pooled_cov"));
            m.fit.prior_malignant = f.at("prior_malignant").get<double>();
            m.fit.direction = vec(f.at("direction"));
            m.fit.offset = f.at("offset").get<double>();
            fitted = std::move(m);
        } else if (type == "svm") {
            SvmModel m{Standardizer::from_json(f.at("scaler")), {}};
            m.fit.kernel = f.at("kernel") == "rbf" ? Kernel::rbf : Kernel::linear;
            m.fit.gamma = f.at("gamma").get<double>();
            m.fit.support = mat(f.at("support"));
            m.fit.coef = vec(f.at("coef"));
            m.fit.rho = f.at("rho").get<double>();
            m.fit.weights = vec(f.at("weights"));
            fitted = std::move(m);
        } else if (type == "forest") {
            fitted = ForestFit{trees(f.at("trees"))};
        } else {
            throw DataError("unknown fitted model type '" + type + "'");
        }
        return TrainedModel(*kind, std::move(fitted), diag, j.at("n_features").get<Eigen::Index>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed serialized model: ") + e.what());
    }
}

}  // namespace thyroid
