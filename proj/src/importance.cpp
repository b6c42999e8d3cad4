#include "thyroid/importance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <variant>

#include <nlohmann/json.hpp>

#include "thyroid/csv.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"
#include "thyroid/metrics.hpp"
#include "thyroid/models/forest.hpp"
#include "thyroid/parallel.hpp"
#include "thyroid/schema.hpp"

namespace thyroid {

namespace {

std::vector<Eigen::Index> row_permutation(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(perm);
    return perm;
}

}  // namespace

void shuffle_variable(Eigen::MatrixXd& x, std::span<const int> columns, Rng& rng) {
    const auto perm = row_permutation(x.rows(), rng);
    for (int c : columns) {
        const Eigen::VectorXd original = x.col(c);
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, c) = original[perm[static_cast<std::size_t>(i)]];
    }
}

namespace {

std::vector<int> labels_at(const EncodedMatrix& m, std::span<const int> rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (int r : rows) y.push_back(m.labels[static_cast<std::size_t>(r)]);
    return y;
}

double auroc_of(const TrainedModel& model, const Eigen::MatrixXd& x, std::span<const int> y) {
    const Eigen::VectorXd s = model.score_matrix(x);
    return auroc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y);
}

std::uint64_t variable_key(const std::string& variable) {
    const auto v = find_variable(variable);
    return v ? static_cast<std::uint64_t>(index_of(*v)) : 0xFFFF;
}

// Scores shuffled copies of one held-out matrix. Forests rescore only the
// tree paths that test a shuffled column.
class ShuffleScorer {
public:
    ShuffleScorer(const TrainedModel& model, const Eigen::MatrixXd& x) : model_(model) {
        if (const auto* forest = std::get_if<ForestFit>(&model.fitted())) cache_.emplace(*forest, x);
    }

    Eigen::VectorXd score(const Eigen::MatrixXd& shuffled, std::span<const int> columns) const {
        return cache_ ? cache_->rescore(shuffled, columns) : model_.score_matrix(shuffled);
    }

    Eigen::VectorXd score_rows(const Eigen::MatrixXd& rows) const { return model_.score_matrix(rows); }

private:
    const TrainedModel& model_;
    std::optional<ForestPathCache> cache_;
};

// Row i of a shuffled matrix is row i carrying row perm[i]'s values of the
// variable. When the variable takes fewer distinct values than there are
// shuffles, every (row, value) pair is scored once and shuffles are looked up.
PermutationResult permute(const ShuffleScorer& scorer, const Eigen::MatrixXd& x, std::span<const int> y,
                          std::span<const int> columns, int repeats, std::uint64_t seed, double baseline) {
    if (repeats < 1) throw ConfigError("shuffle repetitions must be at least 1");
    const Eigen::Index n = x.rows();
    std::map<std::vector<double>, int> ids;
    std::vector<int> value_of(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> key;
        for (int c : columns) key.push_back(x(i, c));
        value_of[static_cast<std::size_t>(i)] = ids.try_emplace(std::move(key), static_cast<int>(ids.size())).first->second;
    }
    const auto levels = static_cast<Eigen::Index>(ids.size());

    Eigen::VectorXd table;
    if (levels < repeats) {
        Eigen::MatrixXd expanded(n * levels, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            for (const auto& [key, id] : ids) {
                auto row = expanded.row(i * levels + id);
                row = x.row(i);
                for (std::size_t c = 0; c < columns.size(); ++c) row[columns[c]] = key[c];
            }
        }
        table = scorer.score_rows(expanded);
    }

    PermutationResult out;
    out.baseline = baseline;
    double sum = 0.0;
    Eigen::VectorXd s(n);
    for (int r = 0; r < repeats; ++r) {
        Rng rng(seed, {static_cast<std::uint64_t>(r)});
        if (table.size() > 0) {
            const auto perm = row_permutation(n, rng);
            for (Eigen::Index i = 0; i < n; ++i)
                s[i] = table[i * levels + value_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]];
        } else {
            Eigen::MatrixXd shuffled = x;
            shuffle_variable(shuffled, columns, rng);
            s = scorer.score(shuffled, columns);
        }
        const double a = auroc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y);
        out.shuffled.push_back(a);
        sum += a;
    }
    out.drop = baseline - sum / repeats;
    return out;
}

}  // namespace

PermutationResult permutation_importance(const TrainedModel& model, const EncodedMatrix& m, std::span<const int> rows,
                                         const std::string& variable, int repeats, std::uint64_t seed) {
    const auto& columns = m.columns_of(variable);
    const Eigen::MatrixXd x = gather_rows(m.values, rows);
    const auto y = labels_at(m, rows);
    const double baseline = auroc_of(model, x, y);
    return permute(ShuffleScorer(model, x), x, y, columns, repeats, seed, baseline);
}

CvImportance run_cv_importance(const EncodedMatrix& m, const std::vector<ModelSpec>& specs, const FoldPlan& plan,
                               const CvOptions& cv_options, const ImportanceOptions& options) {
    if (specs.empty()) throw ConfigError("no models for importance");
    if (options.shuffle_reps < 1) throw ConfigError("shuffle repetitions must be at least 1");
    const auto variables = m.variable_names();
    const auto reps = static_cast<std::size_t>(plan.reps());
    const auto k = static_cast<std::size_t>(plan.k());
    const auto n_models = specs.size();

    // [model][rep * k + fold] -> per-variable drops, empty if skipped
    std::vector<std::vector<std::vector<double>>> drops(n_models, std::vector<std::vector<double>>(reps * k));
    CvOptions hooked = cv_options;
    hooked.workers = options.workers;
    hooked.on_fold = [&](const FoldVisit& visit) {
        if (cv_options.on_fold) cv_options.on_fold(visit);
        const auto y = labels_at(m, visit.rows.test);
        const bool both = std::find(y.begin(), y.end(), 1) != y.end() && std::find(y.begin(), y.end(), 0) != y.end();
        if (!both) return;
        const auto r = static_cast<std::uint64_t>(visit.rep);
        const auto f = static_cast<std::uint64_t>(visit.fold);
        const Eigen::MatrixXd x = gather_rows(m.values, visit.rows.test);
        const double baseline = auroc_of(visit.trained, x, y);
        auto& out = drops[visit.model][r * k + f];
        const ShuffleScorer scorer(visit.trained, x);
        for (const auto& v : variables) {
            const auto stream = derive_seed(options.seed, {r, f, variable_key(v)});
            out.push_back(permute(scorer, x, y, m.columns_of(v), options.shuffle_reps, stream, baseline).drop);
        }
    };

    CvImportance result{run_cv(m, specs, plan, hooked), {}};
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        ModelImportance mi_out;
        mi_out.model = std::string(kind_name(specs[mi].kind()));
        std::vector<double> sums(variables.size(), 0.0);
        for (const auto& slot : drops[mi]) {
            if (slot.empty()) {
                ++mi_out.folds_skipped;
                continue;
            }
            ++mi_out.folds_used;
            for (std::size_t v = 0; v < variables.size(); ++v) sums[v] += slot[v];
        }
        if (mi_out.folds_used == 0) throw UndefinedMetricError("importance: every test fold holds a single class");
        for (std::size_t v = 0; v < variables.size(); ++v)
            mi_out.drops[variables[v]] = sums[v] / static_cast<double>(mi_out.folds_used);
        result.importance.push_back(std::move(mi_out));
    }
    return result;
}

std::vector<ModelImportance> cv_importance(const EncodedMatrix& m, const std::vector<ModelSpec>& specs,
                                           const FoldPlan& plan, const ImportanceOptions& options) {
    return run_cv_importance(m, specs, plan, CvOptions{}, options).importance;
}

ImportanceTable aggregate_importance(const std::vector<ModelImportance>& per_model, int shuffle_reps) {
    if (per_model.empty()) throw ConfigError("aggregate_importance needs at least one model");
    std::vector<const ModelImportance*> sorted;
    for (const auto& p : per_model) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->model < b->model; });
    for (const auto* p : sorted) {
        if (p->drops.size() != sorted.front()->drops.size())
            throw ConfigError("importance tables cover different variables");
        for (const auto& [v, d] : sorted.front()->drops) {
            if (!p->drops.count(v)) throw ConfigError("importance tables cover different variables: '" + v + "'");
        }
    }

    ImportanceTable t;
    t.shuffle_reps = shuffle_reps;
    for (const auto* p : sorted) t.models.push_back(p->model);
    for (const auto& [variable, unused] : sorted.front()->drops) {
        ImportanceRow row;
        row.variable = variable;
        double sum = 0.0;
        for (const auto* p : sorted) {
            const double d = p->drops.at(variable);
            row.per_model[p->model] = d;
            sum += d;
        }
        row.mean = sum / static_cast<double>(sorted.size());
        t.rows.push_back(std::move(row));
    }
    auto order = [](const std::string& v) {
        const auto id = find_variable(v);
        return id ? index_of(*id) : kNumPredictors;
    };
    std::sort(t.rows.begin(), t.rows.end(), [&](const ImportanceRow& a, const ImportanceRow& b) {
        if (a.mean != b.mean) return a.mean > b.mean;
        if (order(a.variable) != order(b.variable)) return order(a.variable) < order(b.variable);
        return a.variable < b.variable;
    });
    const double top = t.rows.front().mean;
    if (top > 0.0) {
        t.normalized = true;
        for (auto& row : t.rows) row.normalized = row.mean / top;
    }
    return t;
}

std::string importance_to_csv(const ImportanceTable& t) {
    csv::Row header{"variable", "rank", "mean_drop", "normalized"};
    for (const auto& m : t.models) header.push_back(m);
    csv::Writer w(header);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        csv::Row row{r.variable, std::to_string(i + 1), shortest(r.mean), r.normalized ? shortest(*r.normalized) : "NA"};
        for (const auto& m : t.models) row.push_back(shortest(r.per_model.at(m)));
        w.add(row);
    }
    return w.str();
}

std::string importance_to_json(const ImportanceTable& t) {
    nlohmann::ordered_json j;
    j["shuffle_reps"] = t.shuffle_reps;
    j["normalized"] = t.normalized;
    j["models"] = t.models;
    j["variables"] = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json e;
        e["variable"] = r.variable;
        e["mean_drop"] = r.mean;
        e["normalized"] = r.normalized ? nlohmann::ordered_json(*r.normalized) : nlohmann::ordered_json(nullptr);
        e["per_model"] = nlohmann::ordered_json::object();
        for (const auto& m : t.models) e["per_model"][m] = r.per_model.at(m);
        j["variables"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string importance_figure_csv(const ImportanceTable& t, std::size_t top) {
    csv::Writer w({"variable", "value"});
    for (std::size_t i = 0; i < t.rows.size() && i < top; ++i) {
        const auto& r = t.rows[i];
        const double v = r.normalized ? std::max(0.0, *r.normalized) : 0.0;
        w.add({r.variable, fixed(v, 4)});
    }
    return w.str();
}

// ---------------------------------------------------------------------------
// Malignancy profiles

namespace {

void finish(ProfileLevel& level) {
    if (level.count > 0)
        level.percent = 100.0 * static_cast<double>(level.malignant) / static_cast<double>(level.count);
}

}  // namespace

MalignancyProfile malignancy_profile(const Dataset& ds, const std::string& variable, double size_threshold) {
    const auto id = find_variable(variable);
    if (!id) throw ConfigError("unknown variable '" + variable + "'");
    if (*id == Variable::size) return size_profile(ds, {size_threshold});
    const auto& vi = info(*id);
    if (!vi.categorical()) throw ConfigError("malignancy profiles need a categorical variable or size, not '" + variable + "'");

    MalignancyProfile p;
    p.variable = variable;
    for (auto level : vi.levels) p.levels.push_back({std::string(level), 0, 0, std::nullopt});
    for (const auto& r : ds.records) {
        auto& level = p.levels.at(static_cast<std::size_t>(r.level(*id)));
        ++level.count;
        if (r.malignancy.value_or(0) == 1) ++level.malignant;
    }
    for (auto& level : p.levels) finish(level);
    return p;
}

MalignancyProfile size_profile(const Dataset& ds, const std::vector<double>& edges) {
    if (edges.empty()) throw ConfigError("size profile needs at least one bin edge");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw ConfigError("size bin edges must increase");
    }
    MalignancyProfile p;
    p.variable = "size";
    if (edges.size() == 1) {
        p.levels.push_back({"<= " + shortest(edges[0]), 0, 0, std::nullopt});
    } else {
        p.levels.push_back({"<= " + shortest(edges[0]), 0, 0, std::nullopt});
        for (std::size_t i = 1; i < edges.size(); ++i)
            p.levels.push_back({"(" + shortest(edges[i - 1]) + ", " + shortest(edges[i]) + "]", 0, 0, std::nullopt});
    }
    p.levels.push_back({"> " + shortest(edges.back()), 0, 0, std::nullopt});
    for (const auto& r : ds.records) {
        const double size = r.at(Variable::size);
        const auto bin = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), size) - edges.begin());
        auto& level = p.levels[bin];
        ++level.count;
        if (r.malignancy.value_or(0) == 1) ++level.malignant;
    }
    for (auto& level : p.levels) finish(level);
    return p;
}

std::vector<MalignancyProfile> all_profiles(const Dataset& ds, double size_threshold,
                                            const std::vector<double>& size_edges) {
    std::vector<MalignancyProfile> out;
    for (const auto& p : predictors()) {
        if (p.id == Variable::size) {
            out.push_back(size_edges.empty() ? size_profile(ds, {size_threshold}) : size_profile(ds, size_edges));
        } else if (p.categorical()) {
            out.push_back(malignancy_profile(ds, std::string(p.name)));
        }
    }
    return out;
}

std::string profiles_to_csv(const std::vector<MalignancyProfile>& profiles) {
    csv::Writer w({"variable", "level", "count", "malignant", "percent"});
    for (const auto& p : profiles) {
        for (const auto& l : p.levels)
            w.add({p.variable, l.level, std::to_string(l.count), std::to_string(l.malignant),
                   l.percent ? shortest(*l.percent) : "NA"});
    }
    return w.str();
}

std::string profiles_to_json(const std::vector<MalignancyProfile>& profiles) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& p : profiles) {
        nlohmann::ordered_json e;
        e["variable"] = p.variable;
        e["levels"] = nlohmann::ordered_json::array();
        for (const auto& l : p.levels) {
            e["levels"].push_back({{"level", l.level},
                                   {"count", l.count},
                                   {"malignant", l.malignant},
                                   {"percent", l.percent ? nlohmann::ordered_json(*l.percent) : nlohmann::ordered_json(nullptr)}});
        }
        j.push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string profiles_figure_csv(const std::vector<MalignancyProfile>& profiles) {
    csv::Writer w({"variable", "level", "value"});
    for (const auto& p : profiles) {
        for (const auto& l : p.levels) w.add({p.variable, l.level, fixed(l.percent, 2)});
    }
    return w.str();
}

}  // namespace thyroid
