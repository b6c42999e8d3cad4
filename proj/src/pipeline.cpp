#include "thyroid/pipeline.hpp"

#include <algorithm>

#include "thyroid/compare.hpp"
#include "thyroid/csv.hpp"
#include "thyroid/encode.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/format.hpp"
#include "thyroid/importance.hpp"
#include "thyroid/parallel.hpp"

namespace thyroid {

namespace {

class OutputDir {
public:
    explicit OutputDir(const RunConfig& config) : dir_(config.out) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
        write(files::kConfig, config.to_text());
    }

    void write(const char* name, const std::string& text) {
        const auto path = dir_ / name;
        csv::write_text(path, text);
        if (std::find(written_.begin(), written_.end(), path) == written_.end()) written_.push_back(path);
    }

    std::vector<std::filesystem::path> written() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
};

struct Prepared {
    Dataset ds;
    EncodedMatrix m;
    FoldPlan plan;
};

Prepared prepare(const RunConfig& config) {
    config.validate(true);
    auto ds = load_dataset(config);
    auto m = encode(ds);
    auto plan = make_fold_plan(patients_of(m), config.k, config.reps, config.seed);
    return {std::move(ds), std::move(m), std::move(plan)};
}

CvOptions cv_options(const RunConfig& config) {
    CvOptions o;
    o.averaging = config.averaging;
    o.threshold = config.threshold;
    o.workers = config.workers;
    return o;
}

ImportanceOptions importance_options(const RunConfig& config) {
    ImportanceOptions o;
    o.shuffle_reps = config.shuffle_reps;
    o.seed = config.seed;
    o.workers = config.workers;
    return o;
}

std::string location_name(int level) {
    return std::string(info(Variable::location).levels[static_cast<std::size_t>(level)]);
}

// Held-out scores of the first repetition, one column per model.
std::string predictions_csv(const Dataset& ds, const CvResult& cv) {
    csv::Row header{"patient_id", "location", "malignancy"};
    for (const auto& mc : cv.models) header.emplace_back(kind_name(mc.spec.kind()));
    csv::Writer w(header);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.records[i];
        csv::Row row{r.patient_id, location_name(r.level(Variable::location)), std::to_string(*r.malignancy)};
        for (const auto& mc : cv.models) row.push_back(shortest(mc.scores.front()[i]));
        w.add(row);
    }
    return w.str();
}

void write_cv(OutputDir& out, const Dataset& ds, const CvResult& cv) {
    out.write(files::kCvTable, cv_table_csv(cv));
    out.write(files::kCvCsv, cv_to_csv(cv));
    out.write(files::kCvJson, cv_to_json(cv));
    out.write(files::kCvReps, cv_reps_csv(cv));
    out.write(files::kCvPredictions, predictions_csv(ds, cv));
}

void write_importance(OutputDir& out, const RunConfig& config, const Dataset& ds,
                      const std::vector<ModelImportance>& per_model) {
    const auto table = aggregate_importance(per_model, config.shuffle_reps);
    out.write(files::kImportanceFigure, importance_figure_csv(table));
    out.write(files::kImportanceCsv, importance_to_csv(table));
    out.write(files::kImportanceJson, importance_to_json(table));
    const auto profiles = all_profiles(ds, config.size_threshold, config.size_bins);
    out.write(files::kProfilesFigure, profiles_figure_csv(profiles));
    out.write(files::kProfilesCsv, profiles_to_csv(profiles));
    out.write(files::kProfilesJson, profiles_to_json(profiles));
}

void run_bootstrap_stage(OutputDir& out, const RunConfig& config, const Prepared& p) {
    if (config.bootstrap_reps < 1) throw ConfigError("bootstrap.reps must be at least 1 for the bootstrap command");
    BootstrapOptions bo;
    bo.replicates = config.bootstrap_reps;
    bo.resample = config.resample;
    bo.seed = config.seed;
    bo.cv = cv_options(config);
    const auto bs = run_bootstrap(p.m, config.specs(), p.plan, bo);
    out.write(files::kBootstrapTable, bootstrap_table_csv(bs));
    out.write(files::kBootstrapCsv, bootstrap_to_csv(bs));
    out.write(files::kBootstrapJson, bootstrap_to_json(bs));
    out.write(files::kBootstrapReplicates, bootstrap_replicates_csv(bs));
}

void run_compare_stage(OutputDir& out, const RunConfig& config, const Prepared& p, const CvResult* cv) {
    if (!config.expert) throw ConfigError("compare needs an expert file: set expert.path (--expert)");
    const auto expert = load_expert(*config.expert);
    check_expert_keys(p.ds, expert);
    const ModelCv* mc = nullptr;
    std::optional<CvResult> own;
    if (cv) {
        for (const auto& candidate : cv->models) {
            if (candidate.spec.kind() == config.compare_model) mc = &candidate;
        }
    }
    if (!mc) {
        // The first repetition does not depend on how many repetitions follow.
        const auto plan = make_fold_plan(patients_of(p.m), config.k, 1, config.seed);
        own = run_cv(p.m, {config.spec_of(config.compare_model)}, plan, cv_options(config));
        mc = &own->models.front();
    }
    std::vector<int> calls;
    for (double s : mc->scores.front()) calls.push_back(s >= mc->threshold ? 1 : 0);
    const auto c = compare_with_expert(p.ds, calls, std::string(kind_name(config.compare_model)), expert);
    out.write(files::kComparisonTable, comparison_table_csv(c));
    out.write(files::kComparisonConfusion, comparison_confusion_csv(c));
    out.write(files::kComparisonJson, comparison_to_json(c));
}

}  // namespace

Dataset load_dataset(const RunConfig& config) {
    if (config.data) {
        const auto mapping = config.mapping ? ColumnMapping::load(*config.mapping) : ColumnMapping::defaults();
        return preprocess(load_csv(*config.data, mapping));
    }
    if (config.synthetic) return preprocess(synthesize(config.synth_patients, config.seed, config.signal));
    throw ConfigError("no data source: set data.path (--data) or data.synthetic = true");
}

std::vector<std::filesystem::path> cmd_summarize(const RunConfig& config) {
    config.validate(true);
    const auto ds = load_dataset(config);
    OutputDir out(config);
    const auto s = summarize(ds);
    out.write(files::kSummaryCsv, summary_to_csv(s));
    out.write(files::kSummaryJson, summary_to_json(s));
    return out.written();
}

std::vector<std::filesystem::path> cmd_cv(const RunConfig& config) {
    const auto p = prepare(config);
    OutputDir out(config);
    write_cv(out, p.ds, run_cv(p.m, config.specs(), p.plan, cv_options(config)));
    return out.written();
}

std::vector<std::filesystem::path> cmd_bootstrap(const RunConfig& config) {
    const auto p = prepare(config);
    if (config.bootstrap_reps < 1) throw ConfigError("bootstrap.reps must be at least 1 for the bootstrap command");
    OutputDir out(config);
    run_bootstrap_stage(out, config, p);
    return out.written();
}

std::vector<std::filesystem::path> cmd_importance(const RunConfig& config) {
    const auto p = prepare(config);
    OutputDir out(config);
    const auto per_model = cv_importance(p.m, config.specs(), p.plan, importance_options(config));
    write_importance(out, config, p.ds, per_model);
    return out.written();
}

std::vector<std::filesystem::path> cmd_compare(const RunConfig& config) {
    const auto p = prepare(config);
    if (!config.expert) throw ConfigError("compare needs an expert file: set expert.path (--expert)");
    OutputDir out(config);
    run_compare_stage(out, config, p, nullptr);
    return out.written();
}

std::vector<std::filesystem::path> cmd_synth(const RunConfig& config) {
    config.validate(false);
    OutputDir out(config);
    out.write(files::kSynthetic, to_csv(synthesize(config.synth_patients, config.seed, config.signal)));
    return out.written();
}

std::vector<std::filesystem::path> cmd_all(const RunConfig& config) {
    const auto p = prepare(config);
    if (config.expert) check_expert_keys(p.ds, load_expert(*config.expert));
    OutputDir out(config);
    const auto s = summarize(p.ds);
    out.write(files::kSummaryCsv, summary_to_csv(s));
    out.write(files::kSummaryJson, summary_to_json(s));

    const auto both = run_cv_importance(p.m, config.specs(), p.plan, cv_options(config), importance_options(config));
    write_cv(out, p.ds, both.cv);
    if (config.bootstrap_reps > 0) run_bootstrap_stage(out, config, p);
    write_importance(out, config, p.ds, both.importance);
    if (config.expert) run_compare_stage(out, config, p, &both.cv);
    return out.written();
}

}  // namespace thyroid
