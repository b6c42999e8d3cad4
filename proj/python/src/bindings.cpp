#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "thyroid/compare.hpp"
#include "thyroid/config.hpp"
#include "thyroid/data.hpp"
#include "thyroid/encode.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/importance.hpp"
#include "thyroid/metrics.hpp"
#include "thyroid/pipeline.hpp"

namespace py = pybind11;
using namespace thyroid;

namespace {

std::vector<int> all_rows(const EncodedMatrix& m) {
    std::vector<int> rows(static_cast<std::size_t>(m.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    return rows;
}

ModelKind kind_of(const std::string& name) {
    const auto k = find_kind(name);
    if (!k) throw ConfigError("unknown model '" + name + "'");
    return *k;
}

ModelSpec make_spec(const std::string& kind, std::uint64_t seed, const std::map<std::string, std::string>& params) {
    ModelSpec spec(kind_of(kind), seed);
    for (const auto& [key, value] : params) spec.set(key, value);
    return spec;
}

py::dict metric_dict(const MetricSet& m) {
    py::dict d;
    for (auto metric : kAllMetrics) {
        const auto v = m.get(metric);
        d[py::str(std::string(metric_name(metric)))] = v ? py::object(py::float_(*v)) : py::object(py::none());
    }
    return d;
}

using Command = std::vector<std::filesystem::path> (*)(const RunConfig&);

Command command_of(const std::string& name) {
    static const std::map<std::string, Command> commands{
        {"summarize", cmd_summarize}, {"cv", cmd_cv},       {"bootstrap", cmd_bootstrap}, {"importance", cmd_importance},
        {"compare", cmd_compare},     {"synth", cmd_synth}, {"all", cmd_all},
    };
    const auto it = commands.find(name);
    if (it == commands.end()) throw ConfigError("unknown command '" + name + "'");
    return it->second;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Thyroid nodule malignancy models";

    auto error = py::register_exception<Error>(mod, "Error", PyExc_RuntimeError);
    auto config_error = py::register_exception<ConfigError>(mod, "ConfigError", error.ptr());
    auto data_error = py::register_exception<DataError>(mod, "DataError", error.ptr());
    auto computation_error = py::register_exception<ComputationError>(mod, "ComputationError", error.ptr());
    (void)config_error;
    (void)data_error;
    (void)computation_error;

    py::class_<Dataset>(mod, "Dataset")
        .def("__len__", &Dataset::size)
        .def("to_csv", [](const Dataset& ds) { return to_csv(ds); })
        .def("summary_json", [](const Dataset& ds) { return summary_to_json(summarize(ds)); })
        .def_property_readonly("patient_ids", [](const Dataset& ds) {
            std::vector<std::string> ids;
            for (const auto& r : ds.records) ids.push_back(r.patient_id);
            return ids;
        });

    mod.def("load_csv",
            [](const std::filesystem::path& path, std::optional<std::filesystem::path> mapping) {
                return load_csv(path, mapping ? ColumnMapping::load(*mapping) : ColumnMapping::defaults());
            },
            py::arg("path"), py::arg("mapping") = py::none());
    mod.def("parse_csv", [](const std::string& text) { return parse_csv_dataset(text, ColumnMapping::defaults()); },
            py::arg("text"));
    mod.def("synthesize", [](std::size_t n, std::uint64_t seed) { return synthesize(n, seed); }, py::arg("n_patients"),
            py::arg("seed") = 1);
    mod.def("preprocess", &preprocess, py::arg("dataset"));

    py::class_<EncodedMatrix>(mod, "EncodedMatrix")
        .def_property_readonly("values", [](const EncodedMatrix& m) { return m.values; })
        .def_readonly("labels", &EncodedMatrix::labels)
        .def_readonly("groups", &EncodedMatrix::groups)
        .def_property_readonly("column_names",
                               [](const EncodedMatrix& m) {
                                   std::vector<std::string> names;
                                   for (const auto& c : m.columns) names.push_back(c.name);
                                   return names;
                               })
        .def("variable_names", &EncodedMatrix::variable_names)
        .def("columns_of", &EncodedMatrix::columns_of, py::arg("variable"));
    mod.def("encode", [](const Dataset& ds) { return encode(ds); }, py::arg("dataset"));

    mod.def("auroc",
            [](const std::vector<double>& scores, const std::vector<int>& truth) { return auroc(scores, truth); },
            py::arg("scores"), py::arg("truth"));
    mod.def("metrics_from_confusion",
            [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
                return metric_dict(metrics_from_confusion({tp, fp, tn, fn}));
            },
            py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));
    mod.def("evaluate_scores",
            [](const std::vector<double>& scores, const std::vector<int>& truth, double threshold) {
                return metric_dict(evaluate_scores(scores, truth, threshold));
            },
            py::arg("scores"), py::arg("truth"), py::arg("threshold"));

    py::class_<TrainedModel>(mod, "TrainedModel")
        .def_property_readonly("kind", [](const TrainedModel& m) { return std::string(kind_name(m.kind())); })
        .def_property_readonly("default_threshold", &TrainedModel::default_threshold)
        .def("score", [](const TrainedModel& model, const EncodedMatrix& m,
                         std::optional<std::vector<int>> rows) { return score(model, m, rows ? *rows : all_rows(m)); },
             py::arg("encoded"), py::arg("rows") = py::none())
        .def("to_json", [](const TrainedModel& m) { return m.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) { return TrainedModel::from_json(nlohmann::json::parse(text)); });

    mod.def("train",
            [](const std::string& kind, const EncodedMatrix& m, std::optional<std::vector<int>> rows, std::uint64_t seed,
               const std::map<std::string, std::string>& params) {
                return train(make_spec(kind, seed, params), m, rows ? *rows : all_rows(m));
            },
            py::arg("kind"), py::arg("encoded"), py::arg("rows") = py::none(), py::arg("seed") = 1,
            py::arg("params") = std::map<std::string, std::string>{});

    mod.def("model_kinds", [] {
        std::vector<std::string> names;
        for (auto k : kAllModelKinds) names.emplace_back(kind_name(k));
        return names;
    });

    mod.def("run_cv_json",
            [](const EncodedMatrix& m, const std::vector<std::string>& kinds, int k, int reps, std::uint64_t seed,
               std::size_t workers, const std::map<std::string, std::map<std::string, std::string>>& params) {
                std::vector<ModelSpec> specs;
                for (const auto& kind : kinds) {
                    const auto it = params.find(kind);
                    specs.push_back(make_spec(kind, seed, it == params.end() ? std::map<std::string, std::string>{} : it->second));
                }
                CvOptions o;
                o.workers = workers;
                py::gil_scoped_release release;
                return cv_to_json(run_cv(m, specs, make_fold_plan(patients_of(m), k, reps, seed), o));
            },
            py::arg("encoded"), py::arg("kinds"), py::arg("k") = 10, py::arg("reps") = 1, py::arg("seed") = 1,
            py::arg("workers") = 1, py::arg("params") = std::map<std::string, std::map<std::string, std::string>>{});

    mod.def("importance_json",
            [](const EncodedMatrix& m, const std::vector<std::string>& kinds, int k, int reps, int shuffle_reps,
               std::uint64_t seed, std::size_t workers) {
                std::vector<ModelSpec> specs;
                for (const auto& kind : kinds) specs.push_back(ModelSpec(kind_of(kind), seed));
                ImportanceOptions o;
                o.shuffle_reps = shuffle_reps;
                o.seed = seed;
                o.workers = workers;
                py::gil_scoped_release release;
                const auto per_model = cv_importance(m, specs, make_fold_plan(patients_of(m), k, reps, seed), o);
                return importance_to_json(aggregate_importance(per_model, shuffle_reps));
            },
            py::arg("encoded"), py::arg("kinds"), py::arg("k") = 10, py::arg("reps") = 1, py::arg("shuffle_reps") = 10,
            py::arg("seed") = 1, py::arg("workers") = 1);

    mod.def("run_command",
            [](const std::string& command, const std::string& config_text, const std::filesystem::path& out,
               std::size_t workers) {
                auto config = parse_config(config_text);
                config.out = out;
                config.workers = workers;
                const auto run = command_of(command);
                py::gil_scoped_release release;
                return run(config);
            },
            py::arg("command"), py::arg("config_text"), py::arg("out"), py::arg("workers") = 1);
}
