#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

#include "thyroid/csv.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/format.hpp"

namespace thyroid {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<Metric, 6> kReportMetrics{Metric::accuracy, Metric::auroc, Metric::sensitivity,
                                               Metric::specificity, Metric::precision, Metric::f1};

std::string text(const std::optional<double>& v) { return v ? shortest(*v) : std::string("NA"); }

ojson value(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson metric_json(const MetricSet& s) {
    ojson j = ojson::object();
    for (Metric m : kReportMetrics) j[std::string(metric_name(m))] = value(s.get(m));
    return j;
}

ojson params_json(const ModelSpec& spec) {
    ojson j = ojson::object();
    for (const auto& [k, v] : spec.to_map()) j[k] = v;
    j["seed"] = spec.seed();
    return j;
}

ojson degenerate_json(const std::vector<DegenerateFold>& folds) {
    ojson arr = ojson::array();
    for (const auto& d : folds) {
        ojson e = {{"rep", d.rep}, {"fold", d.fold}};
        if (d.replicate >= 0) e["replicate"] = d.replicate;
        arr.push_back(e);
    }
    return arr;
}

}  // namespace

std::string cv_to_csv(const CvResult& r) {
    csv::Writer w({"model", "metric", "statistic", "value"});
    for (const auto& m : r.models) {
        const std::string model(kind_name(m.spec.kind()));
        for (Metric metric : kReportMetrics) {
            const auto& mm = m.mean.at(metric);
            const std::string name(metric_name(metric));
            w.add({model, name, "mean", text(mm.mean)});
            w.add({model, name, "sd", text(mm.sd)});
            w.add({model, name, "defined", std::to_string(mm.defined)});
            w.add({model, name, "undefined", std::to_string(mm.undefined)});
        }
    }
    return w.str();
}

std::string cv_table_csv(const CvResult& r) {
    csv::Row header{"model"};
    for (Metric metric : kModelMetrics) header.emplace_back(metric_name(metric));
    csv::Writer w(header);
    std::array<std::optional<double>, kModelMetrics.size()> best{};
    for (const auto& m : r.models) {
        for (std::size_t c = 0; c < kModelMetrics.size(); ++c) {
            const auto v = m.mean.at(kModelMetrics[c]).mean;
            if (v && (!best[c] || *v > *best[c])) best[c] = v;
        }
    }
    for (const auto& m : r.models) {
        csv::Row row{std::string(kind_display(m.spec.kind()))};
        for (std::size_t c = 0; c < kModelMetrics.size(); ++c) {
            const auto v = m.mean.at(kModelMetrics[c]).mean;
            row.push_back(fixed(v, 4) + (v && best[c] && *v == *best[c] ? "*" : ""));
        }
        w.add(row);
    }
    return w.str();
}

std::string cv_reps_csv(const CvResult& r) {
    csv::Writer w({"model", "rep", "metric", "value"});
    for (const auto& m : r.models) {
        for (std::size_t rep = 0; rep < m.per_rep.size(); ++rep) {
            for (Metric metric : kReportMetrics)
                w.add({std::string(kind_name(m.spec.kind())), std::to_string(rep), std::string(metric_name(metric)),
                       text(m.per_rep[rep].get(metric))});
        }
    }
    return w.str();
}

std::string cv_to_json(const CvResult& r) {
    ojson j;
    j["k"] = r.k;
    j["reps"] = r.reps;
    j["averaging"] = averaging_name(r.averaging);
    j["models"] = ojson::array();
    for (const auto& m : r.models) {
        ojson e;
        e["model"] = kind_name(m.spec.kind());
        e["display"] = kind_display(m.spec.kind());
        e["hyperparameters"] = params_json(m.spec);
        e["threshold"] = m.threshold;
        ojson mean = ojson::object();
        for (Metric metric : kReportMetrics) {
            const auto& mm = m.mean.at(metric);
            mean[std::string(metric_name(metric))] = {
                {"mean", value(mm.mean)}, {"sd", value(mm.sd)}, {"defined", mm.defined}, {"undefined", mm.undefined}};
        }
        e["mean"] = mean;
        ojson reps = ojson::array();
        for (std::size_t rep = 0; rep < m.per_rep.size(); ++rep) {
            const auto& cm = m.confusion_per_rep[rep];
            ojson rj = metric_json(m.per_rep[rep]);
            rj["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
            reps.push_back(rj);
        }
        e["per_rep"] = reps;
        e["degenerate_folds"] = degenerate_json(m.degenerate);
        j["models"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string bootstrap_to_csv(const BootstrapSummary& s) {
    csv::Writer w({"model", "metric", "statistic", "value"});
    for (const auto& m : s.models) {
        const std::string model(kind_name(m.spec.kind()));
        for (Metric metric : kReportMetrics) {
            const auto& d = m.summary.at(metric);
            const std::string name(metric_name(metric));
            w.add({model, name, "n", std::to_string(d.n)});
            w.add({model, name, "undefined", std::to_string(d.undefined)});
            w.add({model, name, "mean", text(d.mean)});
            w.add({model, name, "sd", text(d.sd)});
            w.add({model, name, "q025", text(d.q025)});
            w.add({model, name, "median", text(d.median)});
            w.add({model, name, "q975", text(d.q975)});
        }
    }
    return w.str();
}

std::string bootstrap_table_csv(const BootstrapSummary& s) {
    csv::Writer w({"model", "metric", "lower", "upper", "mean"});
    for (const auto& m : s.models) {
        for (Metric metric : kModelMetrics) {
            const auto& d = m.summary.at(metric);
            w.add({std::string(kind_display(m.spec.kind())), std::string(metric_name(metric)), fixed(d.q025, 4),
                   fixed(d.q975, 4), fixed(d.mean, 4)});
        }
    }
    return w.str();
}

std::string bootstrap_replicates_csv(const BootstrapSummary& s) {
    csv::Writer w({"model", "replicate", "rep", "metric", "value"});
    const auto reps = static_cast<std::size_t>(std::max(1, s.reps));
    for (const auto& m : s.models) {
        for (std::size_t slot = 0; slot < m.replicates.size(); ++slot) {
            for (Metric metric : kReportMetrics)
                w.add({std::string(kind_name(m.spec.kind())), std::to_string(slot / reps), std::to_string(slot % reps),
                       std::string(metric_name(metric)), text(m.replicates[slot].get(metric))});
        }
    }
    return w.str();
}

std::string bootstrap_to_json(const BootstrapSummary& s) {
    ojson j;
    j["replicates"] = s.replicates;
    j["reps"] = s.reps;
    j["resample"] = resample_name(s.resample);
    j["models"] = ojson::array();
    for (const auto& m : s.models) {
        ojson e;
        e["model"] = kind_name(m.spec.kind());
        e["display"] = kind_display(m.spec.kind());
        e["hyperparameters"] = params_json(m.spec);
        e["threshold"] = m.threshold;
        ojson summary = ojson::object();
        for (Metric metric : kReportMetrics) {
            const auto& d = m.summary.at(metric);
            summary[std::string(metric_name(metric))] = {{"n", d.n},
                                                         {"undefined", d.undefined},
                                                         {"mean", value(d.mean)},
                                                         {"sd", value(d.sd)},
                                                         {"q025", value(d.q025)},
                                                         {"median", value(d.median)},
                                                         {"q975", value(d.q975)}};
        }
        e["summary"] = summary;
        e["redraws"] = m.redraws;
        e["degenerate_folds"] = degenerate_json(m.degenerate);
        j["models"].push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace thyroid
