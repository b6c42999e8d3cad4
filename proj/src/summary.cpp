#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "thyroid/csv.hpp"
#include "thyroid/data.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {

const NumericSummary& DatasetSummary::numeric_of(Variable v) const {
    for (const auto& n : numeric) {
        if (n.variable == v) return n;
    }
    throw DataError("no numeric summary for '" + std::string(info(v).name) + "'");
}

const CategoricalSummary& DatasetSummary::categorical_of(std::string_view name) const {
    for (const auto& c : categorical) {
        if (c.variable == name) return c;
    }
    throw DataError("no categorical summary for '" + std::string(name) + "'");
}

DatasetSummary summarize(const Dataset& ds) {
    if (ds.empty()) throw EmptyDatasetError("cannot summarize an empty dataset");

    DatasetSummary s;
    s.n_records = ds.size();
    std::set<std::string> patients;
    for (const auto& r : ds.records) patients.insert(r.patient_id);
    s.n_patients = patients.size();

    const double n = static_cast<double>(ds.size());
    for (const auto& p : predictors()) {
        if (p.categorical()) {
            CategoricalSummary c{std::string(p.name), {}};
            std::vector<std::size_t> counts(p.level_count(), 0);
            for (const auto& r : ds.records) ++counts[static_cast<std::size_t>(r.level(p.id))];
            for (std::size_t l = 0; l < counts.size(); ++l)
                c.levels.push_back({std::string(p.levels[l]), counts[l], 100.0 * static_cast<double>(counts[l]) / n});
            s.categorical.push_back(std::move(c));
            continue;
        }
        std::vector<double> x;
        x.reserve(ds.size());
        for (const auto& r : ds.records) x.push_back(r.at(p.id));
        std::sort(x.begin(), x.end());
        NumericSummary ns{p.id};
        ns.count = x.size();
        ns.mean = stats::mean(x);
        ns.sd = stats::sample_sd(x);
        ns.median = stats::quantile_sorted(x, 0.5);
        ns.iqr = stats::quantile_sorted(x, 0.75) - stats::quantile_sorted(x, 0.25);
        ns.min = x.front();
        ns.max = x.back();
        s.numeric.push_back(ns);
    }

    CategoricalSummary label{std::string(kLabelName), {}};
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto& r : ds.records) {
        if (!r.malignancy) throw DataError("record of patient " + r.patient_id + " has no malignancy label");
        ++counts[static_cast<std::size_t>(*r.malignancy)];
    }
    for (std::size_t l = 0; l < 2; ++l)
        label.levels.push_back({std::string(kLabelLevels[l]), counts[l], 100.0 * static_cast<double>(counts[l]) / n});
    s.categorical.push_back(std::move(label));
    return s;
}

namespace {

std::string section_of(Variable v) {
    switch (v) {
        case Variable::age:
        case Variable::sex:
            return "patient";
        case Variable::ft3:
        case Variable::ft4:
        case Variable::tsh:
        case Variable::tpo:
        case Variable::tgab:
            return "test";
        case Variable::thyroid_echogenicity:
            return "thyroid";
        default:
            return "nodule";
    }
}

}  // namespace

std::string summary_to_csv(const DatasetSummary& s) {
    csv::Writer out({"section", "characteristic", "statistic", "value", "percentage"});
    out.add({"cohort", "nodules", "count", std::to_string(s.n_records), ""});
    out.add({"cohort", "patients", "count", std::to_string(s.n_patients), ""});

    auto numeric_rows = [&](const NumericSummary& n) {
        const auto& p = info(n.variable);
        if (p.summary_style == NumericSummaryStyle::median_iqr) {
            out.add({section_of(n.variable), std::string(p.name), "median_iqr", fixed(n.median, 2) + " ± " + fixed(n.iqr, 2), ""});
        } else {
            out.add({section_of(n.variable), std::string(p.name), "mean_sd", fixed(n.mean, 2) + " ± " + fixed(n.sd, 2), ""});
        }
        if (n.variable == Variable::age)
            out.add({section_of(n.variable), std::string(p.name), "range", shortest(n.min) + " – " + shortest(n.max), ""});
    };
    auto categorical_rows = [&](const std::string& section, const CategoricalSummary& c) {
        for (const auto& l : c.levels)
            out.add({section, c.variable, l.level, std::to_string(l.count), fixed(l.percent, 2) + "%"});
    };

    for (const auto& p : predictors()) {
        if (p.categorical()) categorical_rows(section_of(p.id), s.categorical_of(p.name));
        else numeric_rows(s.numeric_of(p.id));
    }
    categorical_rows("response", s.categorical_of(kLabelName));
    return out.str();
}

std::string summary_to_json(const DatasetSummary& s) {
    nlohmann::ordered_json j;
    j["nodules"] = s.n_records;
    j["patients"] = s.n_patients;
    auto& numeric = j["numeric"] = nlohmann::ordered_json::object();
    for (const auto& n : s.numeric) {
        numeric[std::string(info(n.variable).name)] = {
            {"count", n.count}, {"mean", n.mean},     {"sd", n.sd},   {"median", n.median},
            {"iqr", n.iqr},     {"min", n.min},       {"max", n.max},
        };
    }
    auto& categorical = j["categorical"] = nlohmann::ordered_json::object();
    for (const auto& c : s.categorical) {
        auto& levels = categorical[c.variable] = nlohmann::ordered_json::object();
        for (const auto& l : c.levels) levels[l.level] = {{"count", l.count}, {"percent", l.percent}};
    }
    return j.dump(2) + "\n";
}

}  // namespace thyroid
