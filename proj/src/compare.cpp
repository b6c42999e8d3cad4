#include "thyroid/compare.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "thyroid/csv.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"
#include "thyroid/schema.hpp"

namespace thyroid {

namespace {

std::size_t column(const csv::Row& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (lower(trim(header[i])) == name) return i;
    }
    throw SchemaError("expert file lacks a '" + std::string(name) + "' column");
}

int parse_location(std::string_view text, std::size_t row) {
    const auto mapping = ColumnMapping::defaults();
    const auto norm = lower(trim(text));
    const auto& values = mapping.fields.at("location").values;
    std::string canonical = norm;
    if (const auto it = values.find(norm); it != values.end()) canonical = it->second;
    const auto level = find_level(Variable::location, canonical);
    if (!level) throw RowError(row, "location", "unknown location '" + std::string(text) + "'");
    return *level;
}

std::optional<int> parse_call(std::string_view text, std::size_t row) {
    const auto v = lower(trim(text));
    if (v.empty() || v == "na" || v == "n/a" || v == "not assessed" || v == "unassessed") return std::nullopt;
    if (v == "malignant" || v == "1") return 1;
    if (v == "benign" || v == "0") return 0;
    throw RowError(row, "prediction", "expected malignant, benign, 1, 0 or NA, got '" + std::string(text) + "'");
}

std::string location_name(int level) {
    return std::string(info(Variable::location).levels[static_cast<std::size_t>(level)]);
}

std::string key_text(const NoduleKey& k) { return k.first + "/" + location_name(k.second); }

}  // namespace

ExpertAssessment parse_expert(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw EmptyDatasetError("expert file is empty");
    const auto& header = rows.front();
    const auto pid = column(header, "patient_id");
    const auto loc = column(header, "location");
    const auto pred = column(header, "prediction");
    ExpertAssessment e;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && trim(row[0]).empty()) continue;
        if (row.size() != header.size())
            throw RowError(r - 1, "", "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
        const std::string id(trim(row[pid]));
        if (id.empty()) throw RowError(r - 1, "patient_id", "empty patient id");
        const NoduleKey key{id, parse_location(row[loc], r - 1)};
        if (e.calls.count(key)) throw RowError(r - 1, "", "duplicate nodule " + key_text(key));
        e.calls.emplace(key, parse_call(row[pred], r - 1));
    }
    return e;
}

ExpertAssessment load_expert(const std::filesystem::path& path) { return parse_expert(csv::read_text(path)); }

std::string expert_to_csv(const ExpertAssessment& e) {
    csv::Writer w({"patient_id", "location", "prediction"});
    for (const auto& [key, call] : e.calls)
        w.add({key.first, location_name(key.second), call ? (*call ? "malignant" : "benign") : "NA"});
    return w.str();
}

void check_expert_keys(const Dataset& ds, const ExpertAssessment& expert) {
    std::set<NoduleKey> keys;
    for (const auto& r : ds.records) keys.insert({r.patient_id, r.level(Variable::location)});
    std::vector<std::string> unknown;
    for (const auto& [key, call] : expert.calls) {
        if (!keys.count(key)) unknown.push_back(key_text(key));
    }
    if (!unknown.empty()) {
        std::string msg = "expert file names " + std::to_string(unknown.size()) + " nodule(s) not in the dataset:";
        for (const auto& k : unknown) msg += " " + k;
        throw DataError(msg);
    }

}

Comparison compare_with_expert(const Dataset& ds, std::span<const int> model_calls, const std::string& model_name,
                               const ExpertAssessment& expert) {
    if (model_calls.size() != ds.size())
        throw InputError("model calls cover " + std::to_string(model_calls.size()) + " nodules, dataset has " +
                         std::to_string(ds.size()));
    check_expert_keys(ds, expert);

    std::vector<int> truth, model_pred, expert_truth, expert_pred;
    Comparison c;
    c.model.assessor = model_name;
    c.expert.assessor = "expert";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds.records[i];
        const int y = *r.malignancy;
        truth.push_back(y);
        model_pred.push_back(model_calls[i]);
        const auto it = expert.calls.find({r.patient_id, r.level(Variable::location)});
        if (it == expert.calls.end() || !it->second) {
            ++c.expert.excluded;
            continue;
        }
        expert_truth.push_back(y);
        expert_pred.push_back(*it->second);
    }
    c.model.confusion = confusion(model_pred, truth);
    c.model.metrics = metrics_from_confusion(c.model.confusion);
    c.expert.confusion = confusion(expert_pred, expert_truth);
    c.expert.metrics = metrics_from_confusion(c.expert.confusion);
    return c;
}

std::string comparison_table_csv(const Comparison& c) {
    csv::Row header{"assessor"};
    for (auto m : kComparisonMetrics) header.emplace_back(metric_name(m));
    header.emplace_back("assessed");
    header.emplace_back("excluded");
    csv::Writer w(header);
    for (const auto* a : {&c.model, &c.expert}) {
        csv::Row row{a->assessor};
        for (auto m : kComparisonMetrics) row.push_back(fixed(a->metrics.get(m), 4));
        row.push_back(std::to_string(a->confusion.total()));
        row.push_back(std::to_string(a->excluded));
        w.add(row);
    }
    return w.str();
}

std::string comparison_confusion_csv(const Comparison& c) {
    csv::Writer w({"assessor", "predicted", "actual_benign", "actual_malignant"});
    for (const auto* a : {&c.model, &c.expert}) {
        w.add({a->assessor, "benign", std::to_string(a->confusion.tn), std::to_string(a->confusion.fn)});
        w.add({a->assessor, "malignant", std::to_string(a->confusion.fp), std::to_string(a->confusion.tp)});
    }
    return w.str();
}

std::string comparison_to_json(const Comparison& c) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto* a : {&c.model, &c.expert}) {
        nlohmann::ordered_json e;
        e["assessor"] = a->assessor;
        e["confusion"] = {{"tp", a->confusion.tp}, {"fp", a->confusion.fp}, {"tn", a->confusion.tn}, {"fn", a->confusion.fn}};
        e["metrics"] = nlohmann::ordered_json::object();
        for (auto m : kComparisonMetrics) {
            const auto v = a->metrics.get(m);
            e["metrics"][std::string(metric_name(m))] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
        }
        e["excluded"] = a->excluded;
        j.push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace thyroid
