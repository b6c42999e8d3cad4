#include "thyroid/encode.hpp"

#include <iostream>

#include "thyroid/errors.hpp"

namespace thyroid {

const std::vector<int>& EncodedMatrix::columns_of(const std::string& variable) const {
    const auto it = var_columns.find(variable);
    if (it == var_columns.end()) throw ConfigError("unknown variable '" + variable + "'");
    return it->second;
}

std::vector<std::string> EncodedMatrix::variable_names() const {
    std::vector<std::string> names;
    for (const auto& p : predictors()) {
        if (var_columns.contains(std::string(p.name))) names.emplace_back(p.name);
    }
    return names;
}

std::vector<EncodedColumn> encoded_layout() {
    std::vector<EncodedColumn> cols;
    for (const auto& p : predictors()) {
        if (!p.categorical()) {
            cols.push_back({std::string(p.name), p.id, std::nullopt});
            continue;
        }
        for (std::size_t l = 1; l < p.level_count(); ++l)
            cols.push_back({std::string(p.name) + "=" + std::string(p.levels[l]), p.id, static_cast<int>(l)});
    }
    return cols;
}

EncodedMatrix encode(const Dataset& ds, bool standardize) {
    if (ds.empty()) throw EmptyDatasetError("cannot encode an empty dataset");

    EncodedMatrix m;
    m.columns = encoded_layout();
    const auto n = static_cast<Eigen::Index>(ds.size());
    const auto p = static_cast<Eigen::Index>(m.columns.size());
    m.values.resize(n, p);
    m.labels.reserve(ds.size());
    m.groups.reserve(ds.size());

    for (Eigen::Index j = 0; j < p; ++j)
        m.var_columns[std::string(info(m.columns[j].variable).name)].push_back(static_cast<int>(j));

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = ds.records[static_cast<std::size_t>(i)];
        if (!rec.complete()) throw DataError("record of patient " + rec.patient_id + " is incomplete; preprocess first");
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& col = m.columns[j];
            const double v = rec.at(col.variable);
            m.values(i, j) = col.level ? (static_cast<int>(v) == *col.level ? 1.0 : 0.0) : v;
        }
        m.labels.push_back(*rec.malignancy);
        m.groups.push_back(rec.patient_id);
        m.locations.emplace_back(info(Variable::location).levels[static_cast<std::size_t>(rec.level(Variable::location))]);
    }

    m.scaling.mean = Eigen::VectorXd::Zero(p);
    m.scaling.sd = Eigen::VectorXd::Ones(p);
    if (standardize) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!m.columns[j].numeric()) continue;
            const double mean = m.values.col(j).mean();
            double sd = 0.0;
            if (n > 1) sd = std::sqrt((m.values.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
            if (!(sd > 0.0)) {
                std::cerr << "warning: column '" << m.columns[j].name << "' is constant; SD clamped to 1\n";
                sd = 1.0;
            }
            m.scaling.mean[j] = mean;
            m.scaling.sd[j] = sd;
            m.values.col(j) = (m.values.col(j).array() - mean) / sd;
        }
        m.standardized = true;
    }
    return m;
}

NoduleRecord decode_row(const EncodedMatrix& m, Eigen::Index row) {
    NoduleRecord rec;
    rec.patient_id = m.groups.at(static_cast<std::size_t>(row));
    rec.malignancy = m.labels.at(static_cast<std::size_t>(row));
    for (const auto& p : predictors()) {
        const auto& cols = m.columns_of(std::string(p.name));
        if (!p.categorical()) {
            const int j = cols.front();
            double v = m.values(row, j) * m.scaling.sd[j] + m.scaling.mean[j];
            if (p.kind == VarKind::integer) v = std::round(v);
            rec.set(p.id, v);
            continue;
        }
        int level = 0;
        for (int j : cols) {
            if (m.values(row, j) == 1.0) level = *m.columns[static_cast<std::size_t>(j)].level;
        }
        rec.set(p.id, level);
    }
    return rec;
}

}  // namespace thyroid
