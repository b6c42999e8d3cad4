#pragma once

#include <string>
#include <vector>

#include "thyroid/data.hpp"
#include "thyroid/schema.hpp"

namespace fixtures {

// A complete record with every categorical at its reference level.
inline thyroid::NoduleRecord record(std::string pid, int location, double size, int malignant) {
    using thyroid::Variable;
    thyroid::NoduleRecord r;
    r.patient_id = std::move(pid);
    for (const auto& p : thyroid::predictors()) r.set(p.id, p.categorical() ? 0.0 : 1.0);
    r.set(Variable::age, 45);
    r.set(Variable::location, location);
    r.set(Variable::size, size);
    r.malignancy = malignant;
    return r;
}

inline thyroid::Dataset dataset(std::vector<thyroid::NoduleRecord> records) {
    thyroid::Dataset ds;
    ds.records = std::move(records);
    return ds;
}

}  // namespace fixtures
