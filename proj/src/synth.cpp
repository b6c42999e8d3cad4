#include <algorithm>
#include <cmath>

#include "thyroid/data.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/rng.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {
namespace {

// Standard normal quantile at 0.75.
constexpr double kQ75 = 0.6744897501960817;

// Nodules per patient and location sets. The mix reproduces the reference
// cohort's 1.7 nodules per patient and its right/left/isthmus shares.
constexpr std::array<double, 3> kNoduleCountWeights{0.34, 0.62, 0.04};
constexpr std::array<double, 3> kSingleLocationWeights{0.48, 0.45, 0.07};  // right, left, isthmus
constexpr std::array<std::array<int, 2>, 3> kLocationPairs{{{0, 1}, {1, 2}, {0, 2}}};
constexpr std::array<double, 3> kLocationPairWeights{0.88, 0.05, 0.07};

constexpr std::uint64_t kCalibrationSeed = 0x5EED'CA11'B7A7'0001ULL;
constexpr std::size_t kCalibrationDraws = 20000;

int draw_level(Rng& rng, Variable v) {
    const auto counts = info(v).reference_counts;
    std::vector<double> w(counts.begin(), counts.end());
    return static_cast<int>(rng.categorical(w));
}

double draw_lognormal(Rng& rng, Variable v) {
    const auto ln = lognormal_for(v);
    return std::exp(ln.mu + ln.sigma * rng.normal());
}

int draw_age(Rng& rng) {
    const auto& a = info(Variable::age);
    while (true) {
        const double x = a.reference_center + a.reference_spread * rng.normal();
        const double r = std::round(x);
        if (r >= kReferenceAgeMin && r <= kReferenceAgeMax) return static_cast<int>(r);
    }
}

// Patient-level fields: demographics, blood tests, thyroid background.
void draw_patient_fields(Rng& rng, NoduleRecord& base) {
    base.set(Variable::age, draw_age(rng));
    base.set(Variable::sex, draw_level(rng, Variable::sex));
    for (auto v : {Variable::ft3, Variable::ft4, Variable::tsh, Variable::tpo, Variable::tgab})
        base.set(v, draw_lognormal(rng, v));
    base.set(Variable::thyroid_echogenicity, draw_level(rng, Variable::thyroid_echogenicity));
}

void draw_nodule_fields(Rng& rng, NoduleRecord& rec) {
    rec.set(Variable::size, draw_lognormal(rng, Variable::size));
    for (auto v : {Variable::multifocality, Variable::shape, Variable::margin, Variable::calcification,
                   Variable::nodule_echogenicity, Variable::blood_flow, Variable::composition, Variable::laterality})
        rec.set(v, draw_level(rng, v));
}

}  // namespace

LogNormal lognormal_for(Variable v) {
    const auto& p = info(v);
    if (v == Variable::size) {
        const double cv = p.reference_spread / p.reference_center;
        const double s2 = std::log1p(cv * cv);
        return {std::log(p.reference_center) - 0.5 * s2, std::sqrt(s2)};
    }
    if (p.summary_style == NumericSummaryStyle::median_iqr)
        return {std::log(p.reference_center), std::asinh(p.reference_spread / (2.0 * p.reference_center)) / kQ75};
    throw ConfigError("'" + std::string(p.name) + "' has no log-normal marginal");
}

double generator_z(Variable v, double value) {
    const auto& p = info(v);
    if (p.categorical()) throw ConfigError("'" + std::string(p.name) + "' is not numeric");
    if (v == Variable::age) return (value - p.reference_center) / p.reference_spread;
    const auto ln = lognormal_for(v);
    return (std::log(value) - ln.mu) / ln.sigma;
}

SignalMap default_signal() {
    return {
        {"calcification=present", 3.0},
        {"blood_flow=enriched", 3.0},
        {"composition=solid", 3.0},
        {"size", 2.5},
    };
}

SignalModel::SignalModel(const SignalMap& signal) {
    for (const auto& [key, weight] : signal) {
        const auto eq = key.find('=');
        const std::string name = key.substr(0, eq);
        const auto var = find_variable(name);
        if (!var) throw ConfigError("unknown signal variable '" + name + "'");
        if (!std::isfinite(weight)) throw ConfigError("signal weight for '" + key + "' is not finite");
        Term term{*var, std::nullopt, weight};
        if (info(*var).categorical()) {
            if (eq == std::string::npos)
                throw ConfigError("categorical signal term '" + key + "' needs a level, e.g. '" + name + "=" +
                                  std::string(info(*var).levels.back()) + "'");
            const auto level = find_level(*var, key.substr(eq + 1));
            if (!level) throw ConfigError("unknown level in signal term '" + key + "'");
            term.level = level;
        } else if (eq != std::string::npos) {
            throw ConfigError("numeric signal term '" + key + "' takes no level");
        }
        terms_.push_back(term);
    }

    const bool all_zero = std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.weight == 0.0; });
    if (all_zero) {
        intercept_ = stats::logit(kReferenceMalignantFraction);
        return;
    }

    // Calibrate the intercept on a fixed reference sample by bisection.
    std::vector<double> eta;
    eta.reserve(kCalibrationDraws);
    Rng rng(kCalibrationSeed);
    for (std::size_t i = 0; i < kCalibrationDraws; ++i) {
        NoduleRecord r;
        draw_patient_fields(rng, r);
        draw_nodule_fields(rng, r);
        r.set(Variable::location, static_cast<int>(rng.categorical(kSingleLocationWeights)));
        eta.push_back(linear_predictor(r));
    }
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        double mean_p = 0.0;
        for (double e : eta) mean_p += stats::sigmoid(mid + e);
        mean_p /= static_cast<double>(eta.size());
        (mean_p < kReferenceMalignantFraction ? lo : hi) = mid;
    }
    intercept_ = 0.5 * (lo + hi);
}

double SignalModel::linear_predictor(const NoduleRecord& r) const {
    double eta = 0.0;
    for (const auto& t : terms_) {
        if (t.level) eta += r.level(t.variable) == *t.level ? t.weight : 0.0;
        else eta += t.weight * generator_z(t.variable, r.at(t.variable));
    }
    return eta;
}

double SignalModel::probability(const NoduleRecord& r) const { return stats::sigmoid(intercept_ + linear_predictor(r)); }

Dataset synthesize(std::size_t n_patients, std::uint64_t seed, const SignalMap& signal) {
    if (n_patients < 10) throw ConfigError("synthesize needs at least 10 patients");
    const SignalModel model(signal);

    Dataset ds;
    ds.provenance = Provenance::synthetic;
    for (std::size_t p = 0; p < n_patients; ++p) {
        Rng rng(seed, {p});
        NoduleRecord base;
        base.patient_id = std::to_string(p + 1);
        draw_patient_fields(rng, base);

        std::vector<int> locations;
        switch (rng.categorical(kNoduleCountWeights)) {
            case 0:
                locations = {static_cast<int>(rng.categorical(kSingleLocationWeights))};
                break;
            case 1: {
                const auto& pair = kLocationPairs[rng.categorical(kLocationPairWeights)];
                locations = {pair[0], pair[1]};
                break;
            }
            default:
                locations = {0, 1, 2};
        }
        std::sort(locations.begin(), locations.end());

        for (int loc : locations) {
            NoduleRecord rec = base;
            rec.set(Variable::location, loc);
            draw_nodule_fields(rng, rec);
            rec.malignancy = rng.bernoulli(model.probability(rec)) ? 1 : 0;
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

}  // namespace thyroid
