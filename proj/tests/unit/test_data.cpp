#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "thyroid/csv.hpp"
#include "thyroid/encode.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/stats.hpp"

using namespace thyroid;

namespace {

const char* kHeader =
    "patient_id,age,sex,ft3,ft4,tsh,tpo,tgab,thyroid_echogenicity,size,location,multifocality,shape,margin,"
    "calcification,nodule_echogenicity,blood_flow,composition,laterality,malignancy\n";

std::string three_rows() {
    return std::string(kHeader) +
           "1,40,female,4.1,14.2,1.3,0.5,2.0,even,1.2,right,unifocal,regular,clear,absent,hypo,normal,solid,unilateral,benign\n"
           "1,40,female,4.1,14.2,1.3,0.5,2.0,even,2.0,left,multifocal,irregular,unclear,present,hypo,enriched,solid,multilateral,malignant\n"
           "2,63,male,3.9,15.0,2.2,0.4,1.1,uneven,0.7,isthmus,unifocal,regular,clear,absent,isoechoic,normal,mixed,unilateral,benign\n";
}

std::string drop_column(const std::string& text, const std::string& name) {
    const auto rows = csv::parse(text);
    const auto it = std::find(rows[0].begin(), rows[0].end(), name);
    REQUIRE(it != rows[0].end());
    const auto idx = static_cast<std::size_t>(it - rows[0].begin());
    std::string out;
    for (auto row : rows) {
        row.erase(row.begin() + static_cast<long>(idx));
        out += csv::format_row(row) + "\n";
    }
    return out;
}

std::map<std::string, std::size_t> recount(const Dataset& ds, Variable v) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : ds.records) counts[std::string(info(v).levels[static_cast<std::size_t>(r.level(v))])]++;
    return counts;
}

}  // namespace

TEST_CASE("well-formed file loads one record per row") {
    const auto ds = parse_csv_dataset(three_rows(), ColumnMapping::defaults());
    CHECK(ds.size() == 3);
    CHECK(ds.issues.empty());
    CHECK(ds.records[1].level(Variable::calcification) == 1);
    CHECK(ds.records[2].level(Variable::location) == *find_level(Variable::location, "isthmus"));
    CHECK(*ds.records[1].malignancy == 1);
    CHECK(ds.records[2].at(Variable::size) == doctest::Approx(0.7));
}

TEST_CASE("missing mapped column is a schema error naming it") {
    const auto text = drop_column(three_rows(), "calcification");
    try {
        parse_csv_dataset(text, ColumnMapping::defaults());
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("calcification") != std::string::npos);
    }
}

TEST_CASE("unparseable cells are recorded with row and field, never coerced") {
    const std::string text =
        std::string(kHeader) +
        "1,forty,female,4.1,14.2,1.3,0.5,2.0,even,1.2,right,unifocal,regular,clear,absent,hypo,normal,solid,unilateral,benign\n"
        "2,50,female,4.1,14.2,1.3,0.5,2.0,even,1.2,right,unifocal,regular,clear,maybe,hypo,normal,solid,unilateral,benign\n"
        "3,50,female,4.1,14.2,1.3,0.5,2.0,even,-1,right,unifocal,regular,clear,absent,hypo,normal,solid,unilateral,benign\n";
    const auto ds = parse_csv_dataset(text, ColumnMapping::defaults());
    REQUIRE(ds.issues.size() == 3);
    CHECK(ds.issues[0].row == 0);
    CHECK(ds.issues[0].field == "age");
    CHECK(ds.issues[1].row == 1);
    CHECK(ds.issues[1].field == "calcification");
    CHECK(ds.issues[2].field == "size");
    CHECK_FALSE(ds.records[0].get(Variable::age).has_value());
    CHECK_THROWS_AS(preprocess(ds), EmptyDatasetError);

    try {
        parse_csv_dataset(text, ColumnMapping::defaults(), LoadOptions{.strict = true});
        FAIL("expected a row error");
    } catch (const RowError& e) {
        CHECK(e.row() == 0);
        CHECK(e.field() == "age");
    }
}

TEST_CASE("missing tokens and aliases") {
    std::string text = std::string(kHeader) +
                       "7,40,F,4.1,14.2,NA,0.5,2.0,even,1.2,Right Lobe,unifocal,regular,clear,absent,hypo,normal,solid,unilateral,malignant\n"
                       "8,41,M,4.1,14.2,N/A,0.5,\"\",even,1.2,R,unifocal,regular,clear,absent,hypo,normal,solid,unilateral,benign\n";
    const auto ds = parse_csv_dataset(text, ColumnMapping::defaults());
    CHECK(ds.issues.empty());
    CHECK(ds.records[0].level(Variable::sex) == *find_level(Variable::sex, "female"));
    CHECK(ds.records[0].level(Variable::location) == *find_level(Variable::location, "right"));
    CHECK_FALSE(ds.records[0].get(Variable::tsh).has_value());
    CHECK_FALSE(ds.records[1].get(Variable::tgab).has_value());
}

TEST_CASE("column mapping text round trip and overrides") {
    const auto defaults = ColumnMapping::defaults();
    CHECK(ColumnMapping::parse(defaults.to_text()) == defaults);

    const auto m = ColumnMapping::parse(
        "# custom export\n"
        "column.calcification = Calc Flag\n"
        "value.calcification.present = yes | 1\n"
        "value.calcification.absent = no | 0\n");
    CHECK(m.fields.at("calcification").columns == std::vector<std::string>{"Calc Flag"});
    CHECK(m.fields.at("calcification").values.size() == 4);
    CHECK(ColumnMapping::parse(m.to_text()) == m);

    std::string text = three_rows();
    const auto pos = text.find("calcification");
    text.replace(pos, std::string("calcification").size(), "Calc Flag");
    for (auto [from, to] : {std::pair{",absent,", ",no,"}, std::pair{",present,", ",yes,"}}) {
        std::size_t p = 0;
        while ((p = text.find(from, p)) != std::string::npos) text.replace(p, std::string(from).size(), to);
    }
    const auto ds = parse_csv_dataset(text, m);
    CHECK(ds.issues.empty());
    CHECK(ds.records[1].level(Variable::calcification) == 1);

    CHECK_THROWS_AS(ColumnMapping::parse("column.size = a\ncolumn.size = b\n"), ConfigError);
    CHECK_THROWS_AS(ColumnMapping::parse("column.colour = a\n"), ConfigError);
    CHECK_THROWS_AS(ColumnMapping::parse("value.shape.round = r\n"), ConfigError);
}

TEST_CASE("preprocess keeps the largest nodule per patient and location") {
    auto ds = fixtures::dataset({fixtures::record("1", 0, 1.2, 0), fixtures::record("1", 0, 2.0, 1),
                                 fixtures::record("1", 1, 0.5, 0)});
    const auto out = preprocess(ds);
    REQUIRE(out.size() == 2);
    CHECK(out.records[0].at(Variable::size) == 2.0);
    CHECK(out.records[1].at(Variable::size) == 0.5);
}

TEST_CASE("preprocess drops incomplete records and sorts") {
    auto bad = fixtures::record("2", 0, 1.0, 0);
    bad.values[index_of(Variable::tsh)].reset();
    auto ds = fixtures::dataset({fixtures::record("10", 1, 1.0, 1), bad, fixtures::record("9", 2, 1.0, 0),
                                 fixtures::record("9", 0, 1.0, 0)});
    const auto out = preprocess(ds);
    REQUIRE(out.size() == 3);
    CHECK(out.records[0].patient_id == "9");
    CHECK(out.records[0].level(Variable::location) == 0);
    CHECK(out.records[1].patient_id == "9");
    CHECK(out.records[2].patient_id == "10");
    for (const auto& r : out.records) CHECK(r.complete());
}

TEST_CASE("preprocess is idempotent and rejects empty results") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto raw = synthesize(60, seed);
        // inject duplicates and holes
        auto dup = raw.records[0];
        dup.set(Variable::size, dup.at(Variable::size) + 1.0);
        raw.records.push_back(dup);
        raw.records[5].values[index_of(Variable::ft4)].reset();
        const auto once = preprocess(raw);
        const auto twice = preprocess(once);
        CHECK(to_csv(once) == to_csv(twice));
    }
    CHECK_THROWS_AS(preprocess(Dataset{}), EmptyDatasetError);
}

TEST_CASE("encoding layout") {
    const auto layout = encoded_layout();
    CHECK(layout.size() == 23);
    const auto ds = preprocess(synthesize(50, 4));
    const auto m = encode(ds);
    CHECK(m.cols() == 23);
    CHECK(m.rows() == static_cast<Eigen::Index>(ds.size()));
    CHECK(m.labels.size() == ds.size());
    CHECK(m.groups.size() == ds.size());

    const auto& loc = m.columns_of("location");
    REQUIRE(loc.size() == 2);
    CHECK(m.columns[static_cast<std::size_t>(loc[0])].name == "location=left");
    CHECK(m.columns[static_cast<std::size_t>(loc[1])].name == "location=isthmus");
    CHECK(m.var_columns.size() == 18);

    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& [name, cols] : m.var_columns) {
        total += cols.size();
        seen.insert(cols.begin(), cols.end());
    }
    CHECK(total == 23);
    CHECK(seen.size() == 23);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 22);
    CHECK_THROWS_AS(m.columns_of("colour"), ConfigError);
}

TEST_CASE("standardization uses the sample SD") {
    std::vector<NoduleRecord> recs;
    int i = 0;
    for (double age : {40.0, 50.0, 60.0}) {
        auto r = fixtures::record(std::to_string(++i), 0, 1.0 + i, i % 2);
        r.set(Variable::age, age);
        recs.push_back(r);
    }
    const auto m = encode(fixtures::dataset(recs), true);
    const int j = m.columns_of("age").front();
    CHECK(m.values(0, j) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(m.values(1, j) == doctest::Approx(0.0));
    CHECK(m.values(2, j) == doctest::Approx(1.0).epsilon(1e-15));
    // ft3 is constant: SD clamped to 1, values centered
    const int k = m.columns_of("ft3").front();
    CHECK(m.scaling.sd[k] == 1.0);
    CHECK(m.values(0, k) == 0.0);
}

TEST_CASE("encode then decode reproduces every record") {
    for (bool standardize : {false, true}) {
        const auto ds = preprocess(synthesize(80, 9));
        const auto m = encode(ds, standardize);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const auto back = decode_row(m, r);
            const auto& orig = ds.records[static_cast<std::size_t>(r)];
            CHECK(back.patient_id == orig.patient_id);
            CHECK(back.malignancy == orig.malignancy);
            for (const auto& p : predictors()) {
                if (p.categorical() || !standardize) {
                    CHECK(back.at(p.id) == orig.at(p.id));
                } else {
                    CHECK(back.at(p.id) == doctest::Approx(orig.at(p.id)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("summary of a single record") {
    const auto s = summarize(fixtures::dataset({fixtures::record("1", 0, 1.5, 1)}));
    CHECK(s.n_records == 1);
    CHECK(s.n_patients == 1);
    CHECK(s.numeric_of(Variable::age).sd == 0.0);
    CHECK(s.numeric_of(Variable::size).mean == 1.5);
    CHECK(s.numeric_of(Variable::tsh).iqr == 0.0);
    const auto& mal = s.categorical_of("malignancy");
    CHECK(mal.levels[1].count == 1);
    CHECK(mal.levels[1].percent == 100.0);
}

TEST_CASE("summary counts equal an independent recount") {
    const auto ds = preprocess(synthesize(300, 17));
    const auto s = summarize(ds);
    for (const auto& p : predictors()) {
        if (!p.categorical()) continue;
        const auto counts = recount(ds, p.id);
        const auto& cs = s.categorical_of(p.name);
        REQUIRE(cs.levels.size() == p.level_count());
        for (const auto& lc : cs.levels) {
            const auto it = counts.find(lc.level);
            CHECK(lc.count == (it == counts.end() ? 0 : it->second));
            CHECK(lc.percent == doctest::Approx(100.0 * static_cast<double>(lc.count) / static_cast<double>(ds.size())));
        }
    }
    std::size_t malignant = 0;
    std::set<std::string> patients;
    std::vector<double> ages;
    for (const auto& r : ds.records) {
        malignant += static_cast<std::size_t>(*r.malignancy);
        patients.insert(r.patient_id);
        ages.push_back(r.at(Variable::age));
    }
    CHECK(s.categorical_of("malignancy").levels[1].count == malignant);
    CHECK(s.n_patients == patients.size());
    CHECK(s.numeric_of(Variable::age).mean == doctest::Approx(stats::mean(ages)));
    CHECK(s.numeric_of(Variable::age).sd == doctest::Approx(stats::sample_sd(ages)));

    const auto csv_text = summary_to_csv(s);
    CHECK(csv_text.rfind("section,characteristic,statistic,value,percentage", 0) == 0);
    CHECK(summary_to_json(s).find("\"nodules\"") != std::string::npos);
}

TEST_CASE("synthesize is deterministic and round-trips through CSV") {
    const auto a = synthesize(100, 42);
    const auto b = synthesize(100, 42);
    CHECK(to_csv(a) == to_csv(b));
    CHECK(to_csv(a) != to_csv(synthesize(100, 43)));
    CHECK(a.provenance == Provenance::synthetic);

    const auto back = parse_csv_dataset(to_csv(a), ColumnMapping::defaults());
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(back.records[i] == a.records[i]);
}

TEST_CASE("synthetic cohort structure") {
    const auto ds = synthesize(400, 5);
    std::map<std::string, std::set<int>> locations;
    std::map<std::string, int> nodules;
    for (const auto& r : ds.records) {
        CHECK(r.complete());
        CHECK(r.at(Variable::size) > 0);
        CHECK(r.at(Variable::age) >= kReferenceAgeMin);
        CHECK(r.at(Variable::age) <= kReferenceAgeMax);
        CHECK(locations[r.patient_id].insert(r.level(Variable::location)).second);
        nodules[r.patient_id]++;
    }
    CHECK(nodules.size() == 400);
    for (const auto& [pid, n] : nodules) {
        CHECK(n >= 1);
        CHECK(n <= 3);
    }
    CHECK(preprocess(ds).size() == ds.size());
}

TEST_CASE("synthesize validates its arguments") {
    CHECK_THROWS_AS(synthesize(9, 1), ConfigError);
    CHECK_THROWS_AS(synthesize(100, 1, SignalMap{{"colour", 1.0}}), ConfigError);
    CHECK_THROWS_AS(synthesize(100, 1, SignalMap{{"calcification=sometimes", 1.0}}), ConfigError);
    CHECK_NOTHROW(synthesize(100, 1, SignalMap{{"age", 0.5}, {"shape=irregular", 1.0}}));
}

TEST_CASE("default signal gives the reference malignant fraction") {
    const auto ds = synthesize(2000, 2024);
    double pos = 0;
    for (const auto& r : ds.records) pos += *r.malignancy;
    CHECK(std::abs(pos / static_cast<double>(ds.size()) - 0.6648) <= 0.05);
}

TEST_CASE("null signal: malignant fraction within the binomial 99% band") {
    SignalMap zero;
    for (const auto& [k, v] : default_signal()) zero[k] = 0.0;
    const SignalModel model(zero);
    const double p = stats::sigmoid(model.intercept());
    CHECK(p == doctest::Approx(kReferenceMalignantFraction).epsilon(1e-12));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = synthesize(1500, seed, zero);
        double pos = 0;
        for (const auto& r : ds.records) pos += *r.malignancy;
        const double n = static_cast<double>(ds.size());
        const double band = 2.5758293035489 * std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(pos / n - p) <= band);
    }
}

TEST_CASE("synthetic marginals track the reference table") {
    int passing = 0;
    for (std::uint64_t seed = 100; seed < 125; ++seed) {
        const auto ds = synthesize(1000, seed);
        bool ok = true;
        const double n = static_cast<double>(ds.size());
        for (const auto& p : predictors()) {
            if (!p.categorical()) continue;
            double total = 0;
            for (int c : p.reference_counts) total += c;
            const auto counts = recount(ds, p.id);
            for (std::size_t l = 0; l < p.level_count(); ++l) {
                const auto it = counts.find(std::string(p.levels[l]));
                const double freq = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
                if (std::abs(freq - p.reference_counts[l] / total) > 0.04) ok = false;
            }
        }
        passing += ok ? 1 : 0;
    }
    CHECK(passing >= 20);
}
