#include "thyroid/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "thyroid/csv.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"

namespace thyroid {

double NoduleRecord::at(Variable v) const {
    const auto& value = get(v);
    if (!value) throw DataError("missing value for '" + std::string(info(v).name) + "' (patient " + patient_id + ")");
    return *value;
}

bool NoduleRecord::complete() const noexcept {
    if (patient_id.empty() || !malignancy) return false;
    return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

// ---------------------------------------------------------------------------
// Column mapping

namespace {

// Header comparison ignores case and any non-alphanumeric characters.
std::string normalize_header(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c >= 'A' && c <= 'Z') out += static_cast<char>(c - 'A' + 'a');
        else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) out += c;
    }
    return out;
}

std::string normalize_value(std::string_view s) { return lower(trim(s)); }

std::vector<std::string> all_field_names() {
    std::vector<std::string> names{std::string(kPatientIdName)};
    for (const auto& p : predictors()) names.emplace_back(p.name);
    names.emplace_back(kLabelName);
    return names;
}

std::span<const std::string_view> levels_of(const std::string& field) {
    if (field == kLabelName) return kLabelLevels;
    if (auto v = find_variable(field); v && info(*v).categorical()) return info(*v).levels;
    return {};
}

std::vector<std::string> split_alternatives(std::string_view text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (true) {
        const auto bar = text.find('|', start);
        auto item = trim(text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start));
        if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
        items.emplace_back(item);
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return items;
}

std::string quote_if_needed(const std::string& s) {
    if (s.empty() || s != trim(s) || s.find('|') != std::string::npos) return "\"" + s + "\"";
    return s;
}

}  // namespace

ColumnMapping ColumnMapping::defaults() {
    ColumnMapping m;
    m.missing_tokens = {"", "NA", "N/A"};

    auto columns = [&](const std::string& field, std::vector<std::string> candidates) {
        m.fields[field].columns = std::move(candidates);
    };
    columns("patient_id", {"patient_id", "patient", "id", "patient_no", "case_id"});
    columns("age", {"age"});
    columns("sex", {"sex", "gender"});
    columns("ft3", {"ft3"});
    columns("ft4", {"ft4"});
    columns("tsh", {"tsh"});
    columns("tpo", {"tpo", "tpoab", "tpo_ab"});
    columns("tgab", {"tgab", "tg_ab", "tga"});
    columns("thyroid_echogenicity", {"thyroid_echogenicity", "echo_pattern", "thyroid_echo", "echogenicity_thyroid"});
    columns("size", {"size", "nodule_size", "diameter"});
    columns("location", {"location", "site", "position"});
    columns("multifocality", {"multifocality", "multifocal"});
    columns("shape", {"shape"});
    columns("margin", {"margin"});
    columns("calcification", {"calcification", "calcifications"});
    columns("nodule_echogenicity", {"nodule_echogenicity", "echogenicity", "echo_strength", "nodule_echo"});
    columns("blood_flow", {"blood_flow", "flow", "vascularity"});
    columns("composition", {"composition"});
    columns("laterality", {"laterality", "side"});
    columns("malignancy", {"malignancy", "mal", "label", "pathology", "diagnosis"});

    auto alias = [&](const std::string& field, const std::string& level, std::vector<std::string> raws) {
        for (auto& raw : raws) m.fields[field].values[normalize_value(raw)] = level;
    };
    for (const auto& name : all_field_names()) {
        for (auto level : levels_of(name)) alias(name, std::string(level), {std::string(level)});
    }
    alias("sex", "male", {"m"});
    alias("sex", "female", {"f"});
    alias("location", "right", {"right lobe", "r"});
    alias("location", "left", {"left lobe", "l"});
    alias("nodule_echogenicity", "none", {"anechoic"});
    alias("nodule_echogenicity", "isoechoic", {"isoechogenic"});
    alias("nodule_echogenicity", "medium", {"medium-echogenic", "medium echogenic"});
    alias("nodule_echogenicity", "hyper", {"hyperechogenic", "hyperechoic"});
    alias("nodule_echogenicity", "hypo", {"hypoechogenic", "hypoechoic"});
    alias("multifocality", "multifocal", {"yes"});
    alias("multifocality", "unifocal", {"no"});
    alias("calcification", "present", {"yes"});
    alias("calcification", "absent", {"no"});
    alias("malignancy", "benign", {"0", "b"});
    alias("malignancy", "malignant", {"1", "m"});
    return m;
}

ColumnMapping ColumnMapping::parse(std::string_view text) {
    ColumnMapping m = defaults();
    const auto known = all_field_names();
    auto is_field = [&](const std::string& f) { return std::find(known.begin(), known.end(), f) != known.end(); };

    std::set<std::string> seen_keys;
    std::set<std::string> cleared_values;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw_line;
    while (std::getline(in, raw_line)) {
        ++line_no;
        std::string_view line = trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("mapping line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (!seen_keys.insert(key).second)
            throw ConfigError("mapping line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

        if (key == "missing") {
            m.missing_tokens = split_alternatives(value);
        } else if (key.starts_with("column.")) {
            const std::string field = key.substr(7);
            if (!is_field(field)) throw ConfigError("mapping: unknown field '" + field + "'");
            m.fields[field].columns = split_alternatives(value);
        } else if (key.starts_with("value.")) {
            const std::string rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos) throw ConfigError("mapping: malformed key '" + key + "'");
            const std::string field = rest.substr(0, dot);
            const std::string level = rest.substr(dot + 1);
            const auto levels = levels_of(field);
            if (levels.empty()) throw ConfigError("mapping: '" + field + "' is not a categorical field");
            if (std::find(levels.begin(), levels.end(), level) == levels.end())
                throw ConfigError("mapping: unknown level '" + level + "' for '" + field + "'");
            // The first value line for a field replaces its default dictionary.
            if (cleared_values.insert(field).second) m.fields[field].values.clear();
            for (const auto& raw : split_alternatives(value)) m.fields[field].values[normalize_value(raw)] = level;
        } else {
            throw ConfigError("mapping line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return m;
}

ColumnMapping ColumnMapping::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = csv::read_text(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse(text);
}

std::string ColumnMapping::to_text() const {
    std::ostringstream out;
    out << "# Column mapping: column.<field> lists header candidates, value.<field>.<level>\n"
        << "# lists raw spellings of a level. Alternatives are separated by '|'.\n";
    out << "missing =";
    for (std::size_t i = 0; i < missing_tokens.size(); ++i) out << (i ? " | " : " ") << quote_if_needed(missing_tokens[i]);
    out << '\n';
    for (const auto& name : all_field_names()) {
        const auto it = fields.find(name);
        if (it == fields.end()) continue;
        out << "column." << name << " =";
        for (std::size_t i = 0; i < it->second.columns.size(); ++i)
            out << (i ? " | " : " ") << quote_if_needed(it->second.columns[i]);
        out << '\n';
    }
    for (const auto& name : all_field_names()) {
        const auto it = fields.find(name);
        if (it == fields.end()) continue;
        std::map<std::string, std::vector<std::string>> by_level;
        for (const auto& [raw, level] : it->second.values) by_level[level].push_back(raw);
        for (auto level : levels_of(name)) {
            const auto found = by_level.find(std::string(level));
            if (found == by_level.end()) continue;
            out << "value." << name << '.' << level << " =";
            for (std::size_t i = 0; i < found->second.size(); ++i)
                out << (i ? " | " : " ") << quote_if_needed(found->second[i]);
            out << '\n';
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Ingestion

Dataset parse_csv_dataset(std::string_view text, const ColumnMapping& mapping, LoadOptions options) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw SchemaError("CSV input has no header row");
    const auto& header = rows.front();

    std::map<std::string, std::size_t> header_index;
    for (std::size_t i = 0; i < header.size(); ++i) header_index.emplace(normalize_header(header[i]), i);

    std::map<std::string, std::size_t> column_of;
    for (const auto& name : all_field_names()) {
        const auto it = mapping.fields.find(name);
        if (it == mapping.fields.end()) throw ConfigError("column mapping has no entry for '" + name + "'");
        for (const auto& candidate : it->second.columns) {
            if (auto h = header_index.find(normalize_header(candidate)); h != header_index.end()) {
                column_of[name] = h->second;
                break;
            }
        }
        if (!column_of.contains(name)) {
            std::string tried;
            for (const auto& c : it->second.columns) tried += (tried.empty() ? "" : ", ") + c;
            throw SchemaError("missing column '" + name + "' (looked for: " + tried + ")");
        }
    }

    std::set<std::string> missing;
    for (const auto& token : mapping.missing_tokens) missing.insert(normalize_value(token));

    Dataset ds;
    ds.provenance = Provenance::real;
    ds.records.reserve(rows.size() - 1);

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::size_t data_row = r - 1;
        const auto& row = rows[r];
        NoduleRecord rec;

        auto reject = [&](const std::string& field, const std::string& message) {
            if (options.strict) throw RowError(data_row, field, message);
            ds.issues.push_back({data_row, field, message});
        };
        auto cell = [&](const std::string& field) -> std::optional<std::string> {
            const std::size_t col = column_of.at(field);
            if (col >= row.size()) return std::nullopt;
            std::string text(trim(row[col]));
            if (missing.contains(normalize_value(text))) return std::nullopt;
            return text;
        };
        auto level_of = [&](const std::string& field, const std::string& text) -> std::optional<int> {
            const auto& dict = mapping.fields.at(field).values;
            const auto norm = normalize_value(text);
            std::string level = norm;
            if (auto it = dict.find(norm); it != dict.end()) level = it->second;
            const auto levels = levels_of(field);
            const auto found = std::find(levels.begin(), levels.end(), level);
            if (found == levels.end()) return std::nullopt;
            return static_cast<int>(found - levels.begin());
        };

        if (auto id = cell("patient_id")) rec.patient_id = *id;

        for (const auto& p : predictors()) {
            const std::string field(p.name);
            const auto text = cell(field);
            if (!text) continue;
            if (p.categorical()) {
                if (auto level = level_of(field, *text)) rec.set(p.id, *level);
                else reject(field, "unknown level '" + *text + "'");
                continue;
            }
            const auto value = parse_double(*text);
            if (!value || !std::isfinite(*value)) {
                reject(field, "not a number: '" + *text + "'");
            } else if (p.kind == VarKind::integer && *value != std::floor(*value)) {
                reject(field, "expected an integer: '" + *text + "'");
            } else if (p.id == Variable::age && (*value < 0 || *value > 130)) {
                reject(field, "age outside [0, 130]: " + *text);
            } else if (p.id == Variable::size && *value <= 0) {
                reject(field, "size must be positive: " + *text);
            } else if (*value < 0) {
                reject(field, "negative value: " + *text);
            } else {
                rec.set(p.id, *value);
            }
        }

        if (auto text = cell(std::string(kLabelName))) {
            if (auto level = level_of(std::string(kLabelName), *text)) rec.malignancy = *level;
            else reject(std::string(kLabelName), "unknown level '" + *text + "'");
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnMapping& mapping, LoadOptions options) {
    return parse_csv_dataset(csv::read_text(path), mapping, options);
}

std::string to_csv(const Dataset& ds) {
    csv::Row header{std::string(kPatientIdName)};
    for (const auto& p : predictors()) header.emplace_back(p.name);
    header.emplace_back(kLabelName);
    csv::Writer out(header);
    for (const auto& rec : ds.records) {
        csv::Row row{rec.patient_id};
        for (const auto& p : predictors()) {
            const auto& v = rec.get(p.id);
            if (!v) row.emplace_back("NA");
            else if (p.categorical()) row.emplace_back(p.levels[static_cast<std::size_t>(*v)]);
            else row.push_back(shortest(*v));
        }
        row.emplace_back(rec.malignancy ? std::string(kLabelLevels[static_cast<std::size_t>(*rec.malignancy)]) : "NA");
        out.add(row);
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Preprocessing

bool patient_id_less(std::string_view a, std::string_view b) noexcept {
    auto as_int = [](std::string_view s) -> std::optional<long long> {
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
        return v;
    };
    const auto ia = as_int(a);
    const auto ib = as_int(b);
    if (ia && ib && *ia != *ib) return *ia < *ib;
    if (ia && !ib) return true;
    if (!ia && ib) return false;
    return a < b;
}

Dataset preprocess(const Dataset& raw) {
    // Largest nodule per (patient, location). Records without a location
    // cannot be grouped and are left for the missing-value pass to drop.
    std::map<std::pair<std::string, int>, std::size_t> best;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < raw.records.size(); ++i) {
        const auto& rec = raw.records[i];
        const auto& loc = rec.get(Variable::location);
        if (!loc) {
            keep.push_back(i);
            continue;
        }
        const auto key = std::make_pair(rec.patient_id, static_cast<int>(*loc));
        const auto [it, inserted] = best.emplace(key, i);
        if (inserted) continue;
        const auto& current = raw.records[it->second].get(Variable::size);
        const auto& candidate = rec.get(Variable::size);
        if (candidate && (!current || *candidate > *current)) it->second = i;
    }
    for (const auto& [key, index] : best) keep.push_back(index);

    Dataset out;
    out.provenance = raw.provenance;
    out.issues = raw.issues;
    for (std::size_t i : keep) {
        if (raw.records[i].complete()) out.records.push_back(raw.records[i]);
    }
    if (out.records.empty()) throw EmptyDatasetError("no complete records remain after preprocessing");

    std::stable_sort(out.records.begin(), out.records.end(), [](const NoduleRecord& a, const NoduleRecord& b) {
        if (a.patient_id != b.patient_id) return patient_id_less(a.patient_id, b.patient_id);
        return a.level(Variable::location) < b.level(Variable::location);
    });
    return out;
}

}  // namespace thyroid
