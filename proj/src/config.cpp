#include "thyroid/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "thyroid/csv.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/format.hpp"

extern char** environ;

namespace thyroid {

namespace {

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
    T out{};
    const auto v = trim(value);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
    return out;
}

double parse_number(std::string_view key, std::string_view value) {
    const auto d = parse_double(trim(value));
    if (!d || !std::isfinite(*d))
        throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
    return *d;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const auto v = lower(trim(value));
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(value) + "'");
}

ModelKind parse_kind(std::string_view key, std::string_view value) {
    const auto kind = find_kind(trim(value));
    if (!kind) throw ConfigError("'" + std::string(key) + "': unknown model '" + std::string(value) + "'");
    return *kind;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::optional<std::filesystem::path> optional_path(std::string_view value) {
    const auto v = trim(value);
    if (v.empty()) return std::nullopt;
    return std::filesystem::path(std::string(v));
}

}  // namespace

std::map<ModelKind, ModelSpec> RunConfig::default_hyper() {
    std::map<ModelKind, ModelSpec> out;
    for (auto kind : kAllModelKinds) out.emplace(kind, ModelSpec(kind));
    return out;
}

void RunConfig::set(std::string_view raw_key, std::string_view value) {
    const std::string key(trim(raw_key));
    const auto v = trim(value);
    if (key == "data.path") {
        data = optional_path(v);
    } else if (key == "data.synthetic") {
        synthetic = parse_bool(key, v);
    } else if (key == "data.mapping") {
        mapping = optional_path(v);
    } else if (key == "expert.path") {
        expert = optional_path(v);
    } else if (key == "synth.patients") {
        synth_patients = parse_integer<std::size_t>(key, v);
    } else if (key.starts_with("synth.signal.")) {
        // synth.signal.<variable>.<level> names the "<variable>=<level>" term
        auto term = key.substr(std::string_view("synth.signal.").size());
        if (const auto dot = term.find('.'); dot != std::string::npos) term[dot] = '=';
        const double w = parse_number(key, v);
        SignalMap trial = signal;
        trial[term] = w;
        SignalModel{trial};  // rejects unknown terms
        signal = std::move(trial);
    } else if (key == "models") {
        std::vector<ModelKind> kinds;
        for (const auto& name : split_list(v)) {
            const auto kind = parse_kind(key, name);
            if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end())
                throw ConfigError("'models' lists '" + name + "' twice");
            kinds.push_back(kind);
        }
        if (kinds.empty()) throw ConfigError("'models' must name at least one model");
        models = std::move(kinds);
    } else if (key.starts_with("model.")) {
        const auto rest = key.substr(6);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) throw ConfigError("'" + key + "' should look like model.<kind>.<parameter>");
        const auto kind = parse_kind(key, rest.substr(0, dot));
        hyper.at(kind).set(rest.substr(dot + 1), v);
    } else if (key == "seed") {
        seed = parse_integer<std::uint64_t>(key, v);
    } else if (key == "cv.k") {
        k = parse_integer<int>(key, v);
    } else if (key == "cv.reps") {
        reps = parse_integer<int>(key, v);
    } else if (key == "cv.averaging") {
        const auto a = find_averaging(lower(v));
        if (!a) throw ConfigError("'cv.averaging' must be pooled or macro, got '" + std::string(v) + "'");
        averaging = *a;
    } else if (key == "cv.threshold") {
        if (lower(v) == "default" || v.empty()) {
            threshold.reset();
        } else {
            threshold = parse_number(key, v);
        }
    } else if (key == "bootstrap.reps") {
        bootstrap_reps = parse_integer<int>(key, v);
    } else if (key == "bootstrap.resample") {
        const auto r = find_resample(lower(v));
        if (!r) throw ConfigError("'bootstrap.resample' must be rows, patients or identity, got '" + std::string(v) + "'");
        resample = *r;
    } else if (key == "importance.reps") {
        shuffle_reps = parse_integer<int>(key, v);
    } else if (key == "profile.size_threshold") {
        size_threshold = parse_number(key, v);
    } else if (key == "profile.size_bins") {
        std::vector<double> edges;
        for (const auto& item : split_list(v)) edges.push_back(parse_number(key, item));
        size_bins = std::move(edges);
    } else if (key == "compare.model") {
        compare_model = parse_kind(key, v);
    } else if (key == "out") {
        if (v.empty()) throw ConfigError("'out' must not be empty");
        out = std::string(v);
    } else if (key == "workers") {
        workers = parse_integer<std::size_t>(key, v);
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

std::vector<ModelSpec> RunConfig::specs() const {
    std::vector<ModelSpec> out;
    for (auto kind : models) out.push_back(spec_of(kind));
    return out;
}

ModelSpec RunConfig::spec_of(ModelKind kind) const { return hyper.at(kind).with_seed(seed); }

void RunConfig::validate(bool needs_data) const {
    if (needs_data && !data && !synthetic)
        throw ConfigError("no data source: set data.path (--data) or data.synthetic = true");
    if (data && synthetic) throw ConfigError("data.path and data.synthetic = true are mutually exclusive");
    if (synth_patients < 10) throw ConfigError("synth.patients must be at least 10");
    if (k < 2) throw ConfigError("cv.k must be at least 2");
    if (reps < 1) throw ConfigError("cv.reps must be at least 1");
    if (bootstrap_reps < 0) throw ConfigError("bootstrap.reps must not be negative");
    if (shuffle_reps < 1) throw ConfigError("importance.reps must be at least 1");
    if (threshold && !(*threshold > 0.0 && *threshold < 1.0)) throw ConfigError("cv.threshold must lie in (0, 1)");
    if (!(size_threshold > 0.0)) throw ConfigError("profile.size_threshold must be positive");
    for (std::size_t i = 1; i < size_bins.size(); ++i) {
        if (!(size_bins[i] > size_bins[i - 1])) throw ConfigError("profile.size_bins must increase");
    }
}

std::string RunConfig::to_text() const {
    std::string s;
    auto line = [&](std::string_view key, std::string_view value) {
        s += key;
        s += " = ";
        s += value;
        s += '\n';
    };
    line("data.path", data ? data->generic_string() : "");
    line("data.synthetic", synthetic ? "true" : "false");
    line("data.mapping", mapping ? mapping->generic_string() : "");
    line("expert.path", expert ? expert->generic_string() : "");
    line("synth.patients", std::to_string(synth_patients));
    for (const auto& [term, w] : signal) {
        std::string name = term;
        std::replace(name.begin(), name.end(), '=', '.');
        line("synth.signal." + name, shortest(w));
    }
    std::vector<std::string> names;
    for (auto kind : models) names.emplace_back(kind_name(kind));
    line("models", join(names));
    for (auto kind : models) {
        for (const auto& [param, value] : hyper.at(kind).to_map())
            line("model." + std::string(kind_name(kind)) + "." + param, value);
    }
    line("seed", std::to_string(seed));
    line("cv.k", std::to_string(k));
    line("cv.reps", std::to_string(reps));
    line("cv.averaging", averaging_name(averaging));
    line("cv.threshold", threshold ? shortest(*threshold) : "default");
    line("bootstrap.reps", std::to_string(bootstrap_reps));
    line("bootstrap.resample", resample_name(resample));
    line("importance.reps", std::to_string(shuffle_reps));
    line("profile.size_threshold", shortest(size_threshold));
    std::vector<std::string> edges;
    for (double e : size_bins) edges.push_back(shortest(e));
    line("profile.size_bins", join(edges));
    line("compare.model", kind_name(compare_model));
    return s;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    std::vector<std::string> problems;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
            continue;
        }
        try {
            base.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::string text;
    try {
        text = csv::read_text(path);
    } catch (const DataError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    return parse_config(text, std::move(base));
}

std::string env_name(std::string_view key) {
    std::string out = "THYROID_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void apply_environment(RunConfig& config, const std::map<std::string, std::string>& env) {
    std::map<std::string, std::string> known;
    for (const auto* key : {"data.path", "data.synthetic", "data.mapping", "expert.path", "synth.patients", "models",
                            "seed", "cv.k", "cv.reps", "cv.averaging", "cv.threshold", "bootstrap.reps",
                            "bootstrap.resample", "importance.reps", "profile.size_threshold", "profile.size_bins",
                            "compare.model", "out", "workers"}) {
        known.emplace(env_name(key), key);
    }
    for (const auto& [kind, spec] : RunConfig::default_hyper()) {
        for (const auto& [param, unused] : spec.to_map()) {
            const auto key = "model." + std::string(kind_name(kind)) + "." + param;
            known.emplace(env_name(key), key);
        }
    }
    std::vector<std::string> unknown;
    std::vector<std::string> problems;
    for (const auto& [name, value] : env) {
        if (!name.starts_with("THYROID_")) continue;
        const auto it = known.find(name);
        if (it == known.end()) {
            unknown.push_back(name);
            continue;
        }
        try {
            config.set(it->second, value);
        } catch (const ConfigError& e) {
            problems.push_back(name + ": " + e.what());
        }
    }
    if (!unknown.empty()) problems.push_back("unknown environment variables: " + join(unknown));
    if (!problems.empty()) {
        std::string msg = "invalid environment:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

std::map<std::string, std::string> process_environment() {
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(entry.substr(0, eq), entry.substr(eq + 1));
    }
    return env;
}

}  // namespace thyroid
