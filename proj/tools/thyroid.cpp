// Command-line front end. Settings are applied in the order: defaults,
// --config file, THYROID_* environment, --set, then the dedicated flags.

#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thyroid/config.hpp"
#include "thyroid/errors.hpp"
#include "thyroid/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitComputation = 4;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> data;
    std::optional<std::string> mapping;
    std::optional<std::string> expert;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;
    std::optional<int> bootstrap_reps;
    std::optional<int> shuffle_reps;
    std::optional<double> threshold;
    bool synthetic = false;
    std::vector<std::string> sets;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "Key/value configuration file");
    cmd->add_option("--data", f.data, "Nodule CSV file");
    cmd->add_option("--mapping", f.mapping, "Column mapping file for the CSV");
    cmd->add_option("--expert", f.expert, "Expert assessment CSV (patient_id, location, prediction)");
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--workers", f.workers, "Worker threads, 0 = all cores");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--bootstrap-reps", f.bootstrap_reps, "Bootstrap replicates B");
    cmd->add_option("--shuffle-reps", f.shuffle_reps, "Permutation shuffles R");
    cmd->add_option("--threshold", f.threshold, "Probability cut-off for malignant calls");
    cmd->add_flag("--synthetic", f.synthetic, "Use a synthetic cohort instead of --data");
    cmd->add_option("--set", f.sets, "Extra key=value setting, repeatable");
}

thyroid::RunConfig resolve(const Flags& f) {
    using thyroid::ConfigError;
    thyroid::RunConfig c;
    if (f.config) c = thyroid::load_config(*f.config);
    thyroid::apply_environment(c, thyroid::process_environment());
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        c.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (f.data) c.set("data.path", *f.data);
    if (f.synthetic) c.set("data.synthetic", "true");
    if (f.mapping) c.set("data.mapping", *f.mapping);
    if (f.expert) c.set("expert.path", *f.expert);
    if (f.seed) c.seed = *f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.out) c.set("out", *f.out);
    if (f.bootstrap_reps) c.bootstrap_reps = *f.bootstrap_reps;
    if (f.shuffle_reps) c.shuffle_reps = *f.shuffle_reps;
    if (f.threshold) c.threshold = *f.threshold;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thyroid nodule malignancy models: cross-validation, bootstrap, importance and expert comparison"};
    app.require_subcommand(1);

    using Command = std::function<std::vector<std::filesystem::path>(const thyroid::RunConfig&)>;
    struct Entry {
        const char* name;
        const char* help;
        Command run;
    };
    const std::vector<Entry> entries{
        {"summarize", "Descriptive statistics of the preprocessed cohort", thyroid::cmd_summarize},
        {"cv", "Patient-grouped repeated cross-validation of every model", thyroid::cmd_cv},
        {"bootstrap", "Bootstrap distributions of the cross-validated metrics", thyroid::cmd_bootstrap},
        {"importance", "Permutation importance and malignancy profiles", thyroid::cmd_importance},
        {"compare", "Designated model against expert assessments", thyroid::cmd_compare},
        {"synth", "Write a synthetic cohort CSV", thyroid::cmd_synth},
        {"all", "summarize, cv, bootstrap, importance and compare in one run", thyroid::cmd_all},
    };

    Flags flags;
    std::vector<std::pair<CLI::App*, const Entry*>> commands;
    for (const auto& e : entries) {
        auto* cmd = app.add_subcommand(e.name, e.help);
        add_flags(cmd, flags);
        commands.emplace_back(cmd, &e);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        for (const auto& [cmd, entry] : commands) {
            if (!cmd->parsed()) continue;
            for (const auto& path : entry->run(resolve(flags))) std::cout << path.generic_string() << '\n';
        }
    } catch (const thyroid::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const thyroid::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const thyroid::ComputationError& e) {
        std::cerr << "computation error: " << e.what() << '\n';
        return kExitComputation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
