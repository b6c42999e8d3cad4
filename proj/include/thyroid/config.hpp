#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thyroid/data.hpp"
#include "thyroid/eval.hpp"
#include "thyroid/models/model.hpp"

namespace thyroid {

/// Everything a command needs, resolved from defaults, a config file,
/// THYROID_* environment variables and command-line flags, in that order.
///
/// The config file is flat text, one `key = value` per line, '#' comments:
///
///     data.path = nodules.csv          # or: data.synthetic = true
///     data.mapping = mapping.txt
///     synth.patients = 1000
///     synth.signal.<term> = <weight>    # synth.signal.size = 2.5, synth.signal.calcification.present = 3
///     models = gbm, logistic, lda, svm_radial, svm_linear, random_forest
///     model.<kind>.<param> = <value>    # e.g. model.random_forest.n_trees = 200
///     seed = 1
///     cv.k = 10
///     cv.reps = 10
///     cv.averaging = pooled             # or macro
///     cv.threshold = default            # or a probability cut-off
///     bootstrap.reps = 1000
///     bootstrap.resample = rows         # rows, patients or identity
///     importance.reps = 10
///     profile.size_threshold = 0.8
///     profile.size_bins =               # comma-separated edges, empty = threshold only
///     compare.model = random_forest
///     expert.path = expert.csv
///     out = out
///     workers = 1                       # 0 = all cores
///
/// Environment variables use the key upper-cased with '.' turned into '_',
/// e.g. THYROID_CV_REPS or THYROID_MODEL_GBM_N_TREES. Signal terms cannot be
/// set from the environment.
struct RunConfig {
    std::optional<std::filesystem::path> data;
    bool synthetic = false;
    std::optional<std::filesystem::path> mapping;
    std::optional<std::filesystem::path> expert;
    std::size_t synth_patients = 1000;
    SignalMap signal = default_signal();

    std::vector<ModelKind> models{kAllModelKinds.begin(), kAllModelKinds.end()};
    std::map<ModelKind, ModelSpec> hyper = default_hyper();

    std::uint64_t seed = 1;
    int k = 10;
    int reps = 10;
    Averaging averaging = Averaging::pooled;
    std::optional<double> threshold;
    int bootstrap_reps = 1000;
    Resample resample = Resample::rows;
    int shuffle_reps = 10;
    double size_threshold = 0.8;
    std::vector<double> size_bins;
    ModelKind compare_model = ModelKind::random_forest;

    std::filesystem::path out = "out";
    std::size_t workers = 1;

    static std::map<ModelKind, ModelSpec> default_hyper();

    // Sets one key. Throws ConfigError for unknown keys or bad values.
    void set(std::string_view key, std::string_view value);

    // Specs of the selected models, all seeded with `seed`.
    std::vector<ModelSpec> specs() const;
    ModelSpec spec_of(ModelKind kind) const;

    // Checks cross-field constraints. `needs_data` requires a data source.
    void validate(bool needs_data) const;

    // Every key except `out` and `workers`, which do not affect results.
    // Parsing the text back yields the same configuration.
    std::string to_text() const;
};

// Applies `key = value` lines on top of `base`. Unknown keys are collected
// and reported together.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Applies THYROID_* variables from `env`. Unknown THYROID_* names are an error.
void apply_environment(RunConfig& config, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

// Environment variable name for a config key.
std::string env_name(std::string_view key);

}  // namespace thyroid
