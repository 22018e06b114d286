#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentinel/calendar.hpp"
#include "sentinel/classifier.hpp"
#include "sentinel/ensemble.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/features.hpp"

namespace sentinel {

// The six plain learner kinds in table order.
const std::vector<std::string>& learner_kinds();

struct PreprocessConfig {
    std::filesystem::path corpus;
    std::optional<YearMonth> month;  // defaults to the corpus start month
    int k_clusters = 7;
    double ratio = 15.0;
    bool subsample = true;
    std::uint64_t seed = 1;
    bool strict = false;
    std::filesystem::path out;

    nlohmann::json to_json() const;
};

struct PreprocessResult {
    Dataset dataset;  // after subsampling
    std::size_t full_instances = 0;
    std::size_t full_positives = 0;
    std::size_t retained_users = 0;
    std::vector<std::string> validation_messages;
    nlohmann::json meta;
};

// Validates the corpus, builds daily instances and optionally subsamples
// them, then writes instances.csv and meta.json under `out` (when set).
// Validation problems are returned; under `strict` they throw DataError.
PreprocessResult run_preprocess(const PreprocessConfig& config);

struct TrainEvalConfig {
    std::filesystem::path data;  // directory holding instances.csv (+ meta.json)
    std::optional<int> k_clusters;  // read from meta.json when absent
    std::vector<std::string> models = learner_kinds();
    std::set<std::string> boost = {learner_kinds().begin(), learner_kinds().end()};
    int t_max = 10;
    // Member labels ("nn", "boosted-svm", ...); empty disables the ensemble.
    std::vector<std::string> ensemble = {"nn", "boosted-nbn", "boosted-svm", "rf", "lr"};
    // When > 0, members are the top-m evaluated models by pooled AUC.
    int auto_members = 0;
    WeightMode weight_mode = WeightMode::AccuracyWeighted;
    int ensemble_cv_folds = 10;
    int cv_folds = 10;
    std::uint64_t seed = 1;
    int threads = 1;
    bool subsample_inside_folds = false;
    double ratio = 15.0;
    // Per-kind hyperparameter overrides, e.g. hyper["rf"]["n_trees"] = 50.
    std::map<std::string, nlohmann::json> hyper;
    std::filesystem::path out;

    // Run settings that affect results (no paths or thread counts).
    nlohmann::json to_json() const;
};

// Parses "kind.key=value" into `config.hyper`; value is read as JSON when
// possible and as a string otherwise.
void add_hyper_override(TrainEvalConfig& config, const std::string& assignment);

// Spec for a table label such as "lr" or "boosted-nbn" under `config`.
LearnerSpec spec_for_label(const TrainEvalConfig& config, const std::string& label);

struct ModelResult {
    std::string name;
    LearnerSpec spec;
    bool ok = false;
    std::string error;
    EvalReport report;
};

struct TrainEvalResult {
    std::vector<ModelResult> models;
    std::optional<std::size_t> ensemble_index;
    nlohmann::json report;  // contents of report.json
    std::string table;      // contents of table.txt
    std::size_t failures = 0;
};

// Cross-validates every configured plain and boosted learner and the
// ensemble, refits each on all instances and writes report.json,
// table.txt, roc.csv, roc.svg, models/*.json and manifest.json to `out`.
TrainEvalResult run_train_eval(const TrainEvalConfig& config);

// Fixed-width comparison table (Model, Accuracy, Area under ROC) from a
// report.json document.
std::string format_table(const nlohmann::json& report);

}  // namespace sentinel
