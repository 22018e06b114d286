#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentinel/classifier.hpp"

namespace sentinel {

struct ConfusionMatrix {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    double accuracy() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
    nlohmann::json to_json() const;
};

// Positive iff score >= threshold.
ConfusionMatrix confusion_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                       double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = std::numeric_limits<double>::infinity();
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.5;

    nlohmann::json to_json() const;
};

// Threshold sweep over distinct scores, highest first. Tied scores move
// together, so the trapezoid area equals the Mann-Whitney statistic with
// half credit for ties. Throws DegenerateError if only one class occurs.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path);
void write_roc_svg(const RocCurve& roc, const std::string& title, const std::filesystem::path& path);

// k index sets partitioning [0, labels.size()). Each class is shuffled
// separately; positives are dealt round-robin from fold 0 and negatives
// continue the cycle where positives stopped, so per-fold class counts
// differ by at most one and fold sizes by at most one. Indices within a
// fold are ascending.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

// Complement of `folds[f]`, ascending.
std::vector<std::size_t> training_indices(const std::vector<std::vector<std::size_t>>& folds, std::size_t f);

struct FoldResult {
    int index = 0;
    bool ok = true;
    std::string error;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t test_positives = 0;
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::optional<double> auc;  // undefined when the fold holds one class

    nlohmann::json to_json() const;
};

struct EvalReport {
    std::string model;
    nlohmann::json spec;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<FoldResult> folds;
    ConfusionMatrix pooled;
    double pooled_accuracy = 0.0;
    double mean_fold_accuracy = 0.0;
    std::optional<double> mean_fold_auc;
    RocCurve roc;
    std::size_t failed_folds = 0;
    std::size_t folds_without_positives = 0;
    // Held-out score per dataset row (NaN where the fold failed).
    std::vector<double> scores;

    nlohmann::json to_json() const;
};

struct CvOptions {
    int threads = 1;
    // When > 0, each training split is spread-subsampled to this
    // negative:positive ratio before fitting; held-out folds stay whole.
    double subsample_ratio = 0.0;
};

// Stratified k-fold cross-validation. Fold f trains a learner seeded with
// mix_seed(seed, f). A failed fold is recorded and skipped; if at least
// half the folds fail the whole run throws.
EvalReport cross_validate(const LearnerSpec& spec, const Table& data, int k, std::uint64_t seed,
                          const CvOptions& options = {});
EvalReport cross_validate(const std::string& name, const LearnerFactory& factory, const Table& data, int k,
                          std::uint64_t seed, const CvOptions& options = {});

}  // namespace sentinel
