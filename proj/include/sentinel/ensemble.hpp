#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

enum class WeightMode { Uniform, AccuracyWeighted };

std::string to_string(WeightMode mode);
WeightMode parse_weight_mode(const std::string& text);

// Display name for a spec: the kind, or "boosted-<base>" for boosting.
std::string spec_label(const LearnerSpec& spec);

// The five default members: nn, boosted nbn, boosted svm, rf, lr.
std::vector<LearnerSpec> default_ensemble_members();

struct MetaMember {
    std::string name;
    ClassifierPtr model;
    double weight = 0.0;
    double cv_accuracy = 0.0;  // inner estimate; 0 when weights were given
};

// Probability vote over fitted members: p(x) = sum_i weight_i p_i(x)
// with weights summing to 1.
class MetaLearner final : public Classifier {
public:
    MetaLearner(std::vector<LearnerSpec> members, WeightMode mode, int cv_folds, std::uint64_t seed);

    // Explicit fitted members and raw non-negative weights (normalized here).
    static std::unique_ptr<MetaLearner> from_members(std::vector<MetaMember> members);

    // Builds every member on `data`. In AccuracyWeighted mode each member
    // is first cross-validated on `data` alone (stratified, cv_folds) and
    // its weighted held-out accuracy becomes its raw weight.
    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;

    std::string kind() const override { return "ensemble"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<MetaLearner> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<MetaMember>& members() const { return members_; }
    WeightMode mode() const { return mode_; }

private:
    MetaLearner() = default;
    void normalize();

    std::vector<LearnerSpec> specs_;
    WeightMode mode_ = WeightMode::AccuracyWeighted;
    int cv_folds_ = 10;
    std::uint64_t seed_ = 0;
    std::vector<MetaMember> members_;
};

}  // namespace sentinel
