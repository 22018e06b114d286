#pragma once

#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

// Gaussian naive Bayes over continuous columns, additively smoothed
// frequency tables over categorical ones. Class priors and all per-class
// statistics use instance weights. The pseudo-count per level is
// kSmoothing times the class weight, so rescaling the weights or splitting
// an integer weight into unit copies leaves the model unchanged.
class NaiveBayes final : public Classifier {
public:
    static constexpr double kVarianceFloor = 1e-9;
    static constexpr double kSmoothing = 0.01;

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;

    std::string kind() const override { return "nbn"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override { return nlohmann::json::object(); }
    nlohmann::json parameters() const override;
    static std::unique_ptr<NaiveBayes> from_parameters(const nlohmann::json& params);

    double prior(int cls) const { return prior_[cls]; }
    double mean(int cls, std::size_t col) const { return mean_[cls][col]; }
    double variance(int cls, std::size_t col) const { return var_[cls][col]; }

private:
    Schema schema_;
    double prior_[2] = {0.5, 0.5};
    std::vector<double> mean_[2];
    std::vector<double> var_[2];
    // Per class, per column: smoothed level probabilities (empty for
    // continuous columns).
    std::vector<std::vector<double>> level_prob_[2];
};

}  // namespace sentinel
