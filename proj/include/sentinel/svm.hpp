#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

struct SvmParams {
    double c = 1.0;
    int epochs = 30;
};

SvmParams svm_params_from_json(const nlohmann::json& j);

// Sigmoid P(y=1 | f) = 1 / (1 + exp(a f + b)) fit to decision values by
// the Newton method with Platt's smoothed targets.
struct PlattScaling {
    double a = -1.0;
    double b = 0.0;

    static PlattScaling fit(std::span<const double> decision, std::span<const int> labels,
                            std::span<const double> weights);
    double operator()(double decision) const;
};

// Linear SVM trained with Pegasos: stochastic subgradient steps on
// lambda/2 |w|^2 + weighted mean hinge loss, lambda = 1 / (C n), rows
// sampled in proportion to their weight. The bias is an extra constant
// feature. Probabilities come from Platt scaling on the training
// decision values.
class LinearSvm final : public Classifier {
public:
    LinearSvm(SvmParams params, std::uint64_t seed) : params_(params), seed_(seed) {}

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;
    double decision_value(std::span<const double> row) const;

    std::string kind() const override { return "svm"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<LinearSvm> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    // Weighted mean hinge loss on `data` under the fitted weights.
    double hinge_loss(const Table& data) const;
    const PlattScaling& platt() const { return platt_; }

private:
    SvmParams params_;
    std::uint64_t seed_;
    Schema schema_;
    OneHotEncoder encoder_;
    Standardizer scaler_;
    std::vector<double> w_;  // last entry is the bias
    PlattScaling platt_;
};

}  // namespace sentinel
