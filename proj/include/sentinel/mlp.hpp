#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

struct MlpParams {
    int hidden = 8;
    double learning_rate = 0.5;
    int epochs = 1000;
};

MlpParams mlp_params_from_json(const nlohmann::json& j);

// Flat parameter layout: W1 (hidden x width, row-major), b1 (hidden),
// w2 (hidden), b2.
std::size_t mlp_parameter_count(std::size_t width, int hidden);

// Weighted mean cross-entropy of a one-hidden-layer sigmoid network.
// Weights are normalized to sum 1. Exposed for gradient checking.
struct MlpObjective {
    std::span<const double> x;  // rows x width, row-major
    std::size_t width = 0;
    int hidden = 0;
    std::span<const int> y;
    std::span<const double> w;

    double value(std::span<const double> theta) const;
    // Returns the loss and writes the backpropagated gradient.
    double gradient(std::span<const double> theta, std::span<double> grad) const;
};

double mlp_forward(std::span<const double> theta, std::size_t width, int hidden, std::span<const double> x);

class Mlp final : public Classifier {
public:
    Mlp(MlpParams params, std::uint64_t seed);

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;

    std::string kind() const override { return "nn"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<Mlp> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<double>& theta() const { return theta_; }
    double final_loss() const { return final_loss_; }

private:
    MlpParams params_;
    std::uint64_t seed_;
    Schema schema_;
    OneHotEncoder encoder_;
    Standardizer scaler_;
    std::vector<double> theta_;
    double final_loss_ = 0.0;
};

}  // namespace sentinel
