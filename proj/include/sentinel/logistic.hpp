#pragma once

#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

struct LogisticParams {
    double learning_rate = 0.5;
    int epochs = 3000;
    double l2 = 1e-4;
};

// Weighted mean negative log-likelihood plus an L2 penalty on the
// coefficients (not the intercept). theta = [intercept, coefficients...]
// over a standardized design matrix. Exposed for gradient checking.
struct LogisticObjective {
    std::span<const double> x;  // rows x width, row-major
    std::size_t width = 0;
    std::span<const int> y;
    std::span<const double> w;  // normalized to sum 1
    double l2 = 0.0;

    double value(std::span<const double> theta) const;
    void gradient(std::span<const double> theta, std::span<double> grad) const;
};

// Binary logistic regression fit by full-batch gradient descent on
// internally standardized one-hot features.
class LogisticRegression final : public Classifier {
public:
    static constexpr double kTolerance = 1e-8;

    explicit LogisticRegression(LogisticParams params = {}) : params_(params) {}

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;

    std::string kind() const override { return "lr"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<LogisticRegression> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<double>& theta() const { return theta_; }
    int epochs_run() const { return epochs_run_; }
    double final_loss() const { return final_loss_; }

private:
    LogisticParams params_;
    Schema schema_;
    OneHotEncoder encoder_;
    Standardizer scaler_;
    std::vector<double> theta_;
    int epochs_run_ = 0;
    double final_loss_ = 0.0;
};

LogisticParams logistic_params_from_json(const nlohmann::json& j);

}  // namespace sentinel
