#include "sentinel/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sentinel/error.hpp"

namespace sentinel {

double LogisticObjective::value(std::span<const double> theta) const {
    const std::size_t n = y.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = theta[0];
        for (std::size_t j = 0; j < width; ++j) z += theta[j + 1] * x[i * width + j];
        loss += w[i] * (softplus(z) - y[i] * z);
    }
    double penalty = 0.0;
    for (std::size_t j = 1; j < theta.size(); ++j) penalty += theta[j] * theta[j];
    return loss + 0.5 * l2 * penalty;
}

void LogisticObjective::gradient(std::span<const double> theta, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        double z = theta[0];
        for (std::size_t j = 0; j < width; ++j) z += theta[j + 1] * x[i * width + j];
        const double r = w[i] * (sigmoid(z) - y[i]);
        grad[0] += r;
        for (std::size_t j = 0; j < width; ++j) grad[j + 1] += r * x[i * width + j];
    }
    for (std::size_t j = 1; j < theta.size(); ++j) grad[j] += l2 * theta[j];
}

LogisticParams logistic_params_from_json(const nlohmann::json& j) {
    LogisticParams p;
    p.learning_rate = j.value("lr", p.learning_rate);
    p.epochs = j.value("epochs", p.epochs);
    p.l2 = j.value("l2", p.l2);
    if (!(p.learning_rate > 0) || p.epochs < 0 || p.l2 < 0) throw ConfigError("invalid logistic regression settings");
    return p;
}

void LogisticRegression::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    schema_ = data.schema();
    encoder_ = OneHotEncoder(schema_);
    const std::size_t width = encoder_.width();
    std::vector<double> x = encoder_.encode(data);
    scaler_ = Standardizer::fit(x, width, weights);
    for (std::size_t i = 0; i < data.rows(); ++i) scaler_.apply({x.data() + i * width, width});

    double total = 0.0, positive = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        total += weights[i];
        positive += weights[i] * data.label(i);
    }
    std::vector<double> w(weights.begin(), weights.end());
    for (auto& v : w) v /= total;

    const LogisticObjective objective{x, width, data.labels(), w, params_.l2};
    theta_.assign(width + 1, 0.0);
    const double base = std::clamp(positive / total, 1e-6, 1.0 - 1e-6);
    theta_[0] = std::log(base / (1.0 - base));

    std::vector<double> grad(theta_.size());
    double loss = objective.value(theta_);
    epochs_run_ = 0;
    for (int epoch = 0; epoch < params_.epochs; ++epoch) {
        objective.gradient(theta_, grad);
        for (std::size_t j = 0; j < theta_.size(); ++j) theta_[j] -= params_.learning_rate * grad[j];
        const double next = objective.value(theta_);
        ++epochs_run_;
        if (!std::isfinite(next)) {
            std::ostringstream msg;
            msg << "logistic regression diverged (lr = " << params_.learning_rate << ")";
            throw DivergenceError(msg.str());
        }
        const double delta = std::fabs(loss - next);
        loss = next;
        if (delta < kTolerance) break;
    }
    final_loss_ = loss;
}

double LogisticRegression::predict_proba(std::span<const double> row) const {
    std::vector<double> x = encoder_.encode(row);
    scaler_.apply(x);
    double z = theta_[0];
    for (std::size_t j = 0; j < x.size(); ++j) z += theta_[j + 1] * x[j];
    return sigmoid(z);
}

std::string LogisticRegression::describe() const {
    std::ostringstream s;
    s << "logistic regression, " << theta_.size() - 1 << " coefficients, " << epochs_run_ << " epochs, loss "
      << final_loss_;
    return s.str();
}

nlohmann::json LogisticRegression::hyperparameters() const {
    return {{"lr", params_.learning_rate}, {"epochs", params_.epochs}, {"l2", params_.l2}};
}

nlohmann::json LogisticRegression::parameters() const {
    return {{"schema", schema_to_json(schema_)}, {"scaler", scaler_.to_json()}, {"theta", theta_}};
}

std::unique_ptr<LogisticRegression> LogisticRegression::from_json(const nlohmann::json& hyper,
                                                                  const nlohmann::json& params) {
    auto m = std::make_unique<LogisticRegression>(logistic_params_from_json(hyper));
    m->schema_ = schema_from_json(params.at("schema"));
    m->encoder_ = OneHotEncoder(m->schema_);
    m->scaler_ = Standardizer::from_json(params.at("scaler"));
    m->theta_ = params.at("theta").get<std::vector<double>>();
    return m;
}

}  // namespace sentinel
