#include "sentinel/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

MlpParams mlp_params_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.hidden = j.value("hidden", p.hidden);
    p.learning_rate = j.value("lr", p.learning_rate);
    p.epochs = j.value("epochs", p.epochs);
    if (p.hidden < 1) throw ConfigError("neural network needs hidden >= 1");
    if (!(p.learning_rate > 0) || p.epochs < 0) throw ConfigError("neural network needs lr > 0 and epochs >= 0");
    return p;
}

std::size_t mlp_parameter_count(std::size_t width, int hidden) {
    const auto h = static_cast<std::size_t>(hidden);
    return h * width + h + h + 1;
}

namespace {

// Cross-entropy of sigmoid(z) against label y, stable for large |z|.
double logistic_loss(double z, int y) { return y ? softplus(-z) : softplus(z); }

}  // namespace

double mlp_forward(std::span<const double> theta, std::size_t width, int hidden, std::span<const double> x) {
    const auto h = static_cast<std::size_t>(hidden);
    const double* w1 = theta.data();
    const double* b1 = w1 + h * width;
    const double* w2 = b1 + h;
    double z = w2[h];
    for (std::size_t k = 0; k < h; ++k) {
        double a = b1[k];
        for (std::size_t j = 0; j < width; ++j) a += w1[k * width + j] * x[j];
        z += w2[k] * sigmoid(a);
    }
    return z;
}

double MlpObjective::value(std::span<const double> theta) const {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        loss += w[i] * logistic_loss(mlp_forward(theta, width, hidden, x.subspan(i * width, width)), y[i]);
    }
    return loss;
}

double MlpObjective::gradient(std::span<const double> theta, std::span<double> grad) const {
    const auto h = static_cast<std::size_t>(hidden);
    const double* w1 = theta.data();
    const double* b1 = w1 + h * width;
    const double* w2 = b1 + h;
    double* g_w1 = grad.data();
    double* g_b1 = g_w1 + h * width;
    double* g_w2 = g_b1 + h;
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<double> act(h);
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double* xi = x.data() + i * width;
        double z = w2[h];
        for (std::size_t k = 0; k < h; ++k) {
            double a = b1[k];
            for (std::size_t j = 0; j < width; ++j) a += w1[k * width + j] * xi[j];
            act[k] = sigmoid(a);
            z += w2[k] * act[k];
        }
        loss += w[i] * logistic_loss(z, y[i]);
        const double dz = w[i] * (sigmoid(z) - y[i]);
        g_w2[h] += dz;
        for (std::size_t k = 0; k < h; ++k) {
            g_w2[k] += dz * act[k];
            const double da = dz * w2[k] * act[k] * (1.0 - act[k]);
            g_b1[k] += da;
            for (std::size_t j = 0; j < width; ++j) g_w1[k * width + j] += da * xi[j];
        }
    }
    return loss;
}

Mlp::Mlp(MlpParams params, std::uint64_t seed) : params_(params), seed_(seed) {
    if (params_.hidden < 1) throw ConfigError("neural network needs hidden >= 1");
}

void Mlp::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    schema_ = data.schema();
    encoder_ = OneHotEncoder(schema_);
    const std::size_t width = encoder_.width();
    const std::size_t n = data.rows();

    std::vector<double> x = encoder_.encode(data);
    scaler_ = Standardizer::fit(x, width, weights);
    for (std::size_t i = 0; i < n; ++i) scaler_.apply({x.data() + i * width, width});

    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> w(weights.begin(), weights.end());
    for (auto& v : w) v /= total;

    Rng rng(seed_);
    theta_.resize(mlp_parameter_count(width, params_.hidden));
    for (auto& v : theta_) v = rng.uniform(-0.5, 0.5);

    // Output bias starts where the weighted mean logit equals the base
    // rate, so an untrained network predicts roughly the prior.
    const std::size_t b2 = theta_.size() - 1;
    theta_[b2] = 0.0;
    double base = 0.0, mean_logit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        base += w[i] * data.label(i);
        mean_logit += w[i] * mlp_forward(theta_, width, params_.hidden, {x.data() + i * width, width});
    }
    base = std::clamp(base, 1e-6, 1.0 - 1e-6);
    theta_[b2] = std::log(base / (1.0 - base)) - mean_logit;

    MlpObjective objective{x, width, params_.hidden, data.labels(), w};
    std::vector<double> grad(theta_.size());
    final_loss_ = objective.value(theta_);
    for (int epoch = 0; epoch < params_.epochs; ++epoch) {
        final_loss_ = objective.gradient(theta_, grad);
        if (!std::isfinite(final_loss_)) {
            std::ostringstream msg;
            msg << "neural network diverged; lower lr (currently " << params_.learning_rate << ")";
            throw DivergenceError(msg.str());
        }
        for (std::size_t j = 0; j < theta_.size(); ++j) theta_[j] -= params_.learning_rate * grad[j];
    }
    if (params_.epochs > 0) final_loss_ = objective.value(theta_);
    for (double v : theta_) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "neural network diverged; lower lr (currently " << params_.learning_rate << ")";
            throw DivergenceError(msg.str());
        }
    }
}

double Mlp::predict_proba(std::span<const double> row) const {
    std::vector<double> x = encoder_.encode(row);
    scaler_.apply(x);
    return sigmoid(mlp_forward(theta_, x.size(), params_.hidden, x));
}

std::string Mlp::describe() const {
    std::ostringstream s;
    s << "neural network (" << params_.hidden << " sigmoid hidden units, lr " << params_.learning_rate << ", "
      << params_.epochs << " epochs), training loss " << final_loss_;
    return s.str();
}

nlohmann::json Mlp::hyperparameters() const {
    return {{"hidden", params_.hidden}, {"lr", params_.learning_rate}, {"epochs", params_.epochs}};
}

nlohmann::json Mlp::parameters() const {
    return {{"seed", seed_},
            {"schema", schema_to_json(schema_)},
            {"scaler", scaler_.to_json()},
            {"theta", theta_},
            {"final_loss", final_loss_}};
}

std::unique_ptr<Mlp> Mlp::from_json(const nlohmann::json& hyper, const nlohmann::json& params) {
    auto m = std::make_unique<Mlp>(mlp_params_from_json(hyper), params.at("seed").get<std::uint64_t>());
    m->schema_ = schema_from_json(params.at("schema"));
    m->encoder_ = OneHotEncoder(m->schema_);
    m->scaler_ = Standardizer::from_json(params.at("scaler"));
    m->theta_ = params.at("theta").get<std::vector<double>>();
    m->final_loss_ = params.at("final_loss").get<double>();
    if (m->theta_.size() != mlp_parameter_count(OneHotEncoder(m->schema_).width(), m->params_.hidden)) {
        throw SchemaError("neural network artifact has the wrong parameter count");
    }
    return m;
}

}  // namespace sentinel
