#include "sentinel/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

SvmParams svm_params_from_json(const nlohmann::json& j) {
    SvmParams p;
    p.c = j.value("C", p.c);
    p.epochs = j.value("epochs", p.epochs);
    if (!(p.c > 0) || p.epochs < 1) throw ConfigError("linear SVM needs C > 0 and epochs >= 1");
    return p;
}

PlattScaling PlattScaling::fit(std::span<const double> f, std::span<const int> y, std::span<const double> weights) {
    // Newton iteration with backtracking (Lin, Lin and Weng's formulation
    // of Platt's method), extended with per-instance weights. Weights are
    // rescaled to sum to n so the target smoothing keeps its usual size.
    const std::size_t n = f.size();
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = weights[i] * static_cast<double>(n) / wsum;

    double prior1 = 0.0, prior0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) (y[i] ? prior1 : prior0) += w[i];
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? hi : lo;

    auto objective = [&](double a, double b) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fab = f[i] * a + b;
            v += w[i] * (fab >= 0 ? t[i] * fab + std::log1p(std::exp(-fab)) : (t[i] - 1.0) * fab + std::log1p(std::exp(fab)));
        }
        return v;
    };

    PlattScaling s;
    s.a = 0.0;
    s.b = std::log((prior0 + 1.0) / (prior1 + 1.0));
    double fval = objective(s.a, s.b);
    constexpr double kSigma = 1e-12;
    constexpr double kEps = 1e-5;
    constexpr double kMinStep = 1e-10;
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fab = f[i] * s.a + s.b;
            double p, q;
            if (fab >= 0) {
                p = std::exp(-fab) / (1.0 + std::exp(-fab));
                q = 1.0 / (1.0 + std::exp(-fab));
            } else {
                p = 1.0 / (1.0 + std::exp(fab));
                q = std::exp(fab) / (1.0 + std::exp(fab));
            }
            const double d2 = w[i] * p * q;
            h11 += f[i] * f[i] * d2;
            h22 += d2;
            h21 += f[i] * d2;
            const double d1 = w[i] * (t[i] - p);
            g1 += f[i] * d1;
            g2 += d1;
        }
        if (std::fabs(g1) < kEps && std::fabs(g2) < kEps) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= kMinStep) {
            const double na = s.a + step * da;
            const double nb = s.b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                s.a = na;
                s.b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    return s;
}

double PlattScaling::operator()(double decision) const { return sigmoid(-(a * decision + b)); }

void LinearSvm::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    schema_ = data.schema();
    encoder_ = OneHotEncoder(schema_);
    const std::size_t width = encoder_.width();
    const std::size_t dim = width + 1;
    const std::size_t n = data.rows();

    std::vector<double> x = encoder_.encode(data);
    scaler_ = Standardizer::fit(x, width, weights);
    std::vector<double> xa(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        scaler_.apply({x.data() + i * width, width});
        std::copy_n(x.data() + i * width, width, xa.data() + i * dim);
        xa[i * dim + width] = 1.0;
    }

    std::vector<double> cumulative(n);
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.back();

    const double lambda = 1.0 / (params_.c * static_cast<double>(n));
    const double radius = 1.0 / std::sqrt(lambda);
    w_.assign(dim, 0.0);
    Rng rng(seed_);
    const std::uint64_t steps = static_cast<std::uint64_t>(params_.epochs) * n;
    for (std::uint64_t t = 1; t <= steps; ++t) {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), rng.uniform() * total);
        if (it == cumulative.end()) --it;
        const auto i = static_cast<std::size_t>(it - cumulative.begin());
        const double yi = data.label(i) ? 1.0 : -1.0;
        const double* xi = xa.data() + i * dim;
        double margin = 0.0;
        for (std::size_t j = 0; j < dim; ++j) margin += w_[j] * xi[j];
        margin *= yi;

        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double shrink = 1.0 - eta * lambda;
        for (auto& v : w_) v *= shrink;
        if (margin < 1.0) {
            for (std::size_t j = 0; j < dim; ++j) w_[j] += eta * yi * xi[j];
        }
        double norm2 = 0.0;
        for (double v : w_) norm2 += v * v;
        if (norm2 > radius * radius) {
            const double scale = radius / std::sqrt(norm2);
            for (auto& v : w_) v *= scale;
        }
    }
    for (double v : w_) {
        if (!std::isfinite(v)) throw DivergenceError("linear SVM produced non-finite weights");
    }

    std::vector<double> decision(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += w_[j] * xa[i * dim + j];
        decision[i] = s;
    }
    platt_ = PlattScaling::fit(decision, data.labels(), weights);
}

double LinearSvm::decision_value(std::span<const double> row) const {
    std::vector<double> x = encoder_.encode(row);
    scaler_.apply(x);
    double s = w_.back();
    for (std::size_t j = 0; j < x.size(); ++j) s += w_[j] * x[j];
    return s;
}

double LinearSvm::predict_proba(std::span<const double> row) const { return platt_(decision_value(row)); }

double LinearSvm::hinge_loss(const Table& data) const {
    double loss = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double yi = data.label(i) ? 1.0 : -1.0;
        loss += std::max(0.0, 1.0 - yi * decision_value(data.row(i)));
    }
    return loss / static_cast<double>(data.rows());
}

std::string LinearSvm::describe() const {
    std::ostringstream s;
    s << "linear SVM (Pegasos, C = " << params_.c << "), Platt a = " << platt_.a << ", b = " << platt_.b;
    return s.str();
}

nlohmann::json LinearSvm::hyperparameters() const { return {{"C", params_.c}, {"epochs", params_.epochs}}; }

nlohmann::json LinearSvm::parameters() const {
    return {{"seed", seed_},
            {"schema", schema_to_json(schema_)},
            {"scaler", scaler_.to_json()},
            {"w", w_},
            {"platt", {{"a", platt_.a}, {"b", platt_.b}}}};
}

std::unique_ptr<LinearSvm> LinearSvm::from_json(const nlohmann::json& hyper, const nlohmann::json& params) {
    auto m = std::make_unique<LinearSvm>(svm_params_from_json(hyper), params.at("seed").get<std::uint64_t>());
    m->schema_ = schema_from_json(params.at("schema"));
    m->encoder_ = OneHotEncoder(m->schema_);
    m->scaler_ = Standardizer::from_json(params.at("scaler"));
    m->w_ = params.at("w").get<std::vector<double>>();
    m->platt_.a = params.at("platt").at("a").get<double>();
    m->platt_.b = params.at("platt").at("b").get<double>();
    return m;
}

}  // namespace sentinel
