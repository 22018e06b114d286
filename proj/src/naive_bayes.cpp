#include "sentinel/naive_bayes.hpp"

#include <cmath>
#include <numbers>

#include "sentinel/error.hpp"

namespace sentinel {

void NaiveBayes::fit(const Table& data, std::span<const double> w) {
    check_fit_inputs(data, w);
    schema_ = data.schema();
    const std::size_t d = data.cols();
    double class_w[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < data.rows(); ++i) class_w[data.label(i)] += w[i];
    if (!(class_w[0] > 0.0) || !(class_w[1] > 0.0)) {
        throw DegenerateError("naive Bayes needs weighted instances of both classes");
    }
    const double total = class_w[0] + class_w[1];

    for (int c = 0; c < 2; ++c) {
        prior_[c] = class_w[c] / total;
        mean_[c].assign(d, 0.0);
        var_[c].assign(d, 0.0);
        level_prob_[c].assign(d, {});
        for (std::size_t j = 0; j < d; ++j) {
            if (schema_[j].categorical()) level_prob_[c][j].assign(static_cast<std::size_t>(schema_[j].levels), 0.0);
        }
    }

    // First and second weighted moments in extended precision; the moment
    // form (rather than two passes) keeps the result independent of how a
    // weight is split across duplicate rows.
    std::vector<long double> s1[2], s2[2];
    for (int c = 0; c < 2; ++c) {
        s1[c].assign(d, 0.0L);
        s2[c].assign(d, 0.0L);
    }
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const int c = data.label(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double x = data.at(i, j);
            if (schema_[j].categorical()) {
                if (x >= 0 && x < static_cast<double>(level_prob_[c][j].size())) {
                    level_prob_[c][j][static_cast<std::size_t>(x)] += w[i];
                }
            } else {
                const long double wx = static_cast<long double>(w[i]) * x;
                s1[c][j] += wx;
                s2[c][j] += wx * x;
            }
        }
    }
    for (int c = 0; c < 2; ++c) {
        const long double cw = class_w[c];
        for (std::size_t j = 0; j < d; ++j) {
            if (schema_[j].categorical()) {
                auto& probs = level_prob_[c][j];
                const double levels = static_cast<double>(probs.size());
                const double pseudo = kSmoothing * class_w[c];
                for (auto& p : probs) p = (p + pseudo) / (class_w[c] + levels * pseudo);
            } else {
                const long double m = s1[c][j] / cw;
                mean_[c][j] = static_cast<double>(m);
                const double v = static_cast<double>(s2[c][j] / cw - m * m);
                var_[c][j] = std::max(v, kVarianceFloor);
            }
        }
    }
}

double NaiveBayes::predict_proba(std::span<const double> row) const {
    double log_post[2];
    for (int c = 0; c < 2; ++c) {
        double lp = std::log(prior_[c]);
        for (std::size_t j = 0; j < schema_.size(); ++j) {
            if (schema_[j].categorical()) {
                // Codes outside the fitted levels carry no evidence.
                if (row[j] >= 0 && row[j] < static_cast<double>(level_prob_[c][j].size())) {
                    lp += std::log(level_prob_[c][j][static_cast<std::size_t>(row[j])]);
                }
            } else {
                const double v = var_[c][j];
                const double dev = row[j] - mean_[c][j];
                lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - dev * dev / (2.0 * v);
            }
        }
        log_post[c] = lp;
    }
    return sigmoid(log_post[1] - log_post[0]);
}

std::string NaiveBayes::describe() const {
    return "naive Bayes, prior(+) = " + std::to_string(prior_[1]) + ", " + std::to_string(schema_.size()) +
           " attributes";
}

nlohmann::json NaiveBayes::parameters() const {
    nlohmann::json classes = nlohmann::json::array();
    for (int c = 0; c < 2; ++c) {
        classes.push_back({{"prior", prior_[c]}, {"mean", mean_[c]}, {"variance", var_[c]}, {"levels", level_prob_[c]}});
    }
    return {{"schema", schema_to_json(schema_)}, {"classes", classes}};
}

std::unique_ptr<NaiveBayes> NaiveBayes::from_parameters(const nlohmann::json& p) {
    auto m = std::make_unique<NaiveBayes>();
    m->schema_ = schema_from_json(p.at("schema"));
    for (int c = 0; c < 2; ++c) {
        const auto& cls = p.at("classes").at(static_cast<std::size_t>(c));
        m->prior_[c] = cls.at("prior").get<double>();
        m->mean_[c] = cls.at("mean").get<std::vector<double>>();
        m->var_[c] = cls.at("variance").get<std::vector<double>>();
        m->level_prob_[c] = cls.at("levels").get<std::vector<std::vector<double>>>();
    }
    return m;
}

}  // namespace sentinel
