#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sentinel/table.hpp"

namespace sentinel {

// Contract shared by every learner, the boosting wrapper and the
// ensemble: weighted training and a probability for the positive class.
class Classifier {
public:
    virtual ~Classifier() = default;

    // Weights are per row of `data`; uniform weights mean unweighted
    // training. Rows with zero weight are ignored.
    virtual void fit(const Table& data, std::span<const double> weights) = 0;
    void fit(const Table& data) {
        const std::vector<double> w(data.rows(), 1.0);
        fit(data, w);
    }

    // Probability of the positive class, always in [0, 1].
    virtual double predict_proba(std::span<const double> row) const = 0;

    // Short registry name ("lr", "rf", "boosted", ...).
    virtual std::string kind() const = 0;
    virtual std::string describe() const = 0;

    virtual nlohmann::json hyperparameters() const = 0;
    // Fitted state, enough to rebuild identical predictions.
    virtual nlohmann::json parameters() const = 0;
};

using ClassifierPtr = std::unique_ptr<Classifier>;

// Serializable recipe for an unfitted learner: a registry kind plus its
// hyperparameters. Boosted and ensemble specs nest their base specs.
struct LearnerSpec {
    std::string kind;
    nlohmann::json hyper = nlohmann::json::object();

    nlohmann::json to_json() const { return {{"kind", kind}, {"hyper", hyper}}; }
    static LearnerSpec from_json(const nlohmann::json& j);
};

using LearnerFactory = std::function<ClassifierPtr(std::uint64_t seed)>;

// Builds an unfitted learner from its spec. `seed` feeds every random
// draw the learner makes. Throws ConfigError for unknown kinds.
ClassifierPtr make_learner(const LearnerSpec& spec, std::uint64_t seed);
LearnerFactory factory_for(const LearnerSpec& spec);

// ModelArtifact: self-describing JSON document for a fitted model.
inline constexpr int kArtifactVersion = 1;
nlohmann::json to_artifact(const Classifier& model, const nlohmann::json& metadata = nlohmann::json::object());
ClassifierPtr from_artifact(const nlohmann::json& artifact);

// Shared checks used by learners before fitting.
void check_fit_inputs(const Table& data, std::span<const double> weights);

double sigmoid(double z);
// log(1 + exp(z)) without overflow.
double softplus(double z);

}  // namespace sentinel
