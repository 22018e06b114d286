#pragma once

#include <cstdint>
#include <vector>

#include "sentinel/classifier.hpp"

namespace sentinel {

// Smallest weighted error a round may report; perfect rounds get the
// corresponding capped coefficient.
inline constexpr double kMinBoostError = 1e-10;
double boost_alpha(double error);

struct BoostRound {
    ClassifierPtr model;
    double alpha = 0.0;
};

// Per-round diagnostics kept from the last fit. `weights[t]` is the
// distribution the round-t learner was trained on; `mistakes[t]` flags
// the rows it got wrong at the 0.5 threshold.
struct BoostTrace {
    std::vector<double> errors;
    std::vector<double> alphas;
    std::vector<std::vector<char>> mistakes;
    std::vector<std::vector<double>> weights;
    std::vector<double> final_weights;
    bool stopped_on_error = false;
    bool stopped_on_perfect = false;
};

// AdaBoost.M1 by reweighting around any weight-aware base learner.
//   score(x) = sum_t alpha_t (2 h_t(x) - 1),  h_t = [p_t(x) >= 0.5]
//   p(x)     = sigmoid(2 score(x) / sum_t alpha_t)
class BoostedClassifier final : public Classifier {
public:
    BoostedClassifier(LearnerSpec base, int t_max, std::uint64_t seed);

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;
    // Normalized vote in [-1, 1].
    double margin(std::span<const double> row) const;

    std::string kind() const override { return "boosted"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<BoostedClassifier> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<BoostRound>& rounds() const { return rounds_; }
    const BoostTrace& trace() const { return trace_; }
    const LearnerSpec& base() const { return base_; }

private:
    LearnerSpec base_;
    int t_max_;
    std::uint64_t seed_;
    std::vector<BoostRound> rounds_;
    BoostTrace trace_;
};

}  // namespace sentinel
