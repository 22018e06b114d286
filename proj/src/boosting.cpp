#include "sentinel/boosting.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

double boost_alpha(double error) {
    const double e = std::max(error, kMinBoostError);
    return 0.5 * std::log((1.0 - e) / e);
}

BoostedClassifier::BoostedClassifier(LearnerSpec base, int t_max, std::uint64_t seed)
    : base_(std::move(base)), t_max_(t_max), seed_(seed) {
    if (t_max_ < 1) throw ConfigError("boosting needs t_max >= 1");
    if (base_.kind == "boosted" || base_.kind == "ensemble") {
        throw ConfigError("boosting base learner must be one of the six plain learners, got '" + base_.kind + "'");
    }
    make_learner(base_, seed_);  // surfaces unknown kinds and keys before any fit
}

void BoostedClassifier::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    rounds_.clear();
    trace_ = {};
    const std::size_t n = data.rows();
    std::vector<double> d(weights.begin(), weights.end());
    const double total = std::accumulate(d.begin(), d.end(), 0.0);
    for (auto& v : d) v /= total;

    for (int t = 0; t < t_max_; ++t) {
        ClassifierPtr model = make_learner(base_, mix_seed(seed_, static_cast<std::uint64_t>(t)));
        model->fit(data, d);

        std::vector<char> wrong(n);
        double error = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int h = model->predict_proba(data.row(i)) >= 0.5 ? 1 : 0;
            wrong[i] = h != data.label(i);
            if (wrong[i]) error += d[i];
        }

        if (error >= 0.5) {
            if (t == 0) {
                std::ostringstream msg;
                msg << "boosting failed: first " << base_.kind << " round has weighted error " << error
                    << " (no better than chance)";
                throw DegenerateError(msg.str());
            }
            trace_.stopped_on_error = true;
            break;
        }

        const double alpha = boost_alpha(error);
        trace_.errors.push_back(error);
        trace_.alphas.push_back(alpha);
        trace_.mistakes.push_back(wrong);
        trace_.weights.push_back(d);
        rounds_.push_back({std::move(model), alpha});

        if (error <= kMinBoostError) {
            trace_.stopped_on_perfect = true;
            break;
        }

        const double up = std::exp(alpha);
        const double down = std::exp(-alpha);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] *= wrong[i] ? up : down;
            sum += d[i];
        }
        for (auto& v : d) v /= sum;
    }
    trace_.final_weights = d;
}

double BoostedClassifier::margin(std::span<const double> row) const {
    double score = 0.0, total = 0.0;
    for (const auto& r : rounds_) {
        score += r.alpha * (r.model->predict_proba(row) >= 0.5 ? 1.0 : -1.0);
        total += r.alpha;
    }
    return total > 0 ? score / total : 0.0;
}

double BoostedClassifier::predict_proba(std::span<const double> row) const { return sigmoid(2.0 * margin(row)); }

std::string BoostedClassifier::describe() const {
    std::ostringstream s;
    s << "boosted " << base_.kind << " (" << rounds_.size() << " of " << t_max_ << " rounds), alphas";
    for (const auto& r : rounds_) s << ' ' << r.alpha;
    return s.str();
}

nlohmann::json BoostedClassifier::hyperparameters() const {
    return {{"base", base_.to_json()}, {"t_max", t_max_}};
}

nlohmann::json BoostedClassifier::parameters() const {
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : rounds_) rounds.push_back({{"alpha", r.alpha}, {"model", to_artifact(*r.model)}});
    return {{"seed", seed_}, {"rounds", rounds}};
}

std::unique_ptr<BoostedClassifier> BoostedClassifier::from_json(const nlohmann::json& hyper,
                                                                const nlohmann::json& params) {
    auto m = std::make_unique<BoostedClassifier>(LearnerSpec::from_json(hyper.at("base")),
                                                 hyper.value("t_max", 10), params.at("seed").get<std::uint64_t>());
    for (const auto& r : params.at("rounds")) {
        m->rounds_.push_back({from_artifact(r.at("model")), r.at("alpha").get<double>()});
    }
    return m;
}

}  // namespace sentinel
