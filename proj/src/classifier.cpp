#include "sentinel/classifier.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "sentinel/boosting.hpp"
#include "sentinel/ensemble.hpp"
#include "sentinel/error.hpp"
#include "sentinel/logistic.hpp"
#include "sentinel/mlp.hpp"
#include "sentinel/naive_bayes.hpp"
#include "sentinel/svm.hpp"
#include "sentinel/tree.hpp"

namespace sentinel {

double sigmoid(double z) {
    if (std::isnan(z)) return 0.5;  // e.g. inf - inf from extreme inputs: no evidence either way
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_fit_inputs(const Table& data, std::span<const double> weights) {
    if (data.rows() == 0) throw DegenerateError("cannot fit on an empty table");
    if (weights.size() != data.rows()) {
        throw ConfigError("got " + std::to_string(weights.size()) + " weights for " + std::to_string(data.rows()) +
                          " rows");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("instance weights must be finite and non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw DegenerateError("instance weights sum to zero");
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
    LearnerSpec s;
    if (j.is_string()) {
        s.kind = j.get<std::string>();
        return s;
    }
    s.kind = j.at("kind").get<std::string>();
    if (j.contains("hyper")) s.hyper = j.at("hyper");
    if (!s.hyper.is_object()) throw ConfigError("learner '" + s.kind + "' hyperparameters must be an object");
    return s;
}

namespace {

void check_keys(const LearnerSpec& spec, std::set<std::string> allowed) {
    if (spec.hyper.is_null()) return;
    if (!spec.hyper.is_object()) throw ConfigError("learner '" + spec.kind + "' hyperparameters must be an object");
    for (const auto& [key, value] : spec.hyper.items()) {
        if (!allowed.count(key)) throw ConfigError("learner '" + spec.kind + "' has no hyperparameter '" + key + "'");
    }
}

nlohmann::json hyper_or_empty(const nlohmann::json& h) { return h.is_null() ? nlohmann::json::object() : h; }

}  // namespace

ClassifierPtr make_learner(const LearnerSpec& spec, std::uint64_t seed) {
    const nlohmann::json h = hyper_or_empty(spec.hyper);
    try {
        if (spec.kind == "nbn") {
            check_keys(spec, {});
            return std::make_unique<NaiveBayes>();
        }
        if (spec.kind == "lr") {
            check_keys(spec, {"lr", "epochs", "l2"});
            return std::make_unique<LogisticRegression>(logistic_params_from_json(h));
        }
        if (spec.kind == "dt") {
            check_keys(spec, {"max_depth", "min_leaf"});
            return std::make_unique<DecisionTree>(tree_params_from_json(h));
        }
        if (spec.kind == "rf") {
            check_keys(spec, {"n_trees", "max_depth", "min_leaf", "mtry", "bootstrap", "threads"});
            return std::make_unique<RandomForest>(forest_params_from_json(h), seed);
        }
        if (spec.kind == "svm") {
            check_keys(spec, {"C", "epochs"});
            return std::make_unique<LinearSvm>(svm_params_from_json(h), seed);
        }
        if (spec.kind == "nn") {
            check_keys(spec, {"hidden", "lr", "epochs"});
            return std::make_unique<Mlp>(mlp_params_from_json(h), seed);
        }
        if (spec.kind == "boosted") {
            check_keys(spec, {"base", "t_max"});
            if (!h.contains("base")) throw ConfigError("boosted learner needs a 'base' spec");
            return std::make_unique<BoostedClassifier>(LearnerSpec::from_json(h.at("base")), h.value("t_max", 10),
                                                       seed);
        }
        if (spec.kind == "ensemble") {
            check_keys(spec, {"members", "weight_mode", "cv_folds"});
            std::vector<LearnerSpec> members;
            if (h.contains("members")) {
                for (const auto& m : h.at("members")) members.push_back(LearnerSpec::from_json(m));
            } else {
                members = default_ensemble_members();
            }
            return std::make_unique<MetaLearner>(std::move(members),
                                                 parse_weight_mode(h.value("weight_mode", std::string("accuracy"))),
                                                 h.value("cv_folds", 10), seed);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("learner '" + spec.kind + "': bad hyperparameter: " + e.what());
    }
    throw ConfigError("unknown learner kind '" + spec.kind + "' (expected nn, nbn, svm, rf, dt, lr, boosted, ensemble)");
}

LearnerFactory factory_for(const LearnerSpec& spec) {
    make_learner(spec, 0);  // validate eagerly
    return [spec](std::uint64_t seed) { return make_learner(spec, seed); };
}

nlohmann::json to_artifact(const Classifier& model, const nlohmann::json& metadata) {
    return {{"format", "sentinel-model"},
            {"version", kArtifactVersion},
            {"kind", model.kind()},
            {"hyperparameters", model.hyperparameters()},
            {"parameters", model.parameters()},
            {"metadata", metadata}};
}

ClassifierPtr from_artifact(const nlohmann::json& a) {
    try {
        if (a.value("format", std::string()) != "sentinel-model") throw SchemaError("not a sentinel model artifact");
        const int version = a.at("version").get<int>();
        if (version != kArtifactVersion) {
            throw SchemaError("unsupported model artifact version " + std::to_string(version));
        }
        const auto kind = a.at("kind").get<std::string>();
        const auto& h = a.at("hyperparameters");
        const auto& p = a.at("parameters");
        if (kind == "nbn") return NaiveBayes::from_parameters(p);
        if (kind == "lr") return LogisticRegression::from_json(h, p);
        if (kind == "dt") return DecisionTree::from_json(h, p);
        if (kind == "rf") return RandomForest::from_json(h, p);
        if (kind == "svm") return LinearSvm::from_json(h, p);
        if (kind == "nn") return Mlp::from_json(h, p);
        if (kind == "boosted") return BoostedClassifier::from_json(h, p);
        if (kind == "ensemble") return MetaLearner::from_json(h, p);
        throw SchemaError("model artifact has unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed model artifact: ") + e.what());
    }
}

}  // namespace sentinel
