#include "sentinel/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sentinel/error.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

std::string to_string(WeightMode mode) { return mode == WeightMode::Uniform ? "uniform" : "accuracy"; }

WeightMode parse_weight_mode(const std::string& text) {
    if (text == "uniform") return WeightMode::Uniform;
    if (text == "accuracy") return WeightMode::AccuracyWeighted;
    throw ConfigError("unknown weight mode '" + text + "' (expected uniform or accuracy)");
}

std::string spec_label(const LearnerSpec& spec) {
    if (spec.kind == "boosted" && spec.hyper.contains("base")) {
        return "boosted-" + spec.hyper.at("base").at("kind").get<std::string>();
    }
    return spec.kind;
}

std::vector<LearnerSpec> default_ensemble_members() {
    auto boosted = [](const std::string& base) {
        return LearnerSpec{"boosted", {{"base", LearnerSpec{base}.to_json()}, {"t_max", 10}}};
    };
    return {LearnerSpec{"nn"}, boosted("nbn"), boosted("svm"), LearnerSpec{"rf"}, LearnerSpec{"lr"}};
}

MetaLearner::MetaLearner(std::vector<LearnerSpec> members, WeightMode mode, int cv_folds, std::uint64_t seed)
    : specs_(std::move(members)), mode_(mode), cv_folds_(cv_folds), seed_(seed) {
    if (specs_.size() < 2) throw ConfigError("an ensemble needs at least 2 members");
    if (mode_ == WeightMode::AccuracyWeighted && cv_folds_ < 2) throw ConfigError("ensemble cv_folds must be >= 2");
    for (const auto& s : specs_) {
        if (s.kind == "ensemble") throw ConfigError("ensembles cannot be nested");
    }
}

std::unique_ptr<MetaLearner> MetaLearner::from_members(std::vector<MetaMember> members) {
    if (members.size() < 2) throw ConfigError("an ensemble needs at least 2 members");
    std::unique_ptr<MetaLearner> m(new MetaLearner());
    m->mode_ = WeightMode::Uniform;
    for (const auto& mm : members) {
        if (!mm.model) throw ConfigError("ensemble member '" + mm.name + "' has no model");
        if (!(mm.weight >= 0.0) || !std::isfinite(mm.weight)) {
            throw ConfigError("ensemble member '" + mm.name + "' has an invalid weight");
        }
        m->specs_.push_back(LearnerSpec{mm.model->kind(), mm.model->hyperparameters()});
    }
    m->members_ = std::move(members);
    m->normalize();
    return m;
}

void MetaLearner::normalize() {
    std::vector<double> raw;
    for (const auto& m : members_) raw.push_back(m.weight);
    std::sort(raw.begin(), raw.end());
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    if (!(total > 0.0)) throw DegenerateError("ensemble weights sum to zero");
    for (auto& m : members_) m.weight /= total;
}

void MetaLearner::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    members_.clear();
    const auto m = specs_.size();

    std::vector<double> raw(m, 1.0 / static_cast<double>(m));
    std::vector<double> accuracy(m, 0.0);
    if (mode_ == WeightMode::AccuracyWeighted) {
        const auto folds = stratified_folds(data.labels(), cv_folds_, seed_);
        for (std::size_t i = 0; i < m; ++i) {
            const std::string name = spec_label(specs_[i]);
            const std::uint64_t member_seed = mix_seed(seed_, i);
            double correct = 0.0, total = 0.0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const auto train = training_indices(folds, f);
                std::vector<double> w(train.size());
                for (std::size_t j = 0; j < train.size(); ++j) w[j] = weights[train[j]];
                try {
                    ClassifierPtr model = make_learner(specs_[i], mix_seed(member_seed, f + 1));
                    model->fit(data.subset(train), w);
                    for (auto idx : folds[f]) {
                        const int h = model->predict_proba(data.row(idx)) >= 0.5 ? 1 : 0;
                        if (h == data.label(idx)) correct += weights[idx];
                        total += weights[idx];
                    }
                } catch (const std::exception& e) {
                    throw Error("ensemble build failed: member '" + name + "' failed on inner fold " +
                                std::to_string(f) + ": " + e.what());
                }
            }
            accuracy[i] = correct / total;
            raw[i] = accuracy[i];
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
        const std::string name = spec_label(specs_[i]);
        try {
            ClassifierPtr model = make_learner(specs_[i], mix_seed(seed_, i));
            model->fit(data, weights);
            members_.push_back({name, std::move(model), raw[i], accuracy[i]});
        } catch (const std::exception& e) {
            throw Error("ensemble build failed: member '" + name + "': " + e.what());
        }
    }
    normalize();
}

double MetaLearner::predict_proba(std::span<const double> row) const {
    // Terms are summed in sorted order so member order cannot change the
    // rounding; the result is clamped to the hull of the voting members.
    std::vector<double> terms;
    terms.reserve(members_.size());
    double lo = 1.0, hi = 0.0;
    for (const auto& m : members_) {
        const double p = m.model->predict_proba(row);
        terms.push_back(m.weight * p);
        if (m.weight > 0) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
    }
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return std::clamp(sum, lo, hi);
}

std::string MetaLearner::describe() const {
    std::ostringstream s;
    s << "probability vote (" << to_string(mode_) << ") over";
    for (const auto& m : members_) s << ' ' << m.name << '=' << m.weight;
    return s.str();
}

nlohmann::json MetaLearner::hyperparameters() const {
    nlohmann::json specs = nlohmann::json::array();
    for (const auto& s : specs_) specs.push_back(s.to_json());
    return {{"members", specs}, {"weight_mode", to_string(mode_)}, {"cv_folds", cv_folds_}};
}

nlohmann::json MetaLearner::parameters() const {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : members_) {
        members.push_back({{"name", m.name},
                           {"weight", m.weight},
                           {"cv_accuracy", m.cv_accuracy},
                           {"model", to_artifact(*m.model)}});
    }
    return {{"seed", seed_}, {"members", members}};
}

std::unique_ptr<MetaLearner> MetaLearner::from_json(const nlohmann::json& hyper, const nlohmann::json& params) {
    std::unique_ptr<MetaLearner> m(new MetaLearner());
    for (const auto& s : hyper.at("members")) m->specs_.push_back(LearnerSpec::from_json(s));
    m->mode_ = parse_weight_mode(hyper.value("weight_mode", std::string("accuracy")));
    m->cv_folds_ = hyper.value("cv_folds", 10);
    m->seed_ = params.at("seed").get<std::uint64_t>();
    for (const auto& mm : params.at("members")) {
        m->members_.push_back({mm.at("name").get<std::string>(), from_artifact(mm.at("model")),
                               mm.at("weight").get<double>(), mm.value("cv_accuracy", 0.0)});
    }
    if (m->members_.size() < 2) throw SchemaError("ensemble artifact needs at least 2 members");
    return m;
}

}  // namespace sentinel
