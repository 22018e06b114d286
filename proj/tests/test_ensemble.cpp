#include <algorithm>
#include <functional>

#include "doctest.h"
#include "learner_data.hpp"
#include "sentinel/ensemble.hpp"
#include "sentinel/error.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/random.hpp"

using namespace sentinel;

namespace {

// Fixed scoring rule; enough of the contract to sit inside a vote.
class FnModel final : public Classifier {
public:
    explicit FnModel(std::function<double(std::span<const double>)> f) : f_(std::move(f)) {}
    void fit(const Table&, std::span<const double>) override {}
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override { return f_(row); }
    std::string kind() const override { return "fn"; }
    std::string describe() const override { return "fn"; }
    nlohmann::json hyperparameters() const override { return nlohmann::json::object(); }
    nlohmann::json parameters() const override { return nlohmann::json::object(); }

private:
    std::function<double(std::span<const double>)> f_;
};

MetaMember constant(const std::string& name, double p, double weight) {
    return {name, std::make_unique<FnModel>([p](std::span<const double>) { return p; }), weight, 0.0};
}

// Member i scores a row as a fixed pseudo-random function of the row.
MetaMember noisy(std::size_t i, double weight) {
    return {"m" + std::to_string(i), std::make_unique<FnModel>([i](std::span<const double> row) {
                return static_cast<double>(mix_seed(static_cast<std::uint64_t>(row[0] * 1000), i) >> 11) * 0x1.0p-53;
            }),
            weight, 0.0};
}

const std::vector<double> kRow{0.0};

}  // namespace

TEST_CASE("accuracies 0.9 and 0.6 normalize to weights 0.6 and 0.4") {
    std::vector<MetaMember> m;
    m.push_back(constant("a", 0.5, 0.9));
    m.push_back(constant("b", 0.5, 0.6));
    const auto meta = MetaLearner::from_members(std::move(m));
    CHECK(meta->members()[0].weight == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(meta->members()[1].weight == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("vote examples") {
    SUBCASE("equal weights, 0.8 and 0.6") {
        std::vector<MetaMember> m;
        m.push_back(constant("a", 0.8, 1));
        m.push_back(constant("b", 0.6, 1));
        CHECK(MetaLearner::from_members(std::move(m))->predict_proba(kRow) == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("weights 0.75 and 0.25 over 1 and 0") {
        std::vector<MetaMember> m;
        m.push_back(constant("a", 1.0, 0.75));
        m.push_back(constant("b", 0.0, 0.25));
        CHECK(MetaLearner::from_members(std::move(m))->predict_proba(kRow) == 0.75);
    }
    SUBCASE("all members agree on p") {
        for (double p : {0.0, 0.1, 1.0 / 3, 0.7, 1.0}) {
            std::vector<MetaMember> m;
            for (int i = 0; i < 5; ++i) m.push_back(constant("m" + std::to_string(i), p, 0.1 + 0.37 * i));
            CHECK(MetaLearner::from_members(std::move(m))->predict_proba(kRow) == p);
        }
    }
}

TEST_CASE("uniform mode gives five members 0.2 each") {
    const Table t = mixed_table(60, 1);
    std::vector<LearnerSpec> specs = {{"nbn"}, {"lr", {{"epochs", 50}}}, {"dt"}, {"rf", {{"n_trees", 5}}}, {"svm"}};
    MetaLearner meta(specs, WeightMode::Uniform, 10, 4);
    meta.fit(t);
    REQUIRE(meta.members().size() == 5);
    for (const auto& m : meta.members()) CHECK(m.weight == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("default members are nn, boosted nbn, boosted svm, rf, lr") {
    std::vector<std::string> names;
    for (const auto& s : default_ensemble_members()) names.push_back(spec_label(s));
    CHECK(names == std::vector<std::string>{"nn", "boosted-nbn", "boosted-svm", "rf", "lr"});
}

TEST_CASE("accuracy weights are inner cross-validated accuracies") {
    const Table t = mixed_table(90, 6);
    const std::vector<LearnerSpec> specs = {{"nbn"}, {"dt", {{"max_depth", 2}}}};
    const std::uint64_t seed = 31;
    MetaLearner meta(specs, WeightMode::AccuracyWeighted, 5, seed);
    meta.fit(t);

    // Reference: the same folds, scored by hand. Both learners ignore seeds.
    const auto folds = stratified_folds(t.labels(), 5, seed);
    std::vector<double> acc;
    for (const auto& spec : specs) {
        std::size_t ok = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto train = training_indices(folds, f);
            auto model = make_learner(spec, 0);
            model->fit(t.subset(train));
            for (auto i : folds[f]) ok += (model->predict_proba(t.row(i)) >= 0.5) == (t.label(i) == 1);
        }
        acc.push_back(static_cast<double>(ok) / t.rows());
    }
    REQUIRE(meta.members().size() == 2);
    CHECK(meta.members()[0].cv_accuracy == doctest::Approx(acc[0]).epsilon(1e-15));
    CHECK(meta.members()[1].cv_accuracy == doctest::Approx(acc[1]).epsilon(1e-15));
    CHECK(meta.members()[0].weight == doctest::Approx(acc[0] / (acc[0] + acc[1])).epsilon(1e-12));

    // Final members are trained on all the data.
    auto full = make_learner(specs[0], 0);
    full->fit(t);
    CHECK(meta.members()[0].model->predict_proba(t.row(3)) == full->predict_proba(t.row(3)));
}

TEST_CASE("vote stays within the members' range") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<MetaMember> m;
        const std::size_t k = 2 + rng.below(5);
        for (std::size_t i = 0; i < k; ++i) m.push_back(noisy(i, rng.uniform()));
        const auto meta = MetaLearner::from_members(std::move(m));
        for (double x = 0; x < 3; x += 0.25) {
            const std::vector<double> row{x};
            double lo = 1, hi = 0;
            for (const auto& mm : meta->members()) {
                if (mm.weight == 0) continue;
                lo = std::min(lo, mm.model->predict_proba(row));
                hi = std::max(hi, mm.model->predict_proba(row));
            }
            const double p = meta->predict_proba(row);
            CHECK(p >= lo);
            CHECK(p <= hi);
        }
    }
}

TEST_CASE("a zero-weight member changes nothing") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<MetaMember> a, b;
        for (std::size_t i = 0; i < 3; ++i) {
            const double w = rng.uniform(0.1, 1);
            a.push_back(noisy(i, w));
            b.push_back(noisy(i, w));
        }
        b.insert(b.begin() + static_cast<long>(rng.below(4)), noisy(9, 0.0));
        const auto ma = MetaLearner::from_members(std::move(a));
        const auto mb = MetaLearner::from_members(std::move(b));
        for (double x = 0; x < 2; x += 0.125) {
            const std::vector<double> row{x};
            CHECK(ma->predict_proba(row) == mb->predict_proba(row));
        }
    }
}

TEST_CASE("member order never changes a prediction") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> w(5);
        for (auto& v : w) v = rng.uniform(0.05, 1);
        std::vector<std::size_t> order{0, 1, 2, 3, 4};
        rng.shuffle(order);
        std::vector<MetaMember> a, b;
        for (std::size_t i = 0; i < 5; ++i) a.push_back(noisy(i, w[i]));
        for (auto i : order) b.push_back(noisy(i, w[i]));
        const auto ma = MetaLearner::from_members(std::move(a));
        const auto mb = MetaLearner::from_members(std::move(b));
        for (double x = 0; x < 2; x += 0.125) {
            const std::vector<double> row{x};
            CHECK(ma->predict_proba(row) == mb->predict_proba(row));
        }
    }
}

TEST_CASE("a failing member is named") {
    const Table t = mixed_table(60, 2);
    MetaLearner meta({{"nbn"}, {"lr", {{"lr", 1e308}, {"l2", 0.0}}}}, WeightMode::AccuracyWeighted, 3, 1);
    try {
        meta.fit(t);
        FAIL("expected an ensemble build failure");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("member 'lr'") != std::string::npos);
    }
    MetaLearner uniform({{"lr", {{"lr", 1e308}, {"l2", 0.0}}}, {"nbn"}}, WeightMode::Uniform, 3, 1);
    CHECK_THROWS_WITH_AS(uniform.fit(t), doctest::Contains("member 'lr'"), Error);
}

TEST_CASE("ensembles need two members and sane settings") {
    CHECK_THROWS_AS(MetaLearner({{"nbn"}}, WeightMode::Uniform, 10, 1), ConfigError);
    CHECK_THROWS_AS(MetaLearner({{"nbn"}, {"ensemble"}}, WeightMode::Uniform, 10, 1), ConfigError);
    CHECK_THROWS_AS(MetaLearner({{"nbn"}, {"lr"}}, WeightMode::AccuracyWeighted, 1, 1), ConfigError);
    std::vector<MetaMember> one;
    one.push_back(constant("a", 0.5, 1));
    CHECK_THROWS_AS(MetaLearner::from_members(std::move(one)), ConfigError);
    std::vector<MetaMember> zeros;
    zeros.push_back(constant("a", 0.5, 0));
    zeros.push_back(constant("b", 0.5, 0));
    CHECK_THROWS_AS(MetaLearner::from_members(std::move(zeros)), DegenerateError);
    CHECK(parse_weight_mode("uniform") == WeightMode::Uniform);
    CHECK_THROWS_AS(parse_weight_mode("votes"), ConfigError);
}
