#include <cmath>

#include "doctest.h"
#include "learner_data.hpp"
#include "sentinel/boosting.hpp"
#include "sentinel/error.hpp"
#include "sentinel/tree.hpp"

using namespace sentinel;

namespace {

const LearnerSpec kStump{"dt", {{"max_depth", 1}}};

ClassifierPtr constant_model(int label) {
    auto dt = std::make_unique<DecisionTree>();
    dt->fit(make_table({{"x", 0}}, {{0}, {1}}, {label, label}));
    return dt;
}

std::unique_ptr<BoostedClassifier> from_rounds(const std::vector<std::pair<double, int>>& rounds) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [alpha, label] : rounds) r.push_back({{"alpha", alpha}, {"model", to_artifact(*constant_model(label))}});
    return BoostedClassifier::from_json({{"base", "dt"}, {"t_max", 10}}, {{"seed", 0}, {"rounds", r}});
}

}  // namespace

TEST_CASE("alpha for a quarter error is half log 3") {
    CHECK(boost_alpha(0.25) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-15));
    CHECK(boost_alpha(0.25) == doctest::Approx(0.5493).epsilon(1e-4));
    CHECK(boost_alpha(0.0) == boost_alpha(kMinBoostError));
    CHECK(std::isfinite(boost_alpha(0.0)));
}

TEST_CASE("one mistake in four: the wrong weight becomes three times each right weight") {
    // The best stump splits at 1.5 and misclassifies only x = 3.
    const Table t = make_table({{"x", 0}}, {{0}, {1}, {2}, {3}}, {0, 0, 1, 0});
    BoostedClassifier b(kStump, 2, 1);
    b.fit(t);
    const auto& tr = b.trace();
    REQUIRE(tr.errors.size() >= 1);
    CHECK(tr.errors[0] == 0.25);
    CHECK(tr.alphas[0] == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-15));
    CHECK(tr.mistakes[0] == std::vector<char>{0, 0, 0, 1});
    const auto& next = tr.weights.size() > 1 ? tr.weights[1] : tr.final_weights;
    CHECK(next[3] == doctest::Approx(3 * next[0]).epsilon(1e-15));
    CHECK(next[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
    CHECK(next[1] == next[0]);
    CHECK(next[2] == next[0]);
    CHECK(next[3] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("a perfect base learner gives one round with the capped coefficient") {
    const Table t = make_table({{"x", 0}}, {{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
    BoostedClassifier b({"dt"}, 10, 1);
    b.fit(t);
    REQUIRE(b.rounds().size() == 1);
    CHECK(b.rounds()[0].alpha == 0.5 * std::log((1 - 1e-10) / 1e-10));
    CHECK(b.trace().stopped_on_perfect);
}

TEST_CASE("a first round no better than chance is an error") {
    // Constant feature, balanced labels: the tree can only say 0.5.
    const Table t = make_table({{"x", 0}}, {{1}, {1}, {1}, {1}}, {0, 1, 0, 1});
    BoostedClassifier b({"dt"}, 5, 1);
    try {
        b.fit(t);
        FAIL("expected boosting failure");
    } catch (const DegenerateError& e) {
        CHECK(std::string(e.what()).find("boosting failed") != std::string::npos);
    }
}

TEST_CASE("a later round at chance is discarded and boosting stops") {
    // Round 1 predicts positive everywhere (error 1/4). After reweighting the
    // constant tree sees exactly half positive weight, predicts positive
    // again, and scores 0.5.
    const Table t = make_table({{"x", 0}}, {{1}, {1}, {1}, {1}}, {1, 1, 1, 0});
    BoostedClassifier b({"dt"}, 5, 1);
    b.fit(t);
    CHECK(b.rounds().size() == 1);
    CHECK(b.trace().stopped_on_error);
}

TEST_CASE("reweighting identities hold every round") {
    const Table t = mixed_table(200, 17);
    for (const LearnerSpec& base : {kStump, LearnerSpec{"nbn"}, LearnerSpec{"lr", {{"epochs", 200}}}}) {
        CAPTURE(base.kind);
        BoostedClassifier b(base, 10, 3);
        b.fit(t);
        const auto& tr = b.trace();
        REQUIRE_FALSE(b.rounds().empty());
        double bound = 1.0;
        for (std::size_t r = 0; r < tr.errors.size(); ++r) {
            CAPTURE(r);
            CHECK(std::isfinite(tr.alphas[r]));
            CHECK(tr.errors[r] < 0.5);
            double sum = 0;
            for (double v : tr.weights[r]) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);

            // The round-r learner has error exactly 1/2 under the next weights.
            const auto& next = r + 1 < tr.weights.size() ? tr.weights[r + 1] : tr.final_weights;
            double err = 0;
            for (std::size_t i = 0; i < next.size(); ++i) err += tr.mistakes[r][i] ? next[i] : 0.0;
            if (!(tr.stopped_on_perfect && r + 1 == tr.errors.size())) CHECK(std::abs(err - 0.5) <= 1e-9);

            const double next_bound = bound * 2 * std::sqrt(tr.errors[r] * (1 - tr.errors[r]));
            CHECK(next_bound <= bound);
            bound = next_bound;
        }
        // Training error of the vote never exceeds the exponential bound.
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < t.rows(); ++i) wrong += (b.margin(t.row(i)) >= 0) != (t.label(i) == 1);
        CHECK(static_cast<double>(wrong) / t.rows() <= bound + 1e-12);
    }
}

TEST_CASE("boosted probability follows the normalized vote") {
    const std::vector<double> row{0.0};
    SUBCASE("unanimous positive vote is above one half") {
        const auto b = from_rounds({{0.4, 1}, {1.3, 1}});
        CHECK(b->margin(row) == 1.0);
        CHECK(b->predict_proba(row) == doctest::Approx(sigmoid(2.0)));
        CHECK(b->predict_proba(row) > 0.5);
    }
    SUBCASE("an evenly split vote is exactly one half") {
        const auto b = from_rounds({{0.7, 1}, {0.7, 0}});
        CHECK(b->predict_proba(row) == 0.5);
    }
    SUBCASE("a single round is a monotone map of its hard decision") {
        CHECK(from_rounds({{0.9, 1}})->predict_proba(row) == doctest::Approx(sigmoid(2.0)));
        CHECK(from_rounds({{0.9, 0}})->predict_proba(row) == doctest::Approx(sigmoid(-2.0)));
    }
    SUBCASE("the larger coefficient wins") {
        const auto b = from_rounds({{0.3, 1}, {0.9, 0}});
        CHECK(b->margin(row) == doctest::Approx(-0.5));
        CHECK(b->predict_proba(row) < 0.5);
    }
}

TEST_CASE("boosting is seeded and rejects bad configuration") {
    const Table t = mixed_table(150, 2);
    const LearnerSpec rf{"rf", {{"n_trees", 5}}};
    BoostedClassifier a(rf, 4, 9), b(rf, 4, 9);
    a.fit(t);
    b.fit(t);
    CHECK(a.parameters() == b.parameters());
    CHECK_THROWS_AS(BoostedClassifier({"dt"}, 0, 1), ConfigError);
    CHECK_THROWS_AS(BoostedClassifier({"boosted"}, 3, 1), ConfigError);
    CHECK_THROWS_AS(make_learner({"boosted", {{"base", "nope"}}}, 1), ConfigError);
}
