#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentinel/classifier.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

struct TreeParams {
    int max_depth = 6;
    // Minimum number of (positively weighted) rows in each child.
    int min_leaf = 1;
};

TreeParams tree_params_from_json(const nlohmann::json& j);

struct TreeNode {
    int feature = -1;  // -1 for a leaf
    bool categorical = false;
    // Numeric: x <= threshold goes left. Categorical: x == threshold goes left.
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double probability = 0.0;  // weighted positive fraction
    double weight = 0.0;
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    bool categorical = false;
    double impurity = 0.0;  // weighted Gini of the two children, summed
};

// Best CART split of `rows` by weighted Gini. Candidates are midpoints
// between consecutive distinct values (numeric) or one-vs-rest levels
// (categorical). Ties go to the lower feature index, then the lower
// threshold. `features` must be sorted ascending.
std::optional<SplitChoice> best_split(const Table& data, std::span<const double> weights,
                                      std::span<const std::size_t> rows, std::span<const int> features,
                                      int min_leaf);

// Grows one CART tree; shared by DecisionTree and RandomForest. When
// `rng` is given, each split considers `mtry` randomly drawn features.
std::vector<TreeNode> grow_tree(const Table& data, std::span<const double> weights, const TreeParams& params,
                                int mtry, Rng* rng);

double tree_predict(const std::vector<TreeNode>& nodes, std::span<const double> row);

nlohmann::json tree_to_json(const std::vector<TreeNode>& nodes);
std::vector<TreeNode> tree_from_json(const nlohmann::json& j);

class DecisionTree final : public Classifier {
public:
    explicit DecisionTree(TreeParams params = {}) : params_(params) {}

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override { return tree_predict(nodes_, row); }

    std::string kind() const override { return "dt"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override { return {{"nodes", tree_to_json(nodes_)}}; }
    static std::unique_ptr<DecisionTree> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<TreeNode>& nodes() const { return nodes_; }

private:
    TreeParams params_;
    std::vector<TreeNode> nodes_;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 12;
    int min_leaf = 1;
    int mtry = 0;  // 0: ceil(sqrt(number of columns))
    bool bootstrap = true;
    int threads = 1;
};

ForestParams forest_params_from_json(const nlohmann::json& j);

// Bagged CART trees with per-split feature sampling. Each tree draws from
// its own stream derived from (seed, tree index), so the thread count
// never changes the result.
class RandomForest final : public Classifier {
public:
    RandomForest(ForestParams params, std::uint64_t seed) : params_(params), seed_(seed) {}

    void fit(const Table& data, std::span<const double> weights) override;
    using Classifier::fit;
    double predict_proba(std::span<const double> row) const override;

    std::string kind() const override { return "rf"; }
    std::string describe() const override;
    nlohmann::json hyperparameters() const override;
    nlohmann::json parameters() const override;
    static std::unique_ptr<RandomForest> from_json(const nlohmann::json& hyper, const nlohmann::json& params);

    const std::vector<std::vector<TreeNode>>& trees() const { return trees_; }

private:
    ForestParams params_;
    std::uint64_t seed_;
    std::vector<std::vector<TreeNode>> trees_;
};

}  // namespace sentinel
