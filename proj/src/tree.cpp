#include "sentinel/tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

double gini(double weight, double positive) {
    return weight > 0.0 ? 2.0 * positive * (weight - positive) / weight : 0.0;
}

class TreeGrower {
public:
    TreeGrower(const Table& data, std::span<const double> w, const TreeParams& p, int mtry, Rng* rng)
        : data_(data), w_(w), params_(p), mtry_(mtry), rng_(rng) {}

    std::vector<TreeNode> grow() {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data_.rows(); ++i) {
            if (w_[i] > 0.0) rows.push_back(i);
        }
        if (rows.empty()) throw DegenerateError("decision tree needs at least one positively weighted row");
        build(rows, 0);
        return std::move(nodes_);
    }

private:
    int build(const std::vector<std::size_t>& rows, int depth) {
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double weight = 0.0, positive = 0.0;
        for (std::size_t r : rows) {
            weight += w_[r];
            positive += w_[r] * data_.label(r);
        }
        nodes_[static_cast<std::size_t>(index)].weight = weight;
        nodes_[static_cast<std::size_t>(index)].probability = positive / weight;

        const auto min_count = static_cast<std::size_t>(std::max(params_.min_leaf, 1));
        if (depth >= params_.max_depth || positive <= 0.0 || positive >= weight || rows.size() < 2 * min_count) {
            return index;
        }

        const auto features = pick_features();
        const auto split = best_split(data_, w_, rows, features, params_.min_leaf);
        if (!split) return index;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            const double x = data_.at(r, static_cast<std::size_t>(split->feature));
            const bool go_left = split->categorical ? x == split->threshold : x <= split->threshold;
            (go_left ? left : right).push_back(r);
        }
        const int l = build(left, depth + 1);
        const int rgt = build(right, depth + 1);
        TreeNode& node = nodes_[static_cast<std::size_t>(index)];
        node.feature = split->feature;
        node.categorical = split->categorical;
        node.threshold = split->threshold;
        node.left = l;
        node.right = rgt;
        return index;
    }

    std::vector<int> pick_features() {
        const int d = static_cast<int>(data_.cols());
        std::vector<int> all(static_cast<std::size_t>(d));
        std::iota(all.begin(), all.end(), 0);
        if (rng_ == nullptr || mtry_ >= d) return all;
        for (int i = 0; i < mtry_; ++i) {
            const auto j = static_cast<std::size_t>(i) + rng_->below(static_cast<std::uint64_t>(d - i));
            std::swap(all[static_cast<std::size_t>(i)], all[j]);
        }
        all.resize(static_cast<std::size_t>(mtry_));
        std::sort(all.begin(), all.end());
        return all;
    }

    const Table& data_;
    std::span<const double> w_;
    TreeParams params_;
    int mtry_;
    Rng* rng_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

TreeParams tree_params_from_json(const nlohmann::json& j) {
    TreeParams p;
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    if (p.max_depth < 1 || p.min_leaf < 1) throw ConfigError("decision tree needs max_depth >= 1 and min_leaf >= 1");
    return p;
}

std::optional<SplitChoice> best_split(const Table& data, std::span<const double> w, std::span<const std::size_t> rows,
                                      std::span<const int> features, int min_leaf) {
    double weight = 0.0, positive = 0.0;
    for (std::size_t r : rows) {
        weight += w[r];
        positive += w[r] * data.label(r);
    }
    const std::size_t n = rows.size();
    const auto min_count = static_cast<std::size_t>(std::max(min_leaf, 1));
    const double tol = 1e-12 * weight;

    std::optional<SplitChoice> best;
    auto consider = [&](int f, double threshold, bool categorical, double impurity) {
        if (!best || impurity < best->impurity - tol) best = SplitChoice{f, threshold, categorical, impurity};
    };

    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (int f : features) {
        const auto col = static_cast<std::size_t>(f);
        const int levels = data.schema()[col].levels;
        if (levels > 0) {
            std::vector<double> lw(static_cast<std::size_t>(levels), 0.0), lp(lw.size(), 0.0);
            std::vector<std::size_t> lc(lw.size(), 0);
            for (std::size_t r : rows) {
                const double x = data.at(r, col);
                if (x < 0 || x >= levels) continue;
                const auto l = static_cast<std::size_t>(x);
                lw[l] += w[r];
                lp[l] += w[r] * data.label(r);
                ++lc[l];
            }
            for (std::size_t l = 0; l < lw.size(); ++l) {
                if (lc[l] < min_count || n - lc[l] < min_count) continue;
                consider(f, static_cast<double>(l), true,
                         gini(lw[l], lp[l]) + gini(weight - lw[l], positive - lp[l]));
            }
            continue;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return data.at(a, col) < data.at(b, col); });
        double left_w = 0.0, left_p = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t r = order[i];
            left_w += w[r];
            left_p += w[r] * data.label(r);
            const double v = data.at(r, col);
            const double next = data.at(order[i + 1], col);
            if (!(v < next)) continue;
            if (i + 1 < min_count || n - (i + 1) < min_count) continue;
            double threshold = v + (next - v) / 2.0;
            if (threshold >= next) threshold = v;
            consider(f, threshold, false, gini(left_w, left_p) + gini(weight - left_w, positive - left_p));
        }
    }
    return best;
}

std::vector<TreeNode> grow_tree(const Table& data, std::span<const double> weights, const TreeParams& params, int mtry,
                                Rng* rng) {
    return TreeGrower(data, weights, params, mtry, rng).grow();
}

double tree_predict(const std::vector<TreeNode>& nodes, std::span<const double> row) {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const TreeNode& n = nodes[i];
        const double x = row[static_cast<std::size_t>(n.feature)];
        const bool left = n.categorical ? x == n.threshold : x <= n.threshold;
        i = static_cast<std::size_t>(left ? n.left : n.right);
    }
    return nodes[i].probability;
}

nlohmann::json tree_to_json(const std::vector<TreeNode>& nodes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& n : nodes) {
        if (n.feature < 0) {
            j.push_back({{"p", n.probability}, {"w", n.weight}});
        } else {
            j.push_back({{"f", n.feature},
                         {"cat", n.categorical},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right},
                         {"p", n.probability},
                         {"w", n.weight}});
        }
    }
    return j;
}

std::vector<TreeNode> tree_from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    for (const auto& e : j) {
        TreeNode n;
        n.probability = e.at("p").get<double>();
        n.weight = e.at("w").get<double>();
        if (e.contains("f")) {
            n.feature = e.at("f").get<int>();
            n.categorical = e.at("cat").get<bool>();
            n.threshold = e.at("t").get<double>();
            n.left = e.at("l").get<int>();
            n.right = e.at("r").get<int>();
        }
        nodes.push_back(n);
    }
    return nodes;
}

void DecisionTree::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    nodes_ = grow_tree(data, weights, params_, static_cast<int>(data.cols()), nullptr);
}

std::string DecisionTree::describe() const {
    std::ostringstream s;
    s << "CART tree, " << nodes_.size() << " nodes (max_depth " << params_.max_depth << ", min_leaf "
      << params_.min_leaf << ")";
    return s.str();
}

nlohmann::json DecisionTree::hyperparameters() const {
    return {{"max_depth", params_.max_depth}, {"min_leaf", params_.min_leaf}};
}

std::unique_ptr<DecisionTree> DecisionTree::from_json(const nlohmann::json& hyper, const nlohmann::json& params) {
    auto m = std::make_unique<DecisionTree>(tree_params_from_json(hyper));
    m->nodes_ = tree_from_json(params.at("nodes"));
    return m;
}

ForestParams forest_params_from_json(const nlohmann::json& j) {
    ForestParams p;
    p.n_trees = j.value("n_trees", p.n_trees);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    p.mtry = j.value("mtry", p.mtry);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    p.threads = j.value("threads", p.threads);
    if (p.n_trees < 1) throw ConfigError("random forest needs n_trees >= 1");
    if (p.max_depth < 1 || p.min_leaf < 1 || p.mtry < 0 || p.threads < 1) {
        throw ConfigError("invalid random forest settings");
    }
    return p;
}

void RandomForest::fit(const Table& data, std::span<const double> weights) {
    check_fit_inputs(data, weights);
    const int d = static_cast<int>(data.cols());
    const int mtry = params_.mtry > 0 ? params_.mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
    if (mtry > d) {
        throw ConfigError("mtry = " + std::to_string(mtry) + " exceeds the " + std::to_string(d) + " features");
    }
    const TreeParams tp{params_.max_depth, params_.min_leaf};

    std::vector<double> cumulative(data.rows());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.empty() ? 0.0 : cumulative.back();

    trees_.assign(static_cast<std::size_t>(params_.n_trees), {});
    auto grow_one = [&](std::size_t t) {
        Rng rng(mix_seed(seed_, t));
        if (!params_.bootstrap) {
            trees_[t] = grow_tree(data, weights, tp, mtry, &rng);
            return;
        }
        std::vector<double> counts(data.rows(), 0.0);
        for (std::size_t draw = 0; draw < data.rows(); ++draw) {
            const double u = rng.uniform() * total;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            if (it == cumulative.end()) --it;
            counts[static_cast<std::size_t>(it - cumulative.begin())] += 1.0;
        }
        trees_[t] = grow_tree(data, counts, tp, mtry, &rng);
    };

    const auto n_trees = trees_.size();
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(params_.threads), n_trees);
    if (workers <= 1) {
        for (std::size_t t = 0; t < n_trees; ++t) grow_one(t);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < workers; ++k) {
        pool.emplace_back([&] {
            for (std::size_t t = next++; t < n_trees; t = next++) {
                try {
                    grow_one(t);
                } catch (...) {
                    const std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double RandomForest::predict_proba(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree_predict(tree, row);
    return sum / static_cast<double>(trees_.size());
}

std::string RandomForest::describe() const {
    std::size_t nodes = 0;
    for (const auto& t : trees_) nodes += t.size();
    std::ostringstream s;
    s << "random forest, " << trees_.size() << " trees, " << nodes << " nodes";
    return s.str();
}

nlohmann::json RandomForest::hyperparameters() const {
    return {{"n_trees", params_.n_trees}, {"max_depth", params_.max_depth}, {"min_leaf", params_.min_leaf},
            {"mtry", params_.mtry},       {"bootstrap", params_.bootstrap}, {"threads", params_.threads}};
}

nlohmann::json RandomForest::parameters() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(tree_to_json(t));
    return {{"seed", seed_}, {"trees", trees}};
}

std::unique_ptr<RandomForest> RandomForest::from_json(const nlohmann::json& hyper, const nlohmann::json& params) {
    auto m = std::make_unique<RandomForest>(forest_params_from_json(hyper), params.at("seed").get<std::uint64_t>());
    for (const auto& t : params.at("trees")) m->trees_.push_back(tree_from_json(t));
    return m;
}

}  // namespace sentinel
