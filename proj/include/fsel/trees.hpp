#pragma once

// CART classification trees (Gini) and random forests.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fsel/ingest.hpp"
#include "fsel/matrix.hpp"

namespace fsel {

struct TreeParams {
    std::optional<std::size_t> max_depth;  // nullopt: grow until pure
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;
};

struct ForestParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> features_per_split;  // nullopt: round(sqrt(m))
    bool bootstrap = true;
    TreeParams tree;
    std::uint64_t seed = 0;
    std::size_t n_threads = 0;  // 0: hardware concurrency
};

// Split nodes route x[feature] <= threshold to the left child. Every node
// keeps the class counts of the training samples that reached it.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<std::size_t> counts;

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features, std::size_t n_classes)
        : nodes_(std::move(nodes)), n_features_(n_features), n_classes_(n_classes) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t n_classes() const noexcept { return n_classes_; }

    int predict_row(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&);

private:
    std::vector<TreeNode> nodes_;  // nodes_[0] is the root
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
};

// 1 - sum (c_k / n)^2. Throws std::invalid_argument on all-zero counts.
double gini(std::span<const std::size_t> counts);

DecisionTree dt_fit(const Dataset& train, const TreeParams& params);
std::vector<int> dt_predict(const DecisionTree& tree, const Matrix& X);

RandomForest rf_fit(const Dataset& train, const ForestParams& params);
std::vector<int> rf_predict(const RandomForest& forest, const Matrix& X);

// Index of the largest count; ties go to the lowest index.
int majority(std::span<const std::size_t> counts);

nlohmann::json tree_to_json(const DecisionTree& tree);
nlohmann::json forest_to_json(const RandomForest& forest);

}  // namespace fsel
