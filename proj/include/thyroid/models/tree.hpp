#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thyroid/rng.hpp"

namespace thyroid {

enum class SplitCriterion { gini, squared_error };

struct TreeParams {
    int max_depth = -1;  // -1 = unlimited; 0 = a single leaf
    int min_leaf = 1;    // minimum sample weight per child
    int mtry = 0;        // features tried per split; 0 = all
    SplitCriterion criterion = SplitCriterion::gini;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf prediction
    double weight = 0.0; // training sample weight reaching the node

    bool leaf() const noexcept { return feature < 0; }
};

/// Binary decision tree. Rows with x[feature] <= threshold go left.
class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    template <typename Row>
    int leaf_of(const Row& x) const {
        int n = 0;
        while (!nodes_[static_cast<std::size_t>(n)].leaf()) {
            const auto& node = nodes_[static_cast<std::size_t>(n)];
            n = x(node.feature) <= node.threshold ? node.left : node.right;
        }
        return n;
    }

    template <typename Row>
    double predict(const Row& x) const {
        return nodes_[static_cast<std::size_t>(leaf_of(x))].value;
    }

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::vector<TreeNode>& mutable_nodes() noexcept { return nodes_; }
    int depth() const;

    nlohmann::json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);

private:
    std::vector<TreeNode> nodes_;
};

/// Dense ranks of every column, shared by all trees grown on one matrix.
class RankedFeatures {
public:
    explicit RankedFeatures(const Eigen::MatrixXd& x);

    const Eigen::MatrixXd& values() const noexcept { return *x_; }
    int rank(Eigen::Index row, Eigen::Index col) const noexcept { return ranks_[static_cast<std::size_t>(col)][static_cast<std::size_t>(row)]; }
    int distinct(Eigen::Index col) const noexcept { return static_cast<int>(levels_[static_cast<std::size_t>(col)].size()); }
    double level(Eigen::Index col, int rank) const noexcept { return levels_[static_cast<std::size_t>(col)][static_cast<std::size_t>(rank)]; }

private:
    const Eigen::MatrixXd* x_;
    std::vector<std::vector<int>> ranks_;
    std::vector<std::vector<double>> levels_;
};

// A weighted training sample: row index into the feature matrix.
struct WeightedRow {
    int row;
    double weight;
};

/// Grows a CART tree greedily. Gini trees store the positive-class fraction
/// in each leaf (targets must be 0/1); squared-error trees store the mean
/// target. Split ties resolve to the lowest feature index, then the lowest
/// threshold. With mtry < p the candidate features are a random subset; if
/// none of them admits a valid split the remaining features are tried in the
/// same random order. `leaf_assignment`, if given, receives the leaf index of
/// every sampled row (others are set to -1).
DecisionTree grow_tree(const RankedFeatures& features, std::span<const double> target,
                       std::span<const WeightedRow> sample, const TreeParams& params, Rng* rng,
                       std::vector<int>* leaf_assignment = nullptr);

/// Convenience wrapper over grow_tree for a plain row list (unit weights).
DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> target, std::span<const int> rows,
                      const TreeParams& params, Rng* rng = nullptr);

}  // namespace thyroid
