#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thyroid/models/tree.hpp"

namespace thyroid {

struct ForestParams {
    int n_trees = 500;
    int mtry = 0;       // 0 = ceil(sqrt(p))
    int max_depth = -1;
    int min_leaf = 1;
    bool bootstrap = true;
};

/// Random forest of Gini trees. Each tree draws its bootstrap sample and
/// feature subsets from a stream keyed by (seed, tree index). The score is
/// the mean leaf malignant fraction over trees; with pure leaves this is the
/// fraction of trees voting malignant.
struct ForestFit {
    std::vector<DecisionTree> trees;

    template <typename Row>
    double predict(const Row& x) const {
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x);
        return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
    }

    // Same sums as predict() row by row, walking one tree at a time.
    Eigen::VectorXd predict_matrix(const Eigen::MatrixXd& x) const;
};

/// Leaf values and tested columns of every (tree, row) path for a fixed
/// matrix. Rescoring a copy of that matrix in which only some columns changed
/// re-walks just the paths that test one of them; the sums match
/// predict_matrix bit for bit.
class ForestPathCache {
public:
    ForestPathCache(const ForestFit& forest, const Eigen::MatrixXd& x);

    // x must equal the cached matrix outside the given columns.
    Eigen::VectorXd rescore(const Eigen::MatrixXd& x, std::span<const int> changed) const;

    // Tree in branch-free form: leaves test +inf and point back to themselves.
    struct FlatTree {
        std::vector<int> feature;
        std::vector<double> threshold;
        std::vector<int> child;  // [2 * node + (goes right)]
        std::vector<double> value;
        std::vector<char> leaf;
    };

private:
    std::vector<FlatTree> flat_;
    Eigen::Index n_;
    std::vector<double> leaf_;                // [tree * n + row]
    std::vector<std::uint64_t> columns_;      // tested-column bits, [tree * n + row]
    std::vector<bool> wide_;                  // path tests a column >= 64
};

ForestFit fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed);

}  // namespace thyroid
