#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thyroid/models/tree.hpp"

namespace thyroid {

struct GbmParams {
    int n_trees = 100;
    int max_depth = 3;
    double shrinkage = 0.1;
    int min_leaf = 1;
    double subsample = 1.0;  // fraction of rows per round, drawn without replacement
};

/// Gradient boosting on the logistic loss. Each round fits a squared-error
/// tree to the pseudo-residuals y - p and sets leaf values to a shrunken
/// Newton step, halved while it would raise that leaf's loss.
struct GbmFit {
    double initial = 0.0;  // logit of the training base rate
    std::vector<DecisionTree> trees;
    std::vector<double> loss_trace;  // mean training log-loss, before round 1 and after each round

    template <typename Row>
    double raw(const Row& x) const {
        double f = initial;
        for (const auto& t : trees) f += t.predict(x);
        return f;
    }
};

GbmFit fit_gbm(const Eigen::MatrixXd& x, std::span<const int> y, const GbmParams& params, std::uint64_t seed);

}  // namespace thyroid
