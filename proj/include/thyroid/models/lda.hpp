#pragma once

#include <span>

#include <Eigen/Dense>

namespace thyroid {

struct LdaParams {
    // Ridge added to the pooled covariance diagonal, relative to trace / p.
    double ridge_scale = 1e-6;
};

struct LdaFit {
    Eigen::VectorXd mean_benign;
    Eigen::VectorXd mean_malignant;
    Eigen::MatrixXd pooled_cov;  // regularized
    double prior_malignant = 0.5;
    Eigen::VectorXd direction;   // pooled_cov^-1 (mean_malignant - mean_benign)
    double offset = 0.0;         // log-odds = direction . x + offset
};

/// Linear discriminant analysis with a pooled, ridge-regularized covariance.
/// The score of a row is its posterior probability of malignancy.
LdaFit fit_lda(const Eigen::MatrixXd& x, std::span<const int> y, const LdaParams& params = {});

}  // namespace thyroid
