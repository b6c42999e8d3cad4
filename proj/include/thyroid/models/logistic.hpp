#pragma once

#include <span>

#include <Eigen/Dense>

namespace thyroid {

struct LogisticParams {
    int max_iter = 50;
    double ridge = 1e-8;           // L2 penalty on slopes (not the intercept)
    double tolerance = 1e-8;       // max |score equation residual| at convergence
    double fallback_ridge = 1.0;   // penalty used when separation is detected
    double divergence_norm = 50.0; // max |slope| treated as separation
};

struct LogisticFit {
    Eigen::VectorXd coef;
    double intercept = 0.0;
    int iterations = 0;
    bool converged = false;
    bool separation = false;  // ridge fallback was applied
    double penalty = 0.0;     // ridge actually used
    double gradient_norm = 0.0;
    double log_likelihood = 0.0;
};

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares (Newton's method with step halving). Labels are 0/1.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticParams& params = {});

// Penalized log-likelihood and its gradient (intercept first, then slopes).
double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, double intercept,
                          const Eigen::VectorXd& coef, double ridge);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> y, double intercept,
                                  const Eigen::VectorXd& coef, double ridge);

}  // namespace thyroid
