#include "thyroid/models/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "thyroid/errors.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, double intercept, const Eigen::VectorXd& coef) {
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(x.rows(), intercept);
    if (x.cols() > 0) eta.noalias() += x * coef;
    return eta;
}

struct Solve {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
};

Solve newton(const Eigen::MatrixXd& x, std::span<const int> y, double ridge, const LogisticParams& params) {
    const auto n = x.rows();
    const auto p = x.cols();
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x;
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, ridge);
    penalty[0] = 0.0;

    auto objective = [&](const Eigen::VectorXd& b) {
        return logistic_objective(x, y, b[0], b.tail(p), ridge);
    };

    Solve out;
    double current = objective(beta);
    for (int it = 0; it < params.max_iter; ++it) {
        const Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd prob(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = stats::sigmoid(eta[i]);
            w[i] = prob[i] * (1.0 - prob[i]);
        }
        const Eigen::VectorXd grad = design.transpose() * (yv - prob) - penalty.cwiseProduct(beta);
        out.gradient_norm = grad.cwiseAbs().maxCoeff();
        if (out.gradient_norm < params.tolerance) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
        hessian.diagonal() += penalty;
        // Tiny jitter keeps the system solvable under exact collinearity.
        hessian.diagonal().array() += 1e-12 * (1.0 + hessian.diagonal().cwiseAbs().maxCoeff());
        const Eigen::VectorXd step = hessian.ldlt().solve(grad);

        double scale = 1.0;
        Eigen::VectorXd next = beta + step;
        double value = objective(next);
        for (int h = 0; h < 30 && !(value >= current); ++h) {
            scale *= 0.5;
            next = beta + scale * step;
            value = objective(next);
        }
        beta = next;
        current = value;
        out.iterations = it + 1;
    }
    if (!out.converged) {
        const Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd prob(n);
        for (Eigen::Index i = 0; i < n; ++i) prob[i] = stats::sigmoid(eta[i]);
        const Eigen::VectorXd grad = design.transpose() * (yv - prob) - penalty.cwiseProduct(beta);
        out.gradient_norm = grad.cwiseAbs().maxCoeff();
        out.converged = out.gradient_norm < params.tolerance;
    }
    out.intercept = beta[0];
    out.coef = beta.tail(p);
    return out;
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& x, std::span<const int> y, double intercept,
                          const Eigen::VectorXd& coef, double ridge) {
    const Eigen::VectorXd eta = linear_predictor(x, intercept, coef);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        ll += (y[static_cast<std::size_t>(i)] ? eta[i] : 0.0) - softplus(eta[i]);
    return ll - 0.5 * ridge * coef.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, std::span<const int> y, double intercept,
                                  const Eigen::VectorXd& coef, double ridge) {
    const Eigen::VectorXd eta = linear_predictor(x, intercept, coef);
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[static_cast<std::size_t>(i)] - stats::sigmoid(eta[i]);
    Eigen::VectorXd g(coef.size() + 1);
    g[0] = resid.sum();
    if (coef.size() > 0) g.tail(coef.size()) = x.transpose() * resid - ridge * coef;
    return g;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticParams& params) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw InputError("fit_logistic: label count mismatch");
    if (x.rows() == 0) throw InputError("fit_logistic: no rows");

    Solve s = newton(x, y, params.ridge, params);
    LogisticFit fit;
    fit.penalty = params.ridge;
    // Separation shows up as slopes running off, or as every fitted
    // probability collapsing onto its label.
    bool diverged = s.coef.size() > 0 && s.coef.cwiseAbs().maxCoeff() > params.divergence_norm;
    if (s.coef.size() > 0 && !diverged) {
        const Eigen::VectorXd eta = linear_predictor(x, s.intercept, s.coef);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            worst = std::max(worst, std::abs(y[static_cast<std::size_t>(i)] - stats::sigmoid(eta[i])));
        diverged = worst < 1e-6;
    }
    if (!s.converged || diverged) {
        s = newton(x, y, params.fallback_ridge, params);
        fit.separation = true;
        fit.penalty = params.fallback_ridge;
    }
    fit.intercept = s.intercept;
    fit.coef = s.coef;
    fit.iterations = s.iterations;
    fit.converged = s.converged;
    fit.gradient_norm = s.gradient_norm;
    fit.log_likelihood = logistic_objective(x, y, fit.intercept, fit.coef, 0.0);
    return fit;
}

}  // namespace thyroid
