#include "thyroid/models/lda.hpp"

#include <cmath>

#include "thyroid/errors.hpp"

namespace thyroid {

LdaFit fit_lda(const Eigen::MatrixXd& x, std::span<const int> y, const LdaParams& params) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw InputError("fit_lda: label count mismatch");

    LdaFit fit;
    fit.mean_benign = Eigen::VectorXd::Zero(p);
    fit.mean_malignant = Eigen::VectorXd::Zero(p);
    double n1 = 0, n0 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[static_cast<std::size_t>(i)]) {
            fit.mean_malignant += x.row(i).transpose();
            n1 += 1;
        } else {
            fit.mean_benign += x.row(i).transpose();
            n0 += 1;
        }
    }
    if (n0 == 0 || n1 == 0) throw InputError("fit_lda: both classes are required");
    fit.mean_malignant /= n1;
    fit.mean_benign /= n0;
    fit.prior_malignant = n1 / (n0 + n1);

    Eigen::MatrixXd centered(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        centered.row(i) = x.row(i) - (y[static_cast<std::size_t>(i)] ? fit.mean_malignant : fit.mean_benign).transpose();
    const double dof = n > 2 ? static_cast<double>(n - 2) : static_cast<double>(n);
    fit.pooled_cov = centered.transpose() * centered / dof;

    double ridge = p > 0 ? params.ridge_scale * fit.pooled_cov.trace() / static_cast<double>(p) : 0.0;
    if (!(ridge > 0.0)) ridge = params.ridge_scale;
    fit.pooled_cov.diagonal().array() += ridge;

    const Eigen::VectorXd diff = fit.mean_malignant - fit.mean_benign;
    fit.direction = fit.pooled_cov.ldlt().solve(diff);
    fit.offset = -0.5 * fit.direction.dot(fit.mean_malignant + fit.mean_benign) +
                 std::log(fit.prior_malignant / (1.0 - fit.prior_malignant));
    return fit;
}

}  // namespace thyroid
