#include "thyroid/models/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thyroid/errors.hpp"

namespace thyroid {
namespace {

constexpr double kTau = 1e-12;

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma) {
    Eigen::MatrixXd k = a * b.transpose();
    if (kernel == Kernel::linear) return k;
    const Eigen::VectorXd na = a.rowwise().squaredNorm();
    const Eigen::VectorXd nb = b.rowwise().squaredNorm();
    k = ((-2.0 * k).colwise() + na).rowwise() + nb.transpose();
    k = (-gamma * k.array().max(0.0)).exp().matrix();
    return k;
}

double svm_dual_objective(const Eigen::MatrixXd& k, std::span<const int> y, std::span<const double> alpha) {
    const auto n = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd ya(n);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yi = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
        ya[i] = yi * alpha[static_cast<std::size_t>(i)];
        sum += alpha[static_cast<std::size_t>(i)];
    }
    return sum - 0.5 * ya.dot(k * ya);
}

Eigen::VectorXd SvmFit::decision(const Eigen::MatrixXd& x) const {
    if (kernel == Kernel::linear) return (x * weights).array() - rho;
    if (support.rows() == 0) return Eigen::VectorXd::Constant(x.rows(), -rho);
    return (kernel_matrix(x, support, kernel, gamma) * coef).array() - rho;
}

SvmFit fit_svm(const Eigen::MatrixXd& x, std::span<const int> labels, Kernel kernel, const SvmParams& params) {
    const auto n = x.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw InputError("fit_svm: label count mismatch");
    if (n == 0) throw InputError("fit_svm: no rows");
    if (!(params.cost > 0.0)) throw ConfigError("SVM cost must be positive");

    SvmFit fit;
    fit.kernel = kernel;
    fit.gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));

    const double c = params.cost;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;

    // Q_ij = y_i y_j K_ij, held in full.
    Eigen::MatrixXd q = kernel_matrix(x, x, kernel, fit.gamma);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) q(i, j) *= y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    }

    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> grad(static_cast<std::size_t>(n), -1.0);  // Q alpha - e
    const long max_iter = params.max_iter > 0 ? params.max_iter : std::max<long>(10'000'000L, 100L * n);

    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < alpha.size(); ++t) f += alpha[t] * (grad[t] - 1.0);
        return -0.5 * f;
    };
    auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
    auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

    long iter = 0;
    for (; iter < max_iter; ++iter) {
        // First index: maximal violation -y_t G_t over I_up.
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < alpha.size(); ++t) {
            if (in_up(t) && -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        }
        // Second index: largest second-order objective decrease over I_low.
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_decrease = std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        for (std::size_t t = 0; t < alpha.size(); ++t) {
            if (!in_low(t)) continue;
            const double yg = y[t] * grad[t];
            gmax2 = std::max(gmax2, yg);
            if (i < 0) continue;
            const double diff = gmax + yg;
            if (diff <= 0.0) continue;
            const auto ui = static_cast<Eigen::Index>(i);
            const auto ut = static_cast<Eigen::Index>(t);
            double quad = q(ui, ui) + q(ut, ut) - 2.0 * y[static_cast<std::size_t>(i)] * y[t] * q(ui, ut);
            if (quad <= 0.0) quad = kTau;
            const double decrease = -diff * diff / quad;
            if (decrease < best_decrease) {
                best_decrease = decrease;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < params.tolerance) {
            fit.converged = true;
            break;
        }

        const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
        const auto ei = static_cast<Eigen::Index>(i), ej = static_cast<Eigen::Index>(j);
        const double old_i = alpha[si], old_j = alpha[sj];
        if (y[si] != y[sj]) {
            double quad = q(ei, ei) + q(ej, ej) + 2.0 * q(ei, ej);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[si] - grad[sj]) / quad;
            const double diff = alpha[si] - alpha[sj];
            alpha[si] += delta;
            alpha[sj] += delta;
            if (diff > 0.0) {
                if (alpha[sj] < 0.0) {
                    alpha[sj] = 0.0;
                    alpha[si] = diff;
                }
            } else if (alpha[si] < 0.0) {
                alpha[si] = 0.0;
                alpha[sj] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[si] > c) {
                    alpha[si] = c;
                    alpha[sj] = c - diff;
                }
            } else if (alpha[sj] > c) {
                alpha[sj] = c;
                alpha[si] = c + diff;
            }
        } else {
            double quad = q(ei, ei) + q(ej, ej) - 2.0 * q(ei, ej);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[si] - grad[sj]) / quad;
            const double sum = alpha[si] + alpha[sj];
            alpha[si] -= delta;
            alpha[sj] += delta;
            if (sum > c) {
                if (alpha[si] > c) {
                    alpha[si] = c;
                    alpha[sj] = sum - c;
                }
            } else if (alpha[sj] < 0.0) {
                alpha[sj] = 0.0;
                alpha[si] = sum;
            }
            if (sum > c) {
                if (alpha[sj] > c) {
                    alpha[sj] = c;
                    alpha[si] = sum - c;
                }
            } else if (alpha[si] < 0.0) {
                alpha[si] = 0.0;
                alpha[sj] = sum;
            }
        }

        const double di = alpha[si] - old_i, dj = alpha[sj] - old_j;
        for (Eigen::Index t = 0; t < n; ++t) grad[static_cast<std::size_t>(t)] += q(t, ei) * di + q(t, ej) * dj;
        if (params.record_trace) fit.trace.push_back(objective());
    }
    fit.iterations = iter;

    // Offset from free multipliers, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    int free_count = 0;
    for (std::size_t t = 0; t < alpha.size(); ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    fit.rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);
    fit.dual_objective = objective();

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (alpha[static_cast<std::size_t>(t)] > 0.0) sv.push_back(t);
    }
    fit.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    fit.coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        fit.support.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
        fit.coef[static_cast<Eigen::Index>(s)] = alpha[static_cast<std::size_t>(sv[s])] * y[static_cast<std::size_t>(sv[s])];
    }
    fit.weights = fit.support.transpose() * fit.coef;
    fit.alpha = std::move(alpha);
    return fit;
}

}  // namespace thyroid
