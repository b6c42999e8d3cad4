#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace thyroid {

enum class Kernel { linear, rbf };

struct SvmParams {
    double cost = 1.0;
    double gamma = 0.0;        // rbf bandwidth; 0 = 1 / number of features
    double tolerance = 1e-4;   // maximal KKT violation at exit
    long max_iter = 0;         // 0 = max(10^7, 100 n)
    bool record_trace = false; // keep the dual objective after every update
};

struct SvmFit {
    Kernel kernel = Kernel::rbf;
    double gamma = 0.0;
    std::vector<double> alpha;   // one multiplier per training row, in [0, C]
    Eigen::MatrixXd support;     // rows with alpha > 0
    Eigen::VectorXd coef;        // alpha_i * y_i for the support rows
    double rho = 0.0;            // decision = sum coef_i K(s_i, x) - rho
    Eigen::VectorXd weights;     // linear kernel only: sum coef_i s_i
    long iterations = 0;
    bool converged = false;
    double dual_objective = 0.0; // sum alpha - 1/2 alpha' Q alpha
    std::vector<double> trace;

    // Signed margins for a block of rows.
    Eigen::VectorXd decision(const Eigen::MatrixXd& x) const;
};

/// Soft-margin SVM trained by sequential minimal optimization with
/// second-order working set selection. Labels are 0/1 (1 = positive class).
SvmFit fit_svm(const Eigen::MatrixXd& x, std::span<const int> y, Kernel kernel, const SvmParams& params = {});

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma);

// Dual objective sum(alpha) - 1/2 alpha' Q alpha with Q_ij = y_i y_j K_ij.
double svm_dual_objective(const Eigen::MatrixXd& k, std::span<const int> y, std::span<const double> alpha);

}  // namespace thyroid
