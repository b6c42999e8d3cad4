#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

// Brute-force maximum of the soft-margin SVM dual
//   max sum(a) - 1/2 a'Qa  s.t.  y'a = 0, 0 <= a <= C,  Q_ij = y_i y_j K_ij
// by enumerating which multipliers sit at 0, at C, or strictly between, and
// solving the equality-constrained stationarity system on the free set.
// Exponential in n; meant for n <= 12.
inline double svm_dual_bruteforce(const Eigen::MatrixXd& k, std::span<const int> labels, double c) {
    const int n = static_cast<int>(labels.size());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(k);

    long cases = 1;
    for (int i = 0; i < n; ++i) cases *= 3;

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> state(static_cast<std::size_t>(n));
    std::vector<int> free_idx;
    for (long code = 0; code < cases; ++code) {
        long rem = code;
        free_idx.clear();
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(rem % 3);
            rem /= 3;
            if (state[static_cast<std::size_t>(i)] == 1) a[i] = c;
            if (state[static_cast<std::size_t>(i)] == 2) free_idx.push_back(i);
        }
        const int f = static_cast<int>(free_idx.size());
        if (f == 0) {
            if (std::abs(y.dot(a)) > 1e-9) continue;
        } else {
            // [Q_FF y_F; y_F' 0] [a_F; b] = [1 - Q_FB a_B; -y_B' a_B]
            Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(f + 1, f + 1);
            Eigen::VectorXd rhs(f + 1);
            const Eigen::VectorXd qa = q * a;
            for (int r = 0; r < f; ++r) {
                const int i = free_idx[static_cast<std::size_t>(r)];
                for (int s = 0; s < f; ++s) sys(r, s) = q(i, free_idx[static_cast<std::size_t>(s)]);
                sys(r, f) = y[i];
                sys(f, r) = y[i];
                rhs[r] = 1.0 - qa[i];
            }
            rhs[f] = -y.dot(a);
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys);
            const Eigen::VectorXd sol = cod.solve(rhs);
            if ((sys * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) continue;
            bool feasible = true;
            for (int r = 0; r < f; ++r) {
                const double v = sol[r];
                if (v < -1e-12 || v > c + 1e-12) {
                    feasible = false;
                    break;
                }
                a[free_idx[static_cast<std::size_t>(r)]] = std::clamp(v, 0.0, c);
            }
            if (!feasible || std::abs(y.dot(a)) > 1e-9) continue;
        }
        const double obj = a.sum() - 0.5 * a.dot(q * a);
        best = std::max(best, obj);
    }
    return best;
}

// Tie-corrected pairwise AUROC by direct enumeration.
inline double pair_auroc(std::span<const double> s, std::span<const int> y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            pairs += 1;
            if (s[i] > s[j]) wins += 1;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

}  // namespace oracles
