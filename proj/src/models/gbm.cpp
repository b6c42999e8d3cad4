#include "thyroid/models/gbm.hpp"

#include <cmath>
#include <numeric>

#include "thyroid/errors.hpp"
#include "thyroid/rng.hpp"
#include "thyroid/stats.hpp"

namespace thyroid {
namespace {

// Logistic loss of one row at raw score f.
double row_loss(int y, double f) {
    const double z = y ? -f : f;  // loss = log(1 + exp(z))
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double mean_loss(std::span<const int> y, const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += row_loss(y[i], f[i]);
    return s / static_cast<double>(f.size());
}

}  // namespace

GbmFit fit_gbm(const Eigen::MatrixXd& x, std::span<const int> y, const GbmParams& params, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (y.size() != n) throw InputError("fit_gbm: label count mismatch");
    if (n == 0) throw InputError("fit_gbm: no rows");
    if (params.n_trees < 0) throw ConfigError("GBM tree count must be nonnegative");
    if (!(params.shrinkage > 0.0 && params.shrinkage <= 1.0)) throw ConfigError("GBM shrinkage must be in (0, 1]");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0)) throw ConfigError("GBM subsample must be in (0, 1]");

    const double positives = static_cast<double>(std::accumulate(y.begin(), y.end(), 0));
    const double rate = positives / static_cast<double>(n);
    if (rate <= 0.0 || rate >= 1.0) throw InputError("fit_gbm: both classes are required");

    GbmFit fit;
    fit.initial = stats::logit(rate);
    std::vector<double> f(n, fit.initial), residual(n), hessian(n);
    fit.loss_trace.push_back(mean_loss(y, f));

    const RankedFeatures features(x);
    TreeParams tp;
    tp.criterion = SplitCriterion::squared_error;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;

    const auto bag = static_cast<std::size_t>(std::max(1.0, std::floor(params.subsample * static_cast<double>(n))));
    std::vector<int> rows(n);
    std::vector<WeightedRow> sample;
    std::vector<int> leaf_of;

    for (int round = 0; round < params.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = stats::sigmoid(f[i]);
            residual[i] = y[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        std::iota(rows.begin(), rows.end(), 0);
        if (bag < n) {
            Rng rng(seed, {static_cast<std::uint64_t>(round)});
            rng.shuffle(rows);
            rows.resize(bag);
            std::sort(rows.begin(), rows.end());
        }
        sample.clear();
        for (int r : rows) sample.push_back({r, 1.0});
        rows.resize(n);

        DecisionTree tree = grow_tree(features, residual, sample, tp, nullptr, &leaf_of);

        // Newton leaf values, shrunk, then halved until the leaf loss does not rise.
        auto& nodes = tree.mutable_nodes();
        std::vector<std::vector<std::size_t>> members(nodes.size());
        for (const auto& s : sample) members[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(s.row)])].push_back(static_cast<std::size_t>(s.row));
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (!nodes[k].leaf()) continue;
            nodes[k].value = 0.0;
            const auto& m = members[k];
            if (m.empty()) continue;
            double sr = 0.0, sh = 0.0, before = 0.0;
            for (std::size_t i : m) {
                sr += residual[i];
                sh += hessian[i];
                before += row_loss(y[i], f[i]);
            }
            double step = params.shrinkage * (sh > 1e-300 ? sr / sh : 0.0);
            for (int h = 0; h < 60 && step != 0.0; ++h) {
                double after = 0.0;
                for (std::size_t i : m) after += row_loss(y[i], f[i] + step);
                if (after <= before) break;
                step *= 0.5;
                if (h == 59) step = 0.0;
            }
            nodes[k].value = step;
        }
        for (std::size_t i = 0; i < n; ++i) f[i] += tree.predict(x.row(static_cast<Eigen::Index>(i)));
        fit.trees.push_back(std::move(tree));
        fit.loss_trace.push_back(mean_loss(y, f));
    }
    return fit;
}

}  // namespace thyroid
