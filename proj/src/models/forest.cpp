#include "thyroid/models/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "thyroid/errors.hpp"
#include "thyroid/rng.hpp"

namespace thyroid {

ForestFit fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed) {
    const auto n = x.rows();
    if (static_cast<Eigen::Index>(y.size()) != n) throw InputError("fit_forest: label count mismatch");
    if (n == 0) throw InputError("fit_forest: no rows");
    if (params.n_trees < 1) throw ConfigError("random forest needs at least one tree");

    std::vector<double> target(y.begin(), y.end());
    const RankedFeatures features(x);
    TreeParams tp;
    tp.criterion = SplitCriterion::gini;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;
    tp.mtry = params.mtry > 0 ? params.mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));

    ForestFit fit;
    fit.trees.reserve(static_cast<std::size_t>(params.n_trees));
    std::vector<int> counts(static_cast<std::size_t>(n));
    std::vector<WeightedRow> sample;
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(seed, {static_cast<std::uint64_t>(t)});
        sample.clear();
        if (params.bootstrap) {
            std::fill(counts.begin(), counts.end(), 0);
            for (Eigen::Index k = 0; k < n; ++k) ++counts[rng.below(static_cast<std::uint64_t>(n))];
            for (Eigen::Index r = 0; r < n; ++r) {
                if (counts[static_cast<std::size_t>(r)] > 0)
                    sample.push_back({static_cast<int>(r), static_cast<double>(counts[static_cast<std::size_t>(r)])});
            }
        } else {
            for (Eigen::Index r = 0; r < n; ++r) sample.push_back({static_cast<int>(r), 1.0});
        }
        fit.trees.push_back(grow_tree(features, target, sample, tp, &rng));
    }
    return fit;
}

}  // namespace thyroid

namespace thyroid {

Eigen::VectorXd ForestFit::predict_matrix(const Eigen::MatrixXd& x) const {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor rows = x;
    const Eigen::Index n = rows.rows();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    if (trees.empty()) return s;

    // Branch-free walk over blocks of rows. Leaves point back to themselves,
    // so a block can keep stepping until every row has landed.
    constexpr Eigen::Index kBlock = 16;
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> child;
    for (const auto& t : trees) {
        const auto& nodes = t.nodes();
        feature.resize(nodes.size());
        threshold.resize(nodes.size());
        child.resize(2 * nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& node = nodes[i];
            if (node.leaf()) {
                feature[i] = 0;
                threshold[i] = std::numeric_limits<double>::infinity();
                child[2 * i] = child[2 * i + 1] = static_cast<int>(i);
            } else {
                feature[i] = node.feature;
                threshold[i] = node.threshold;
                child[2 * i] = node.left;
                child[2 * i + 1] = node.right;
            }
        }
        for (Eigen::Index i0 = 0; i0 < n; i0 += kBlock) {
            const Eigen::Index len = std::min(kBlock, n - i0);
            std::array<int, kBlock> at{};
            for (bool moving = true; moving;) {
                moving = false;
                for (int step = 0; step < 4; ++step) {
                    for (Eigen::Index j = 0; j < len; ++j) {
                        const auto c = static_cast<std::size_t>(at[static_cast<std::size_t>(j)]);
                        const bool right = rows(i0 + j, feature[c]) > threshold[c];
                        at[static_cast<std::size_t>(j)] = child[2 * c + (right ? 1 : 0)];
                    }
                }
                for (Eigen::Index j = 0; j < len; ++j) moving = moving || !nodes[static_cast<std::size_t>(at[static_cast<std::size_t>(j)])].leaf();
            }
            for (Eigen::Index j = 0; j < len; ++j) s[i0 + j] += nodes[static_cast<std::size_t>(at[static_cast<std::size_t>(j)])].value;
        }
    }
    return s / static_cast<double>(trees.size());
}

namespace {

ForestPathCache::FlatTree flatten(const DecisionTree& t) {
    const auto& nodes = t.nodes();
    ForestPathCache::FlatTree f;
    f.feature.resize(nodes.size());
    f.threshold.resize(nodes.size());
    f.child.resize(2 * nodes.size());
    f.value.resize(nodes.size());
    f.leaf.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        f.value[i] = node.value;
        f.leaf[i] = node.leaf() ? 1 : 0;
        if (node.leaf()) {
            f.feature[i] = 0;
            f.threshold[i] = std::numeric_limits<double>::infinity();
            f.child[2 * i] = f.child[2 * i + 1] = static_cast<int>(i);
        } else {
            f.feature[i] = node.feature;
            f.threshold[i] = node.threshold;
            f.child[2 * i] = node.left;
            f.child[2 * i + 1] = node.right;
        }
    }
    return f;
}

}  // namespace

ForestPathCache::ForestPathCache(const ForestFit& forest, const Eigen::MatrixXd& x) : n_(x.rows()) {
    const auto cells = forest.trees.size() * static_cast<std::size_t>(n_);
    flat_.reserve(forest.trees.size());
    leaf_.resize(cells);
    columns_.resize(cells);
    wide_.resize(cells);
    std::size_t cell = 0;
    for (const auto& t : forest.trees) {
        flat_.push_back(flatten(t));
        const auto& nodes = t.nodes();
        for (Eigen::Index i = 0; i < n_; ++i, ++cell) {
            std::size_t at = 0;
            std::uint64_t bits = 0;
            bool wide = false;
            while (!nodes[at].leaf()) {
                const auto& node = nodes[at];
                if (node.feature < 64) bits |= std::uint64_t{1} << node.feature;
                else wide = true;
                at = static_cast<std::size_t>(x(i, node.feature) > node.threshold ? node.right : node.left);
            }
            leaf_[cell] = nodes[at].value;
            columns_[cell] = bits;
            wide_[cell] = wide;
        }
    }
}

Eigen::VectorXd ForestPathCache::rescore(const Eigen::MatrixXd& x, std::span<const int> changed) const {
    if (x.rows() != n_) throw InputError("path cache: row count differs from the cached matrix");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor rows = x;
    std::uint64_t mask = 0;
    bool any_wide = false;
    for (int c : changed) {
        if (c < 64) mask |= std::uint64_t{1} << c;
        else any_wide = true;
    }
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
    if (flat_.empty()) return s;

    constexpr std::size_t kBlock = 16;
    std::vector<Eigen::Index> stale;
    std::size_t cell = 0;
    for (const auto& f : flat_) {
        stale.clear();
        for (Eigen::Index i = 0; i < n_; ++i, ++cell) {
            if ((columns_[cell] & mask) == 0 && !(any_wide && wide_[cell])) s[i] += leaf_[cell];
            else stale.push_back(i);
        }
        for (std::size_t b0 = 0; b0 < stale.size(); b0 += kBlock) {
            const std::size_t len = std::min(kBlock, stale.size() - b0);
            std::array<int, kBlock> at{};
            for (bool moving = true; moving;) {
                moving = false;
                for (int step = 0; step < 4; ++step) {
                    for (std::size_t j = 0; j < len; ++j) {
                        const auto c = static_cast<std::size_t>(at[j]);
                        const bool right = rows(stale[b0 + j], f.feature[c]) > f.threshold[c];
                        at[j] = f.child[2 * c + (right ? 1 : 0)];
                    }
                }
                for (std::size_t j = 0; j < len; ++j) moving = moving || !f.leaf[static_cast<std::size_t>(at[j])];
            }
            for (std::size_t j = 0; j < len; ++j) s[stale[b0 + j]] += f.value[static_cast<std::size_t>(at[j])];
        }
    }
    return s / static_cast<double>(flat_.size());
}

}  // namespace thyroid
