#include "thyroid/models/tree.hpp"

#include <algorithm>
#include <numeric>

#include "thyroid/errors.hpp"

namespace thyroid {

int DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        const auto [n, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& node = nodes_[static_cast<std::size_t>(n)];
        if (!node.leaf()) {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return deepest;
}

nlohmann::json DecisionTree::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& n : nodes_) arr.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.weight});
    return arr;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    nodes.reserve(j.size());
    for (const auto& n : j) {
        nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                         n.at(4).get<double>(), n.at(5).get<double>()});
    }
    return DecisionTree(std::move(nodes));
}

RankedFeatures::RankedFeatures(const Eigen::MatrixXd& x) : x_(&x) {
    const auto n = static_cast<std::size_t>(x.rows());
    ranks_.resize(static_cast<std::size_t>(x.cols()));
    levels_.resize(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        auto& levels = levels_[static_cast<std::size_t>(j)];
        levels.assign(x.col(j).data(), x.col(j).data() + n);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        auto& ranks = ranks_[static_cast<std::size_t>(j)];
        ranks.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x(static_cast<Eigen::Index>(i), j);
            ranks[i] = static_cast<int>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
        }
    }
}

namespace {

struct Split {
    bool found = false;
    double score = 0.0;
    int feature = -1;
    int rank = -1;  // rows with rank <= this go left
    double threshold = 0.0;

    bool better_than(const Split& other) const {
        if (!other.found) return true;
        if (score != other.score) return score > other.score;
        if (feature != other.feature) return feature < other.feature;
        return threshold < other.threshold;
    }
};

struct WorkItem {
    int node;
    int depth;
    std::vector<WeightedRow> rows;
};

class Builder {
public:
    Builder(const RankedFeatures& features, std::span<const double> target, const TreeParams& params, Rng* rng)
        : f_(features), target_(target), params_(params), rng_(rng) {
        const auto p = f_.values().cols();
        int max_distinct = 0;
        for (Eigen::Index j = 0; j < p; ++j) max_distinct = std::max(max_distinct, f_.distinct(j));
        bin_w_.assign(static_cast<std::size_t>(max_distinct), 0.0);
        bin_s_.assign(static_cast<std::size_t>(max_distinct), 0.0);
        order_.resize(static_cast<std::size_t>(p));
        std::iota(order_.begin(), order_.end(), 0);
    }

    DecisionTree build(std::span<const WeightedRow> sample, std::vector<int>* leaf_assignment) {
        if (leaf_assignment) leaf_assignment->assign(static_cast<std::size_t>(f_.values().rows()), -1);
        nodes_.clear();
        nodes_.emplace_back();
        std::vector<WorkItem> stack;
        stack.push_back({0, 0, std::vector<WeightedRow>(sample.begin(), sample.end())});

        while (!stack.empty()) {
            WorkItem item = std::move(stack.back());
            stack.pop_back();

            double w = 0.0, s = 0.0;
            for (const auto& r : item.rows) {
                w += r.weight;
                s += r.weight * target_[static_cast<std::size_t>(r.row)];
            }
            auto& node = nodes_[static_cast<std::size_t>(item.node)];
            node.weight = w;
            node.value = w > 0 ? s / w : 0.0;

            const bool depth_reached = params_.max_depth >= 0 && item.depth >= params_.max_depth;
            const bool too_small = w < 2.0 * params_.min_leaf;
            Split split;
            if (!depth_reached && !too_small && !pure(item.rows, w, s)) split = best_split(item.rows, w, s);

            if (!split.found) {
                if (leaf_assignment) {
                    for (const auto& r : item.rows) (*leaf_assignment)[static_cast<std::size_t>(r.row)] = item.node;
                }
                continue;
            }

            std::vector<WeightedRow> left, right;
            for (const auto& r : item.rows)
                (f_.rank(r.row, split.feature) <= split.rank ? left : right).push_back(r);

            const int left_id = static_cast<int>(nodes_.size());
            nodes_.emplace_back();
            nodes_.emplace_back();
            auto& parent = nodes_[static_cast<std::size_t>(item.node)];
            parent.feature = split.feature;
            parent.threshold = split.threshold;
            parent.left = left_id;
            parent.right = left_id + 1;

            stack.push_back({left_id + 1, item.depth + 1, std::move(right)});
            stack.push_back({left_id, item.depth + 1, std::move(left)});
        }
        return DecisionTree(std::move(nodes_));
    }

private:
    bool pure(const std::vector<WeightedRow>& rows, double w, double s) const {
        if (params_.criterion == SplitCriterion::gini) return s <= 0.0 || s >= w;
        const double first = target_[static_cast<std::size_t>(rows.front().row)];
        return std::all_of(rows.begin(), rows.end(),
                           [&](const WeightedRow& r) { return target_[static_cast<std::size_t>(r.row)] == first; });
    }

    double child_score(double w, double s) const {
        if (params_.criterion == SplitCriterion::gini) return (s * s + (w - s) * (w - s)) / w;
        return s * s / w;
    }

    void consider(Split& best, int feature, int lo_rank, int hi_rank, double wl, double sl, double w, double s) const {
        const double wr = w - wl;
        if (wl < params_.min_leaf || wr < params_.min_leaf) return;
        const double lo = f_.level(feature, lo_rank);
        const double hi = f_.level(feature, hi_rank);
        double threshold = lo + (hi - lo) * 0.5;
        if (!(threshold < hi)) threshold = lo;
        Split candidate{true, child_score(wl, sl) + child_score(wr, s - sl), feature, lo_rank, threshold};
        if (candidate.better_than(best)) best = candidate;
    }

    void scan_feature(Split& best, int j, const std::vector<WeightedRow>& rows, double w, double s) {
        const int distinct = f_.distinct(j);
        if (distinct < 2) return;

        if (static_cast<std::size_t>(distinct) <= 4 * rows.size()) {
            for (const auto& r : rows) {
                const auto k = static_cast<std::size_t>(f_.rank(r.row, j));
                bin_w_[k] += r.weight;
                bin_s_[k] += r.weight * target_[static_cast<std::size_t>(r.row)];
            }
            double wl = 0.0, sl = 0.0;
            int prev = -1;
            for (int k = 0; k < distinct; ++k) {
                const auto uk = static_cast<std::size_t>(k);
                if (bin_w_[uk] == 0.0) continue;
                if (prev >= 0) consider(best, j, prev, k, wl, sl, w, s);
                wl += bin_w_[uk];
                sl += bin_s_[uk];
                prev = k;
            }
            for (const auto& r : rows) {
                const auto k = static_cast<std::size_t>(f_.rank(r.row, j));
                bin_w_[k] = 0.0;
                bin_s_[k] = 0.0;
            }
            return;
        }

        sorted_.clear();
        for (const auto& r : rows) sorted_.push_back({f_.rank(r.row, j), r.weight, target_[static_cast<std::size_t>(r.row)]});
        std::sort(sorted_.begin(), sorted_.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
        double wl = 0.0, sl = 0.0;
        for (std::size_t i = 0; i < sorted_.size();) {
            const int k = sorted_[i].rank;
            if (i > 0) consider(best, j, sorted_[i - 1].rank, k, wl, sl, w, s);
            for (; i < sorted_.size() && sorted_[i].rank == k; ++i) {
                wl += sorted_[i].weight;
                sl += sorted_[i].weight * sorted_[i].target;
            }
        }
    }

    Split best_split(const std::vector<WeightedRow>& rows, double w, double s) {
        const int p = static_cast<int>(order_.size());
        Split best;
        if (params_.mtry <= 0 || params_.mtry >= p || rng_ == nullptr) {
            for (int j = 0; j < p; ++j) scan_feature(best, j, rows, w, s);
            return best;
        }
        std::iota(order_.begin(), order_.end(), 0);
        rng_->shuffle(order_);
        for (int t = 0; t < p; ++t) {
            if (t >= params_.mtry && best.found) break;
            scan_feature(best, order_[static_cast<std::size_t>(t)], rows, w, s);
        }
        return best;
    }

    struct Ranked {
        int rank;
        double weight;
        double target;
    };

    const RankedFeatures& f_;
    std::span<const double> target_;
    TreeParams params_;
    Rng* rng_;
    std::vector<TreeNode> nodes_;
    std::vector<double> bin_w_, bin_s_;
    std::vector<int> order_;
    std::vector<Ranked> sorted_;
};

}  // namespace

DecisionTree grow_tree(const RankedFeatures& features, std::span<const double> target,
                       std::span<const WeightedRow> sample, const TreeParams& params, Rng* rng,
                       std::vector<int>* leaf_assignment) {
    if (static_cast<Eigen::Index>(target.size()) != features.values().rows())
        throw InputError("grow_tree: target length does not match row count");
    if (sample.empty()) throw InputError("grow_tree: empty sample");
    if (params.min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
    Builder builder(features, target, params, rng);
    return builder.build(sample, leaf_assignment);
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const double> target, std::span<const int> rows,
                      const TreeParams& params, Rng* rng) {
    const RankedFeatures features(x);
    std::vector<WeightedRow> sample;
    sample.reserve(rows.size());
    for (int r : rows) sample.push_back({r, 1.0});
    return grow_tree(features, target, sample, params, rng);
}

}  // namespace thyroid
