#include "fsel/trees.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsel/parallel.hpp"
#include "fsel/random.hpp"

namespace fsel {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // n * weighted child impurity
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                std::size_t features_per_split, const TreeParams& params, Rng& rng)
        : X_(X), y_(y), K_(n_classes), per_split_(features_per_split), params_(params), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> samples) {
        samples_ = std::move(samples);
        struct Pending {
            int node;
            std::size_t begin;
            std::size_t end;
            std::size_t depth;
        };
        std::vector<Pending> stack;
        nodes_.clear();
        nodes_.emplace_back();
        stack.push_back({0, 0, samples_.size(), 0});

        while (!stack.empty()) {
            const Pending job = stack.back();
            stack.pop_back();
            auto counts = count_labels(job.begin, job.end);
            const std::size_t n = job.end - job.begin;
            const bool pure = std::count_if(counts.begin(), counts.end(),
                                            [](std::size_t c) { return c > 0; }) <= 1;
            const bool depth_reached = params_.max_depth && job.depth >= *params_.max_depth;

            std::optional<Split> best;
            if (!pure && !depth_reached && n >= params_.min_samples_split) {
                best = find_split(job.begin, job.end, counts);
            }
            nodes_[static_cast<std::size_t>(job.node)].counts = std::move(counts);
            if (!best) continue;

            const auto mid_it = std::stable_partition(
                samples_.begin() + static_cast<std::ptrdiff_t>(job.begin),
                samples_.begin() + static_cast<std::ptrdiff_t>(job.end), [&](std::size_t i) {
                    return X_(i, static_cast<std::size_t>(best->feature)) <= best->threshold;
                });
            const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());

            const int left = static_cast<int>(nodes_.size());
            nodes_.emplace_back();
            const int right = static_cast<int>(nodes_.size());
            nodes_.emplace_back();
            auto& node = nodes_[static_cast<std::size_t>(job.node)];
            node.feature = best->feature;
            node.threshold = best->threshold;
            node.left = left;
            node.right = right;
            // Right pushed first so the left subtree is expanded first.
            stack.push_back({right, mid, job.end, job.depth + 1});
            stack.push_back({left, job.begin, mid, job.depth + 1});
        }
        return DecisionTree(std::move(nodes_), X_.cols(), K_);
    }

private:
    std::vector<std::size_t> count_labels(std::size_t begin, std::size_t end) const {
        std::vector<std::size_t> counts(K_, 0);
        for (std::size_t s = begin; s < end; ++s) ++counts[static_cast<std::size_t>(y_[samples_[s]])];
        return counts;
    }

    // Candidate features: all of them in index order, or a random draw of
    // per_split_ features that are not constant within the node.
    std::optional<Split> find_split(std::size_t begin, std::size_t end,
                                    const std::vector<std::size_t>& counts) {
        const std::size_t m = X_.cols();
        std::optional<Split> best;
        if (per_split_ >= m) {
            for (std::size_t f = 0; f < m; ++f) evaluate(f, begin, end, counts, best);
            return best;
        }
        std::vector<std::size_t> features = iota_indices(m);
        std::size_t evaluated = 0;
        for (std::size_t drawn = 0; drawn < m && evaluated < per_split_; ++drawn) {
            std::swap(features[drawn], features[drawn + uniform_index(rng_, m - drawn)]);
            if (evaluate(features[drawn], begin, end, counts, best)) ++evaluated;
        }
        return best;
    }

    // Returns false when the feature is constant within the node.
    bool evaluate(std::size_t f, std::size_t begin, std::size_t end,
                  const std::vector<std::size_t>& counts, std::optional<Split>& best) {
        const std::size_t n = end - begin;
        pairs_.resize(n);
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = samples_[begin + s];
            pairs_[s] = {X_(i, f), y_[i]};
        }
        std::sort(pairs_.begin(), pairs_.end());
        if (pairs_.front().first == pairs_.back().first) return false;

        left_.assign(K_, 0);
        right_ = counts;
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (std::size_t c : counts) right_sq += static_cast<double>(c) * static_cast<double>(c);

        for (std::size_t s = 0; s + 1 < n; ++s) {
            const auto k = static_cast<std::size_t>(pairs_[s].second);
            left_sq += 2.0 * static_cast<double>(left_[k]) + 1.0;
            right_sq -= 2.0 * static_cast<double>(right_[k]) - 1.0;
            ++left_[k];
            --right_[k];
            const double lo = pairs_[s].first;
            const double hi = pairs_[s + 1].first;
            if (lo == hi) continue;
            const auto n_left = static_cast<double>(s + 1);
            const auto n_right = static_cast<double>(n - s - 1);
            const double score = (n_left - left_sq / n_left) + (n_right - right_sq / n_right);
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold >= lo && threshold < hi)) threshold = lo;
            const int feature = static_cast<int>(f);
            if (!best || score < best->score ||
                (score == best->score &&
                 (feature < best->feature ||
                  (feature == best->feature && threshold < best->threshold)))) {
                best = Split{feature, threshold, score};
            }
        }
        return true;
    }

    const Matrix& X_;
    std::span<const int> y_;
    std::size_t K_;
    std::size_t per_split_;
    const TreeParams& params_;
    Rng& rng_;
    std::vector<std::size_t> samples_;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, int>> pairs_;
    std::vector<std::size_t> left_;
    std::vector<std::size_t> right_;
};

void check_width(const Matrix& X, std::size_t width) {
    if (X.rows() > 0 && X.cols() != width) {
        throw std::invalid_argument("predict: row width does not match training width");
    }
}

void check_train(const Dataset& train) {
    if (train.n_samples() == 0) throw std::invalid_argument("tree fit: empty training set");
    if (train.n_classes() == 0) throw std::invalid_argument("tree fit: no classes");
}

nlohmann::json node_to_json(const DecisionTree& tree, int index) {
    const auto& node = tree.nodes()[static_cast<std::size_t>(index)];
    if (node.is_leaf()) return {{"counts", node.counts}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"counts", node.counts},
            {"left", node_to_json(tree, node.left)},
            {"right", node_to_json(tree, node.right)}};
}

}  // namespace

bool operator==(const DecisionTree& a, const DecisionTree& b) {
    if (a.n_features_ != b.n_features_ || a.n_classes_ != b.n_classes_ ||
        a.nodes_.size() != b.nodes_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const auto& x = a.nodes_[i];
        const auto& y = b.nodes_[i];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
            x.right != y.right || x.counts != y.counts) {
            return false;
        }
    }
    return true;
}

double gini(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total == 0) throw std::invalid_argument("gini: all counts are zero");
    double sum_sq = 0.0;
    for (std::size_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

int majority(std::span<const std::size_t> counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

int DecisionTree::predict_row(std::span<const double> x) const {
    std::size_t index = 0;
    while (!nodes_[index].is_leaf()) {
        const auto& node = nodes_[index];
        index = static_cast<std::size_t>(
            x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return majority(nodes_[index].counts);
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [index, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& node = nodes_[index];
        if (!node.is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(node.left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(node.right), d + 1);
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree dt_fit(const Dataset& train, const TreeParams& params) {
    check_train(train);
    if (params.min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    Rng rng(params.seed);
    TreeBuilder builder(train.X, train.y, train.n_classes(), train.n_features(), params, rng);
    return builder.build(iota_indices(train.n_samples()));
}

std::vector<int> dt_predict(const DecisionTree& tree, const Matrix& X) {
    check_width(X, tree.n_features());
    std::vector<int> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = tree.predict_row(X.row(i));
    return out;
}

RandomForest rf_fit(const Dataset& train, const ForestParams& params) {
    check_train(train);
    const std::size_t m = train.n_features();
    const std::size_t n = train.n_samples();
    if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    if (params.tree.min_samples_split < 2) {
        throw std::invalid_argument("min_samples_split must be >= 2");
    }
    const std::size_t per_split = params.features_per_split.value_or(
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m))))));
    if (per_split < 1 || per_split > m) {
        throw std::invalid_argument("features_per_split must lie in [1, m]");
    }

    RandomForest forest;
    forest.n_features = m;
    forest.n_classes = train.n_classes();
    forest.trees.resize(params.n_trees);
    forest.tree_seeds.resize(params.n_trees);

    auto build_one = [&](std::size_t t) {
        const std::uint64_t seed = params.seed + t;
        Rng rng(seed);
        std::vector<std::size_t> samples;
        if (params.bootstrap) {
            samples.resize(n);
            for (auto& s : samples) s = uniform_index(rng, n);
        } else {
            samples = iota_indices(n);
        }
        TreeBuilder builder(train.X, train.y, train.n_classes(), per_split, params.tree, rng);
        forest.trees[t] = builder.build(std::move(samples));
        forest.tree_seeds[t] = seed;
    };

    parallel_for(params.n_trees, params.n_threads, build_one);
    return forest;
}

std::vector<int> rf_predict(const RandomForest& forest, const Matrix& X) {
    check_width(X, forest.n_features);
    std::vector<int> out(X.rows());
    std::vector<std::size_t> votes(forest.n_classes);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& tree : forest.trees) ++votes[static_cast<std::size_t>(tree.predict_row(X.row(i)))];
        out[i] = majority(votes);
    }
    return out;
}

nlohmann::json tree_to_json(const DecisionTree& tree) {
    return {{"n_features", tree.n_features()},
            {"n_classes", tree.n_classes()},
            {"root", tree.nodes().empty() ? nlohmann::json() : node_to_json(tree, 0)}};
}

nlohmann::json forest_to_json(const RandomForest& forest) {
    auto trees = nlohmann::json::array();
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        auto doc = tree_to_json(forest.trees[t]);
        doc["seed"] = forest.tree_seeds[t];
        trees.push_back(std::move(doc));
    }
    return {{"n_features", forest.n_features}, {"n_classes", forest.n_classes}, {"trees", trees}};
}

}  // namespace fsel
