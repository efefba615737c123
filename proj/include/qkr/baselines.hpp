#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qkr/common.hpp"
#include "qkr/kernel_svr.hpp"

namespace qkr {

enum class BaselineKind {
    RidgeLinear,
    KNearest,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    RbfSvr,
};

inline const std::vector<BaselineKind>& all_baseline_kinds() {
    static const std::vector<BaselineKind> kinds = {
        BaselineKind::RidgeLinear,    BaselineKind::KNearest,
        BaselineKind::DecisionTree,   BaselineKind::RandomForest,
        BaselineKind::GradientBoosting, BaselineKind::RbfSvr,
    };
    return kinds;
}

inline const char* baseline_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::RidgeLinear: return "ridge";
        case BaselineKind::KNearest: return "knn";
        case BaselineKind::DecisionTree: return "tree";
        case BaselineKind::RandomForest: return "forest";
        case BaselineKind::GradientBoosting: return "boost";
        case BaselineKind::RbfSvr: return "rbf-svr";
    }
    return "?";
}

struct BaselineHyper {
    double ridge_lambda = 1.0;
    int knn_k = 5;
    int tree_max_depth = 8;
    int tree_min_leaf = 2;
    int forest_trees = 100;
    int forest_mtry = 0;  // 0 = ceil(sqrt(d))
    bool forest_bootstrap = true;
    int boost_rounds = 200;
    int boost_depth = 3;
    double boost_learning_rate = 0.05;
    double rbf_c = 1.0;
    double rbf_epsilon = 0.1;
    double rbf_gamma = 0.0;  // 0 = 1/d
};

// ---------------------------------------------------------------------------
// CART regression tree, shared by the tree, forest and boosting models.
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::RowVectorXd& x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& node = nodes[static_cast<std::size_t>(idx)];
            idx = x[node.feature] <= node.threshold ? node.left : node.right;
        }
        return nodes[static_cast<std::size_t>(idx)].value;
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const {
        Eigen::VectorXd out(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i));
        return out;
    }
};

namespace detail {

// Exhaustive variance-reduction split over candidate features; ties break
// to the lowest feature index, then the lowest threshold.
struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::vector<Eigen::Index> left, right;
};

inline BestSplit find_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const std::vector<Eigen::Index>& idx,
                            const std::vector<int>& features, int min_leaf) {
    BestSplit best;
    const auto m = static_cast<Eigen::Index>(idx.size());
    double sum = 0.0, sum_sq = 0.0;
    for (const auto i : idx) {
        sum += y[i];
        sum_sq += y[i] * y[i];
    }
    const double parent_sse = sum_sq - sum * sum / static_cast<double>(m);

    std::vector<Eigen::Index> order(idx);
    for (const int f : features) {
        std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return X(a, f) != X(b, f) ? X(a, f) < X(b, f) : a < b;
        });
        double left_sum = 0.0, left_sq = 0.0;
        for (Eigen::Index p = 1; p < m; ++p) {
            const double yv = y[order[static_cast<std::size_t>(p - 1)]];
            left_sum += yv;
            left_sq += yv * yv;
            const double lo = X(order[static_cast<std::size_t>(p - 1)], f);
            const double hi = X(order[static_cast<std::size_t>(p)], f);
            if (lo == hi) continue;
            if (p < min_leaf || m - p < min_leaf) continue;
            const double right_sum = sum - left_sum;
            const double right_sq = sum_sq - left_sq;
            const double sse = (left_sq - left_sum * left_sum / static_cast<double>(p)) +
                               (right_sq - right_sum * right_sum / static_cast<double>(m - p));
            const double gain = parent_sse - sse;
            if (gain > best.gain + 1e-12) {
                best.gain = gain;
                best.feature = f;
                best.threshold = 0.5 * (lo + hi);
                best.left.assign(order.begin(), order.begin() + p);
                best.right.assign(order.begin() + p, order.end());
            }
        }
    }
    return best;
}

inline int build_tree_node(RegressionTree& tree, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, const std::vector<Eigen::Index>& idx,
                           int depth, int max_depth, int min_leaf, int mtry,
                           std::mt19937_64* rng) {
    double mean = 0.0;
    for (const auto i : idx) mean += y[i];
    mean /= static_cast<double>(idx.size());

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, mean});

    if (depth >= max_depth || static_cast<int>(idx.size()) < 2 * min_leaf) return node_id;

    std::vector<int> features(static_cast<std::size_t>(X.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (mtry > 0 && mtry < static_cast<int>(features.size()) && rng) {
        std::shuffle(features.begin(), features.end(), *rng);
        features.resize(static_cast<std::size_t>(mtry));
        std::sort(features.begin(), features.end());
    }

    const BestSplit split = find_split(X, y, idx, features, min_leaf);
    if (split.feature < 0) return node_id;

    tree.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    const int left =
        build_tree_node(tree, X, y, split.left, depth + 1, max_depth, min_leaf, mtry, rng);
    const int right =
        build_tree_node(tree, X, y, split.right, depth + 1, max_depth, min_leaf, mtry, rng);
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
}

inline RegressionTree build_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const std::vector<Eigen::Index>& idx, int max_depth,
                                 int min_leaf, int mtry = 0, std::mt19937_64* rng = nullptr) {
    RegressionTree tree;
    build_tree_node(tree, X, y, idx, 0, max_depth, min_leaf, mtry, rng);
    return tree;
}

inline std::vector<Eigen::Index> all_indices(Eigen::Index n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    return idx;
}

inline Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  double gamma) {
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < B.rows(); ++j) {
            K(i, j) = std::exp(-gamma * (A.row(i) - B.row(j)).squaredNorm());
        }
    }
    return K;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-kind fitted models.
// ---------------------------------------------------------------------------

struct RidgeModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
};

struct KnnModel {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    int k = 5;
};

struct TreeModel {
    RegressionTree tree;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
};

struct BoostModel {
    double f0 = 0.0;
    double learning_rate = 0.05;
    std::vector<RegressionTree> trees;
    std::vector<double> train_mse;  // per boosting round, non-increasing
};

struct RbfSvrModel {
    SVRModel svr;
    Eigen::MatrixXd x;
    double gamma = 0.2;
};

struct BaselineModel {
    BaselineKind kind = BaselineKind::RidgeLinear;
    std::variant<RidgeModel, KnnModel, TreeModel, ForestModel, BoostModel, RbfSvrModel> impl;
};

inline BaselineModel fit_baseline(BaselineKind kind, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y, const BaselineHyper& hyper,
                                  std::uint64_t seed) {
    const Eigen::Index n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("fit_baseline: need at least 2 rows");
    if (y.size() != n) throw std::invalid_argument("fit_baseline: label count mismatch");
    if (!X.allFinite() || !y.allFinite()) {
        throw std::invalid_argument("fit_baseline: non-finite training data");
    }

    BaselineModel model;
    model.kind = kind;
    switch (kind) {
        case BaselineKind::RidgeLinear: {
            if (hyper.ridge_lambda < 0.0) {
                throw std::invalid_argument("ridge: lambda must be >= 0");
            }
            const Eigen::RowVectorXd x_mean = X.colwise().mean();
            const double y_mean = y.mean();
            const Eigen::MatrixXd xc = X.rowwise() - x_mean;
            const Eigen::VectorXd yc = y.array() - y_mean;
            const Eigen::MatrixXd a =
                xc.transpose() * xc + hyper.ridge_lambda * Eigen::MatrixXd::Identity(d, d);
            RidgeModel m;
            m.weights = a.ldlt().solve(xc.transpose() * yc);
            m.intercept = y_mean - x_mean * m.weights;
            model.impl = std::move(m);
            break;
        }
        case BaselineKind::KNearest: {
            if (hyper.knn_k < 1 || hyper.knn_k > n) {
                throw std::invalid_argument("knn: k must lie in [1, n]");
            }
            model.impl = KnnModel{X, y, hyper.knn_k};
            break;
        }
        case BaselineKind::DecisionTree: {
            TreeModel m;
            m.tree = detail::build_tree(X, y, detail::all_indices(n), hyper.tree_max_depth,
                                        hyper.tree_min_leaf);
            model.impl = std::move(m);
            break;
        }
        case BaselineKind::RandomForest: {
            if (hyper.forest_trees < 1) throw std::invalid_argument("forest: need >= 1 tree");
            const int mtry = hyper.forest_mtry > 0
                                 ? std::min<int>(hyper.forest_mtry, static_cast<int>(d))
                                 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
            ForestModel m;
            m.trees.reserve(static_cast<std::size_t>(hyper.forest_trees));
            for (int t = 0; t < hyper.forest_trees; ++t) {
                std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
                std::vector<Eigen::Index> idx;
                if (hyper.forest_bootstrap) {
                    std::uniform_int_distribution<Eigen::Index> draw(0, n - 1);
                    idx.resize(static_cast<std::size_t>(n));
                    for (auto& v : idx) v = draw(rng);
                } else {
                    idx = detail::all_indices(n);
                }
                m.trees.push_back(detail::build_tree(X, y, idx, hyper.tree_max_depth,
                                                     hyper.tree_min_leaf,
                                                     mtry < d ? mtry : 0, &rng));
            }
            model.impl = std::move(m);
            break;
        }
        case BaselineKind::GradientBoosting: {
            if (hyper.boost_rounds < 1 || hyper.boost_learning_rate <= 0.0 ||
                hyper.boost_learning_rate >= 2.0) {
                throw std::invalid_argument("boost: bad rounds or learning rate");
            }
            BoostModel m;
            m.f0 = y.mean();
            m.learning_rate = hyper.boost_learning_rate;
            Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, m.f0);
            const auto idx = detail::all_indices(n);
            for (int r = 0; r < hyper.boost_rounds; ++r) {
                const Eigen::VectorXd residual = y - pred;
                RegressionTree tree = detail::build_tree(X, residual, idx, hyper.boost_depth,
                                                         hyper.tree_min_leaf);
                pred += m.learning_rate * tree.predict(X);
                m.trees.push_back(std::move(tree));
                m.train_mse.push_back((y - pred).squaredNorm() / static_cast<double>(n));
            }
            model.impl = std::move(m);
            break;
        }
        case BaselineKind::RbfSvr: {
            const double gamma =
                hyper.rbf_gamma > 0.0 ? hyper.rbf_gamma : 1.0 / static_cast<double>(d);
            KernelMatrix K;
            K.mode = KernelMode::Exact;
            K.values = detail::rbf_kernel(X, X, gamma);
            K.values.diagonal().setConstant(1.0);
            K.row_ids = K.col_ids = detail::default_ids(n);
            RbfSvrModel m;
            m.gamma = gamma;
            m.x = X;
            m.svr = fit_svr(K, y, hyper.rbf_c, hyper.rbf_epsilon);
            model.impl = std::move(m);
            break;
        }
    }
    return model;
}

inline Eigen::VectorXd predict_baseline(const BaselineModel& model, const Eigen::MatrixXd& X) {
    if (!X.allFinite()) throw std::invalid_argument("predict_baseline: non-finite inputs");
    return std::visit(
        [&](const auto& m) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RidgeModel>) {
                if (X.cols() != m.weights.size()) {
                    throw std::invalid_argument("ridge: feature width mismatch");
                }
                return (X * m.weights).array() + m.intercept;
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                if (X.cols() != m.x.cols()) {
                    throw std::invalid_argument("knn: feature width mismatch");
                }
                Eigen::VectorXd out(X.rows());
                const Eigen::Index n = m.x.rows();
                std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
                for (Eigen::Index q = 0; q < X.rows(); ++q) {
                    Eigen::VectorXd dist(n);
                    for (Eigen::Index i = 0; i < n; ++i) {
                        dist[i] = (m.x.row(i) - X.row(q)).norm();
                    }
                    std::iota(order.begin(), order.end(), Eigen::Index{0});
                    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
                        return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                    });
                    if (dist[order[0]] == 0.0) {
                        // exact matches dominate; average their labels
                        double sum = 0.0;
                        int count = 0;
                        for (Eigen::Index i = 0; i < n && dist[order[static_cast<std::size_t>(i)]] == 0.0; ++i) {
                            sum += m.y[order[static_cast<std::size_t>(i)]];
                            ++count;
                        }
                        out[q] = sum / count;
                        continue;
                    }
                    double wsum = 0.0, acc = 0.0;
                    for (int i = 0; i < m.k; ++i) {
                        const Eigen::Index t = order[static_cast<std::size_t>(i)];
                        const double w = 1.0 / dist[t];
                        wsum += w;
                        acc += w * m.y[t];
                    }
                    out[q] = acc / wsum;
                }
                return out;
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                return m.tree.predict(X);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                Eigen::VectorXd acc = Eigen::VectorXd::Zero(X.rows());
                for (const auto& tree : m.trees) acc += tree.predict(X);
                return acc / static_cast<double>(m.trees.size());
            } else if constexpr (std::is_same_v<T, BoostModel>) {
                Eigen::VectorXd acc = Eigen::VectorXd::Constant(X.rows(), m.f0);
                for (const auto& tree : m.trees) acc += m.learning_rate * tree.predict(X);
                return acc;
            } else {
                static_assert(std::is_same_v<T, RbfSvrModel>);
                if (X.cols() != m.x.cols()) {
                    throw std::invalid_argument("rbf-svr: feature width mismatch");
                }
                KernelMatrix cross;
                cross.mode = KernelMode::Exact;
                cross.values = detail::rbf_kernel(X, m.x, m.gamma);
                cross.row_ids = detail::default_ids(X.rows());
                cross.col_ids = m.svr.train_ids;
                return predict(m.svr, cross);
            }
        },
        model.impl);
}

}  // namespace qkr
