#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkr/qkernel.hpp"

namespace qkr {

/// Epsilon-insensitive support vector regressor in dual form over a
/// precomputed kernel. beta_i = alpha_i - alpha*_i per training point.
struct SVRModel {
    Eigen::VectorXd beta;
    double bias = 0.0;
    double c = 1.0;
    double epsilon = 0.1;
    std::vector<int> support_ids;  // indices with |beta_i| > 1e-9
    std::vector<std::string> train_ids;
    double kkt_violation = 0.0;  // maximal violating-pair gap at convergence
    std::int64_t pair_updates = 0;
};

namespace detail {

// The dual is solved over 2n box variables z = [alpha; alpha*] with the
// single equality constraint sum(alpha) - sum(alpha*) = 0. Index t < n is
// alpha_t (direction +1), t >= n is alpha*_{t-n} (direction -1).
struct SmoState {
    Eigen::Index n = 0;
    double c = 0.0;
    double epsilon = 0.0;
    std::vector<double> z;  // 2n, in [0, C]
    Eigen::VectorXd beta;   // z[t] - z[t+n]
    Eigen::VectorXd f;      // K * beta, kept incrementally

    double selection_value(const Eigen::VectorXd& y, Eigen::Index t) const {
        const Eigen::Index b = t % n;
        const double base = y[b] - f[b];
        return t < n ? base - epsilon : base + epsilon;
    }

    bool in_up(Eigen::Index t) const {
        return t < n ? z[static_cast<std::size_t>(t)] < c : z[static_cast<std::size_t>(t)] > 0.0;
    }

    bool in_low(Eigen::Index t) const {
        return t < n ? z[static_cast<std::size_t>(t)] > 0.0 : z[static_cast<std::size_t>(t)] < c;
    }
};

// Maximal violating pair: i maximizes the selection value over the "up"
// set, j minimizes it over the "low" set; ties resolve to the lowest index.
struct ViolatingPair {
    Eigen::Index i = -1, j = -1;
    double m = 0.0, big_m = 0.0;
    double gap() const { return m - big_m; }
};

inline ViolatingPair select_pair(const SmoState& s, const Eigen::VectorXd& y) {
    ViolatingPair p;
    p.m = -std::numeric_limits<double>::infinity();
    p.big_m = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < 2 * s.n; ++t) {
        const double v = s.selection_value(y, t);
        if (s.in_up(t) && v > p.m) {
            p.m = v;
            p.i = t;
        }
        if (s.in_low(t) && v < p.big_m) {
            p.big_m = v;
            p.j = t;
        }
    }
    if (p.i < 0 || p.j < 0) throw std::runtime_error("svr: infeasible dual state");
    return p;
}

// Dual objective -1/2 b'Kb - eps * sum(z) + y'b, evaluated from the cache.
inline double dual_objective(const SmoState& s, const Eigen::VectorXd& y) {
    double sum_z = 0.0;
    for (double v : s.z) sum_z += v;
    return -0.5 * s.beta.dot(s.f) - s.epsilon * sum_z + y.dot(s.beta);
}

}  // namespace detail

/// Trains the regressor by sequential minimal optimization: repeatedly picks
/// the maximal KKT-violating pair and solves its two-variable subproblem in
/// closed form. Deterministic. Throws on non-convergence within the pair
/// update budget (default 10 * n^2, at least 1000).
inline SVRModel fit_svr(const KernelMatrix& K, const Eigen::VectorXd& y, double c, double epsilon,
                        double tol = 1e-3, std::int64_t max_passes = 0,
                        std::vector<double>* objective_trace = nullptr) {
    const Eigen::Index n = K.rows();
    if (n == 0) throw std::invalid_argument("fit_svr: empty training set");
    if (K.rows() != K.cols()) throw std::invalid_argument("fit_svr: kernel must be square");
    if (y.size() != n) throw std::invalid_argument("fit_svr: label count does not match kernel");
    if (!y.allFinite()) throw std::invalid_argument("fit_svr: non-finite labels");
    if (!(c > 0.0)) throw std::invalid_argument("fit_svr: C must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("fit_svr: epsilon must be non-negative");
    if ((K.values - K.values.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
        throw std::invalid_argument("fit_svr: kernel matrix is not symmetric");
    }

    detail::SmoState s;
    s.n = n;
    s.c = c;
    s.epsilon = epsilon;
    s.z.assign(static_cast<std::size_t>(2 * n), 0.0);
    s.beta = Eigen::VectorXd::Zero(n);
    s.f = Eigen::VectorXd::Zero(n);

    const std::int64_t budget =
        max_passes > 0 ? max_passes : std::max<std::int64_t>(1000, 10 * n * n);
    std::int64_t updates = 0;
    double gap = 0.0;

    if (objective_trace) objective_trace->push_back(detail::dual_objective(s, y));

    while (true) {
        const auto pair = detail::select_pair(s, y);
        gap = pair.gap();
        if (gap <= tol) break;
        if (updates >= budget) {
            throw std::runtime_error("fit_svr: no convergence after " + std::to_string(updates) +
                                     " pair updates (KKT gap " + std::to_string(gap) + ")");
        }

        const Eigen::Index bi = pair.i % n;
        const Eigen::Index bj = pair.j % n;
        const double ui = pair.i < n ? 1.0 : -1.0;
        const double uj = pair.j < n ? 1.0 : -1.0;

        double eta = K.values(bi, bi) + K.values(bj, bj) - 2.0 * K.values(bi, bj);
        if (eta < -1e-8) {
            throw std::invalid_argument("fit_svr: kernel is not positive semidefinite (eta " +
                                        std::to_string(eta) + ")");
        }

        // z_i moves by +ui*d, z_j by -uj*d; headrooms keep both inside [0, C].
        auto& zi = s.z[static_cast<std::size_t>(pair.i)];
        auto& zj = s.z[static_cast<std::size_t>(pair.j)];
        const double head_i = ui > 0.0 ? c - zi : zi;
        const double head_j = uj > 0.0 ? zj : c - zj;
        double d = std::min(head_i, head_j);
        if (eta > 1e-12) d = std::min(d, gap / eta);

        zi += ui * d;
        zj -= uj * d;
        // Both moves add +d to beta at base(i) and -d at base(j).
        s.beta[bi] += d;
        s.beta[bj] -= d;
        s.f += d * (K.values.col(bi) - K.values.col(bj));
        ++updates;

        if (objective_trace) objective_trace->push_back(detail::dual_objective(s, y));
    }

    // Complementarity cleanup: shrinking alpha and alpha* together leaves
    // beta unchanged and never raises the KKT gap.
    for (Eigen::Index t = 0; t < n; ++t) {
        auto& a = s.z[static_cast<std::size_t>(t)];
        auto& astar = s.z[static_cast<std::size_t>(t + n)];
        const double r = std::min(a, astar);
        a -= r;
        astar -= r;
    }

    // Duplicate training rows (identical kernel column and label) share
    // their dual weight evenly; the optimum only constrains the group sum.
    std::vector<Eigen::Index> group(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) group[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (group[static_cast<std::size_t>(i)] != i) continue;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (group[static_cast<std::size_t>(j)] != j) continue;
            if (y[i] == y[j] && (K.values.col(i).array() == K.values.col(j).array()).all()) {
                group[static_cast<std::size_t>(j)] = i;
            }
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (group[static_cast<std::size_t>(i)] != i) continue;
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index j = i; j < n; ++j) {
            if (group[static_cast<std::size_t>(j)] == i) {
                sum += s.beta[j];
                ++count;
            }
        }
        if (count > 1) {
            const double mean = sum / static_cast<double>(count);
            for (Eigen::Index j = i; j < n; ++j) {
                if (group[static_cast<std::size_t>(j)] == i) s.beta[j] = mean;
            }
        }
    }

    // Bias from free support vectors; the midpoint of the KKT bracket is the
    // fallback when every support vector sits on the box boundary.
    const double margin = 1e-9 * c;
    double bias_sum = 0.0;
    int bias_count = 0;
    for (Eigen::Index t = 0; t < 2 * n; ++t) {
        const double zt = s.z[static_cast<std::size_t>(t)];
        if (zt > margin && zt < c - margin) {
            bias_sum += s.selection_value(y, t);
            ++bias_count;
        }
    }
    const auto final_pair = detail::select_pair(s, y);
    const double bias =
        bias_count > 0 ? bias_sum / bias_count : 0.5 * (final_pair.m + final_pair.big_m);

    SVRModel model;
    model.beta = s.beta;
    model.bias = bias;
    model.c = c;
    model.epsilon = epsilon;
    model.train_ids = K.row_ids;
    model.kkt_violation = std::max(0.0, final_pair.gap());
    model.pair_updates = updates;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(model.beta[i]) > 1e-9) model.support_ids.push_back(static_cast<int>(i));
    }
    return model;
}

/// Predictions y_hat_i = sum_j beta_j * K_cross(i, j) + bias. The cross
/// matrix columns must align with the model's training records.
inline Eigen::VectorXd predict(const SVRModel& model, const KernelMatrix& k_cross) {
    if (k_cross.cols() != model.beta.size()) {
        throw std::invalid_argument("predict: cross matrix has " + std::to_string(k_cross.cols()) +
                                    " columns, model has " + std::to_string(model.beta.size()) +
                                    " training points");
    }
    if (k_cross.col_ids != model.train_ids) {
        throw std::invalid_argument("predict: cross matrix columns are not aligned with the "
                                    "model's training records");
    }
    return (k_cross.values * model.beta).array() + model.bias;
}

/// Maximal KKT violating-pair gap of the model on its training problem;
/// converged models report at most the fit tolerance.
inline double kkt_report(const SVRModel& model, const KernelMatrix& K, const Eigen::VectorXd& y) {
    const Eigen::Index n = K.rows();
    if (n != model.beta.size() || K.cols() != n || y.size() != n) {
        throw std::invalid_argument("kkt_report: shape mismatch");
    }
    detail::SmoState s;
    s.n = n;
    s.c = model.c;
    s.epsilon = model.epsilon;
    s.z.assign(static_cast<std::size_t>(2 * n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.z[static_cast<std::size_t>(i)] = std::max(model.beta[i], 0.0);
        s.z[static_cast<std::size_t>(i + n)] = std::max(-model.beta[i], 0.0);
    }
    s.beta = model.beta;
    s.f = K.values * model.beta;
    const auto pair = detail::select_pair(s, y);
    return std::max(0.0, pair.gap());
}

/// Dual objective -1/2 b'Kb - eps * sum|b| + y'b of a complementary dual
/// point; what the SMO maximizes, exposed for diagnostics.
inline double svr_dual_objective(const SVRModel& model, const KernelMatrix& K,
                                 const Eigen::VectorXd& y) {
    return -0.5 * model.beta.dot(K.values * model.beta) -
           model.epsilon * model.beta.cwiseAbs().sum() + y.dot(model.beta);
}

}  // namespace qkr
