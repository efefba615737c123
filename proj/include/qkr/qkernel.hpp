#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkr/common.hpp"
#include "qkr/feature_map.hpp"

namespace qkr {

enum class KernelMode { Exact, Sampled };

/// Gram (or cross) matrix of pairwise state fidelities. Square exact-mode
/// matrices are symmetric, unit-diagonal and positive semidefinite.
struct KernelMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    KernelMode mode = KernelMode::Exact;
    std::uint64_t shots = 0;  // Sampled mode only

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

namespace detail {

inline std::vector<std::string> default_ids(Eigen::Index n) {
    std::vector<std::string> ids(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

inline void check_width(const FeatureMapSpec& spec, const Eigen::MatrixXd& X, const char* what) {
    if (X.cols() != spec.n_features) {
        throw std::invalid_argument(std::string(what) + ": feature width " +
                                    std::to_string(X.cols()) + " does not match map width " +
                                    std::to_string(spec.n_features));
    }
}

inline std::vector<QuantumState> encode_rows(const FeatureMapSpec& spec,
                                             const Eigen::MatrixXd& X) {
    std::vector<QuantumState> states;
    states.reserve(static_cast<std::size_t>(X.rows()));
    std::vector<double> row(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        states.push_back(encode(spec, row));
    }
    return states;
}

}  // namespace detail

/// Exact fidelity |<phi(x)|phi(y)>|^2 via statevector overlap.
inline double kernel_entry_exact(const FeatureMapSpec& spec, std::span<const double> x,
                                 std::span<const double> y) {
    const QuantumState sx = encode(spec, x);
    const QuantumState sy = encode(spec, y);
    return std::norm(inner_product(sx, sy));
}

/// Shot-based fidelity estimate: runs the compute-uncompute circuit
/// (encode x, then the adjoint of encode y) on |0...0> and returns the
/// observed all-zero frequency. Its expectation is the exact fidelity.
inline double kernel_entry_sampled(const FeatureMapSpec& spec, std::span<const double> x,
                                   std::span<const double> y, std::uint64_t shots,
                                   std::uint64_t seed) {
    if (shots == 0) throw std::invalid_argument("kernel_entry_sampled: shots must be >= 1");
    const CircuitProgram forward = build_circuit(spec, x);
    const CircuitProgram backward = build_circuit(spec, y);

    QuantumState state = new_zero_state(spec.n_features);
    apply_circuit(state, forward.gates);
    apply_circuit(state, adjoint_gates(backward));

    const auto counts = sample_measurement(state, shots, seed);
    const auto it = counts.find(0);
    const std::uint64_t zeros = it == counts.end() ? 0 : it->second;
    return static_cast<double>(zeros) / static_cast<double>(shots);
}

/// Pairwise kernel of the rows of X. Exact mode computes the upper triangle
/// once, mirrors it, and pins the diagonal to exactly 1. Sampled mode draws
/// each entry with a seed derived from (master seed, i, j), so results do
/// not depend on evaluation order.
inline KernelMatrix gram_matrix(const FeatureMapSpec& spec, const Eigen::MatrixXd& X,
                                std::vector<std::string> ids, KernelMode mode,
                                std::uint64_t shots = 0, std::uint64_t seed = 0) {
    detail::check_width(spec, X, "gram_matrix");
    const Eigen::Index n = X.rows();
    if (n == 0) throw std::invalid_argument("gram_matrix: empty dataset");
    if (ids.empty()) ids = detail::default_ids(n);
    if (static_cast<Eigen::Index>(ids.size()) != n) {
        throw std::invalid_argument("gram_matrix: id count does not match row count");
    }

    KernelMatrix K;
    K.mode = mode;
    K.shots = mode == KernelMode::Sampled ? shots : 0;
    K.values.resize(n, n);
    K.row_ids = ids;
    K.col_ids = std::move(ids);

    if (mode == KernelMode::Exact) {
        const auto states = detail::encode_rows(spec, X);
        for (Eigen::Index i = 0; i < n; ++i) {
            K.values(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double v = std::norm(inner_product(states[i], states[j]));
                K.values(i, j) = v;
                K.values(j, i) = v;
            }
        }
    } else {
        std::vector<double> xi(static_cast<std::size_t>(X.cols()));
        std::vector<double> xj(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                Eigen::Map<Eigen::VectorXd>(xi.data(), X.cols()) = X.row(i);
                Eigen::Map<Eigen::VectorXd>(xj.data(), X.cols()) = X.row(j);
                const double v = kernel_entry_sampled(
                    spec, xi, xj, shots,
                    derive_seed(seed, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(j)));
                K.values(i, j) = v;
                K.values(j, i) = v;
            }
        }
    }
    return K;
}

inline KernelMatrix gram_matrix(const FeatureMapSpec& spec, const Eigen::MatrixXd& X,
                                KernelMode mode = KernelMode::Exact, std::uint64_t shots = 0,
                                std::uint64_t seed = 0) {
    return gram_matrix(spec, X, {}, mode, shots, seed);
}

/// Rectangular kernel between test rows and training rows; entry (i, j) is
/// kernel(test_i, train_j).
inline KernelMatrix cross_matrix(const FeatureMapSpec& spec, const Eigen::MatrixXd& X_test,
                                 std::vector<std::string> test_ids,
                                 const Eigen::MatrixXd& X_train,
                                 std::vector<std::string> train_ids, KernelMode mode,
                                 std::uint64_t shots = 0, std::uint64_t seed = 0) {
    detail::check_width(spec, X_test, "cross_matrix");
    if (X_test.cols() != X_train.cols()) {
        throw std::invalid_argument("cross_matrix: feature width mismatch between sets");
    }
    if (X_test.rows() == 0 || X_train.rows() == 0) {
        throw std::invalid_argument("cross_matrix: empty dataset");
    }
    if (test_ids.empty()) test_ids = detail::default_ids(X_test.rows());
    if (train_ids.empty()) train_ids = detail::default_ids(X_train.rows());

    KernelMatrix K;
    K.mode = mode;
    K.shots = mode == KernelMode::Sampled ? shots : 0;
    K.values.resize(X_test.rows(), X_train.rows());
    K.row_ids = std::move(test_ids);
    K.col_ids = std::move(train_ids);

    if (mode == KernelMode::Exact) {
        const auto test_states = detail::encode_rows(spec, X_test);
        const auto train_states = detail::encode_rows(spec, X_train);
        for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
            for (Eigen::Index j = 0; j < X_train.rows(); ++j) {
                K.values(i, j) = std::norm(inner_product(test_states[i], train_states[j]));
            }
        }
    } else {
        std::vector<double> xi(static_cast<std::size_t>(X_test.cols()));
        std::vector<double> xj(static_cast<std::size_t>(X_train.cols()));
        for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
            for (Eigen::Index j = 0; j < X_train.rows(); ++j) {
                Eigen::Map<Eigen::VectorXd>(xi.data(), X_test.cols()) = X_test.row(i);
                Eigen::Map<Eigen::VectorXd>(xj.data(), X_train.cols()) = X_train.row(j);
                K.values(i, j) = kernel_entry_sampled(
                    spec, xi, xj, shots,
                    derive_seed(seed, 0x7e57ULL + static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(j)));
            }
        }
    }
    return K;
}

/// Nearest positive-semidefinite repair: eigendecompose, clip negative
/// eigenvalues to zero, reconstruct and re-symmetrize. Already-PSD input
/// passes through unchanged up to roundoff.
inline KernelMatrix psd_project(const KernelMatrix& K) {
    if (K.rows() != K.cols()) throw std::invalid_argument("psd_project: matrix must be square");
    const Eigen::MatrixXd sym = 0.5 * (K.values + K.values.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("psd_project: eigensolve failed");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    KernelMatrix out = K;
    out.values = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    out.values = 0.5 * (out.values + out.values.transpose()).eval();
    return out;
}

/// Heatmap-ready CSV with record ids in the header row and first column.
inline void write_kernel_csv(std::ostream& os, const KernelMatrix& K) {
    os << "id";
    for (const auto& id : K.col_ids) os << ',' << id;
    os << '\n';
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        os << K.row_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < K.cols(); ++j) os << ',' << format_double(K.values(i, j));
        os << '\n';
    }
}

}  // namespace qkr
