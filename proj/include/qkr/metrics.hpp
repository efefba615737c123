#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <stdexcept>

#include "qkr/preprocess.hpp"

namespace qkr {

/// Error metrics of one prediction vector. rmse = sqrt(mse) always;
/// pearson_r is flagged undefined (rather than NaN) when either vector is
/// constant.
struct MetricSet {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double pearson_r = 0.0;
    bool pearson_defined = false;
    int n = 0;
};

inline MetricSet compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() == 0) throw std::invalid_argument("metrics: empty vectors");
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("metrics: length mismatch (" + std::to_string(y_true.size()) +
                                    " vs " + std::to_string(y_pred.size()) + ")");
    }
    if (!y_true.allFinite() || !y_pred.allFinite()) {
        throw std::invalid_argument("metrics: non-finite values");
    }

    MetricSet m;
    m.n = static_cast<int>(y_true.size());
    const Eigen::VectorXd err = y_pred - y_true;
    m.mae = err.cwiseAbs().mean();
    m.mse = err.squaredNorm() / static_cast<double>(m.n);
    m.rmse = std::sqrt(m.mse);

    const Eigen::VectorXd a = y_true.array() - y_true.mean();
    const Eigen::VectorXd b = y_pred.array() - y_pred.mean();
    const double var_a = a.squaredNorm();
    const double var_b = b.squaredNorm();
    if (var_a > 0.0 && var_b > 0.0) {
        m.pearson_defined = true;
        m.pearson_r = a.dot(b) / std::sqrt(var_a * var_b);
    }
    return m;
}

/// Metrics of the trivial predictor that answers the mean of the
/// experimental training labels for every test point. Synthesized labels in
/// the input are a hard error; the reference line must not see them.
inline MetricSet reference_metrics(const Eigen::VectorXd& train_labels,
                                   std::span<const Provenance> train_provenance,
                                   const Eigen::VectorXd& test_labels) {
    if (train_labels.size() == 0 || test_labels.size() == 0) {
        throw std::invalid_argument("reference_metrics: empty label sets");
    }
    if (static_cast<std::size_t>(train_labels.size()) != train_provenance.size()) {
        throw std::invalid_argument("reference_metrics: provenance length mismatch");
    }
    for (const auto p : train_provenance) {
        if (p != Provenance::Experimental) {
            throw std::invalid_argument(
                "reference_metrics: synthesized labels may not enter the reference line");
        }
    }
    const Eigen::VectorXd pred =
        Eigen::VectorXd::Constant(test_labels.size(), train_labels.mean());
    return compute_metrics(test_labels, pred);
}

/// Relative improvement (cml - qkr) / cml of the quantum model over one
/// classical mean.
inline double advantage_ratio(double qkr_mean, double cml_mean) {
    if (!(cml_mean > 0.0)) {
        throw std::invalid_argument("advantage_ratio: classical mean must be positive");
    }
    return (cml_mean - qkr_mean) / cml_mean;
}

}  // namespace qkr
