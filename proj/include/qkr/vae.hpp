#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkr/common.hpp"
#include "qkr/preprocess.hpp"

namespace qkr {

struct VAEHyper {
    int hidden = 16;
    int latent = 3;
    int epochs = 200;
    double learning_rate = 1e-2;
    int batch_size = 0;  // 0 = full batch
    double kl_weight = 1.0;
};

/// Weights of the encoder (input -> hidden -> latent mean/log-variance) and
/// decoder (latent -> hidden -> input); tanh hidden layers, linear outputs.
/// The same struct doubles as the gradient container.
struct VAEParams {
    int input = 0, hidden = 0, latent = 0;
    Eigen::MatrixXd w_enc, w_mu, w_logvar, w_dec, w_out;
    Eigen::VectorXd b_enc, b_mu, b_logvar, b_dec, b_out;
    double label_lo = 0.0, label_hi = 0.0;  // observed training label range

    static VAEParams zeros(int input, int hidden, int latent) {
        VAEParams p;
        p.input = input;
        p.hidden = hidden;
        p.latent = latent;
        p.w_enc = Eigen::MatrixXd::Zero(hidden, input);
        p.b_enc = Eigen::VectorXd::Zero(hidden);
        p.w_mu = Eigen::MatrixXd::Zero(latent, hidden);
        p.b_mu = Eigen::VectorXd::Zero(latent);
        p.w_logvar = Eigen::MatrixXd::Zero(latent, hidden);
        p.b_logvar = Eigen::VectorXd::Zero(latent);
        p.w_dec = Eigen::MatrixXd::Zero(hidden, latent);
        p.b_dec = Eigen::VectorXd::Zero(hidden);
        p.w_out = Eigen::MatrixXd::Zero(input, hidden);
        p.b_out = Eigen::VectorXd::Zero(input);
        return p;
    }

    bool all_finite() const {
        return w_enc.allFinite() && b_enc.allFinite() && w_mu.allFinite() && b_mu.allFinite() &&
               w_logvar.allFinite() && b_logvar.allFinite() && w_dec.allFinite() &&
               b_dec.allFinite() && w_out.allFinite() && b_out.allFinite();
    }

    template <typename F>
    void for_each_tensor(F&& f) {
        f(w_enc); f(w_mu); f(w_logvar); f(w_dec); f(w_out);
        f(b_enc); f(b_mu); f(b_logvar); f(b_dec); f(b_out);
    }
};

struct VAELossTerms {
    double loss = 0.0;
    double reconstruction = 0.0;  // mean squared error over all entries
    double kl = 0.0;              // KL(q(z|x) || N(0, I)), averaged over the batch
};

/// Per-epoch training diagnostics. loss = reconstruction +
/// kl_weight * kl holds at every epoch, with kl_weight the effective
/// (warm-up scaled) weight of that epoch.
struct TrainTrace {
    struct Epoch {
        double loss = 0.0, reconstruction = 0.0, kl = 0.0, kl_weight = 0.0;
    };
    std::vector<Epoch> epochs;
};

inline VAEParams vae_init(int input, int hidden, int latent, std::uint64_t seed) {
    if (input < 1 || hidden < 1 || latent < 1) {
        throw std::invalid_argument("vae_init: dimensions must be positive");
    }
    VAEParams p = VAEParams::zeros(input, hidden, latent);
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](Eigen::MatrixXd& w) {
        const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> u(-s, s);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
    };
    glorot(p.w_enc);
    glorot(p.w_mu);
    glorot(p.w_logvar);
    glorot(p.w_dec);
    glorot(p.w_out);
    return p;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

/// ELBO terms for a batch with explicit reparameterization noise
/// (one row of eta per batch row); fills analytic gradients when asked.
/// Deterministic in (params, batch, eta), which is what the
/// finite-difference checks rely on.
inline VAELossTerms vae_loss_with_noise(const VAEParams& p, const Eigen::MatrixXd& batch,
                                        const Eigen::MatrixXd& eta, double kl_weight = 1.0,
                                        VAEParams* grads = nullptr) {
    const Eigen::Index b_rows = batch.rows();
    if (batch.cols() != p.input) {
        throw std::invalid_argument("vae_loss: batch width " + std::to_string(batch.cols()) +
                                    " does not match model input " + std::to_string(p.input));
    }
    if (eta.rows() != b_rows || eta.cols() != p.latent) {
        throw std::invalid_argument("vae_loss: noise shape mismatch");
    }
    if (b_rows == 0) throw std::invalid_argument("vae_loss: empty batch");

    const double bn = static_cast<double>(b_rows);
    const double dn = static_cast<double>(p.input);

    // Encoder
    const Eigen::MatrixXd a1 =
        (batch * p.w_enc.transpose()).rowwise() + p.b_enc.transpose();
    const Eigen::MatrixXd h1 = a1.array().tanh();
    const Eigen::MatrixXd mu = (h1 * p.w_mu.transpose()).rowwise() + p.b_mu.transpose();
    const Eigen::MatrixXd logvar =
        (h1 * p.w_logvar.transpose()).rowwise() + p.b_logvar.transpose();
    const Eigen::MatrixXd sigma = (0.5 * logvar.array()).exp();
    const Eigen::MatrixXd z = mu.array() + sigma.array() * eta.array();

    // Decoder
    const Eigen::MatrixXd a2 = (z * p.w_dec.transpose()).rowwise() + p.b_dec.transpose();
    const Eigen::MatrixXd h2 = a2.array().tanh();
    const Eigen::MatrixXd xhat = (h2 * p.w_out.transpose()).rowwise() + p.b_out.transpose();

    VAELossTerms terms;
    terms.reconstruction = (xhat - batch).squaredNorm() / (bn * dn);
    terms.kl =
        0.5 *
        (mu.array().square() + logvar.array().exp() - 1.0 - logvar.array()).sum() / bn;
    terms.loss = terms.reconstruction + kl_weight * terms.kl;

    if (grads) {
        *grads = VAEParams::zeros(p.input, p.hidden, p.latent);
        const Eigen::MatrixXd g_xhat = 2.0 / (bn * dn) * (xhat - batch);
        grads->w_out = g_xhat.transpose() * h2;
        grads->b_out = g_xhat.colwise().sum();
        const Eigen::MatrixXd g_a2 =
            (g_xhat * p.w_out).array() * (1.0 - h2.array().square());
        grads->w_dec = g_a2.transpose() * z;
        grads->b_dec = g_a2.colwise().sum();
        const Eigen::MatrixXd g_z = g_a2 * p.w_dec;

        const Eigen::MatrixXd g_mu = g_z.array() + (kl_weight / bn) * mu.array();
        const Eigen::MatrixXd g_logvar =
            g_z.array() * (0.5 * sigma.array() * eta.array()) +
            (kl_weight / bn) * 0.5 * (logvar.array().exp() - 1.0);
        grads->w_mu = g_mu.transpose() * h1;
        grads->b_mu = g_mu.colwise().sum();
        grads->w_logvar = g_logvar.transpose() * h1;
        grads->b_logvar = g_logvar.colwise().sum();

        const Eigen::MatrixXd g_a1 =
            (g_mu * p.w_mu + g_logvar * p.w_logvar).array() * (1.0 - h1.array().square());
        grads->w_enc = g_a1.transpose() * batch;
        grads->b_enc = g_a1.colwise().sum();
    }
    return terms;
}

/// ELBO terms with noise drawn from the seed.
inline VAELossTerms vae_loss(const VAEParams& p, const Eigen::MatrixXd& batch,
                             std::uint64_t seed, double kl_weight = 1.0) {
    return vae_loss_with_noise(p, batch, gaussian_matrix(batch.rows(), p.latent, seed),
                               kl_weight);
}

/// Plain gradient descent with a fixed learning rate; the KL weight warms
/// up linearly over the first tenth of the epochs. Throws (naming the
/// epoch) if the loss leaves the finite range.
inline std::pair<VAEParams, TrainTrace> vae_train(const Eigen::MatrixXd& x_train,
                                                  const VAEHyper& hyper, std::uint64_t seed) {
    if (x_train.rows() == 0) throw std::invalid_argument("vae_train: empty training matrix");
    if (hyper.epochs < 1 || hyper.learning_rate <= 0.0 || hyper.kl_weight < 0.0) {
        throw std::invalid_argument("vae_train: hyperparameters must be positive");
    }

    VAEParams params = vae_init(static_cast<int>(x_train.cols()), hyper.hidden, hyper.latent,
                                derive_seed(seed, 0));
    TrainTrace trace;
    trace.epochs.reserve(static_cast<std::size_t>(hyper.epochs));

    const int warmup = std::max(1, hyper.epochs / 10);
    const Eigen::Index n = x_train.rows();
    const Eigen::Index batch =
        hyper.batch_size > 0 ? std::min<Eigen::Index>(hyper.batch_size, n) : n;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const double w_kl =
            hyper.kl_weight * std::min(1.0, static_cast<double>(epoch + 1) / warmup);

        double loss_sum = 0.0, rec_sum = 0.0, kl_sum = 0.0;
        Eigen::Index row = 0;
        int chunk = 0;
        while (row < n) {
            const Eigen::Index count = std::min(batch, n - row);
            const Eigen::MatrixXd slice = x_train.middleRows(row, count);
            const Eigen::MatrixXd eta = gaussian_matrix(
                count, hyper.latent,
                derive_seed(seed, 1 + static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(chunk)));
            VAEParams grads;
            const auto terms = vae_loss_with_noise(params, slice, eta, w_kl, &grads);
            if (!std::isfinite(terms.loss)) {
                throw std::runtime_error("vae_train: loss diverged at epoch " +
                                         std::to_string(epoch));
            }
            const double scale = static_cast<double>(count) / static_cast<double>(n);
            loss_sum += terms.loss * scale;
            rec_sum += terms.reconstruction * scale;
            kl_sum += terms.kl * scale;

            const double lr = hyper.learning_rate;
            params.w_enc -= lr * grads.w_enc;
            params.b_enc -= lr * grads.b_enc;
            params.w_mu -= lr * grads.w_mu;
            params.b_mu -= lr * grads.b_mu;
            params.w_logvar -= lr * grads.w_logvar;
            params.b_logvar -= lr * grads.b_logvar;
            params.w_dec -= lr * grads.w_dec;
            params.b_dec -= lr * grads.b_dec;
            params.w_out -= lr * grads.w_out;
            params.b_out -= lr * grads.b_out;
            row += count;
            ++chunk;
        }
        if (!params.all_finite()) {
            throw std::runtime_error("vae_train: parameters diverged at epoch " +
                                     std::to_string(epoch));
        }
        trace.epochs.push_back({loss_sum, rec_sum, kl_sum, w_kl});
    }
    return {std::move(params), std::move(trace)};
}

/// Decodes n latent draws z ~ N(0, I). Feature columns clamp into [0, pi]
/// (the scaled space the model was trained on), the trailing label column
/// into the observed training label range.
inline Eigen::MatrixXd vae_generate(const VAEParams& p, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("vae_generate: n must be >= 1");
    const Eigen::MatrixXd z = gaussian_matrix(n, p.latent, seed);
    const Eigen::MatrixXd a2 = (z * p.w_dec.transpose()).rowwise() + p.b_dec.transpose();
    const Eigen::MatrixXd h2 = a2.array().tanh();
    Eigen::MatrixXd xhat = (h2 * p.w_out.transpose()).rowwise() + p.b_out.transpose();
    for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        for (Eigen::Index j = 0; j + 1 < xhat.cols(); ++j) {
            xhat(i, j) = std::clamp(xhat(i, j), 0.0, kPi);
        }
        const Eigen::Index last = xhat.cols() - 1;
        xhat(i, last) = std::clamp(xhat(i, last), p.label_lo, p.label_hi);
    }
    return xhat;
}

/// Grows an all-experimental training set to target_size rows by appending
/// VAE-synthesized (features, label) rows flagged Synthesized. The
/// experimental rows pass through untouched.
inline EncodedDataset augment(const EncodedDataset& train, Eigen::Index target_size,
                              const VAEHyper& hyper, std::uint64_t seed) {
    const Eigen::Index n = train.size();
    if (n == 0) throw std::invalid_argument("augment: empty training set");
    for (const auto p : train.provenance) {
        if (p != Provenance::Experimental) {
            throw std::invalid_argument("augment: input must be all-experimental");
        }
    }
    if (target_size < n) {
        throw std::invalid_argument("augment: target size " + std::to_string(target_size) +
                                    " is below the training size " + std::to_string(n));
    }
    if (target_size == n) return train;

    Eigen::MatrixXd joint(n, train.X.cols() + 1);
    joint << train.X, train.y;

    auto [params, trace] = vae_train(joint, hyper, derive_seed(seed, 0));
    params.label_lo = train.y.minCoeff();
    params.label_hi = train.y.maxCoeff();

    const Eigen::Index extra = target_size - n;
    const Eigen::MatrixXd synth =
        vae_generate(params, static_cast<int>(extra), derive_seed(seed, 1));

    EncodedDataset out;
    out.schema_version = train.schema_version;
    out.X.resize(target_size, train.X.cols());
    out.y.resize(target_size);
    out.X.topRows(n) = train.X;
    out.y.head(n) = train.y;
    out.X.bottomRows(extra) = synth.leftCols(train.X.cols());
    out.y.tail(extra) = synth.col(synth.cols() - 1);
    out.ids = train.ids;
    out.provenance = train.provenance;
    for (Eigen::Index i = 0; i < extra; ++i) {
        char idbuf[20];
        std::snprintf(idbuf, sizeof(idbuf), "synth-%04d", static_cast<int>(i + 1));
        out.ids.emplace_back(idbuf);
        out.provenance.push_back(Provenance::Synthesized);
    }
    return out;
}

}  // namespace qkr
