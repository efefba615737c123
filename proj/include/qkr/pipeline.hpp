#pragma once

#include <Eigen/Core>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkr/config.hpp"
#include "qkr/kernel_svr.hpp"
#include "qkr/metrics.hpp"
#include "qkr/preprocess.hpp"
#include "qkr/qkernel.hpp"
#include "qkr/vae.hpp"

namespace qkr {

// ---------------------------------------------------------------------------
// JSON helpers for the model artifacts.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw std::invalid_argument("bundle: ragged matrix");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c));
    }
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i));
    return v;
}

}  // namespace detail

inline nlohmann::json pca_to_json(const PCAModel& m) {
    return {{"mean", detail::vector_to_json(m.mean)},
            {"components", detail::matrix_to_json(m.components)},
            {"explained_variance_ratio", detail::vector_to_json(m.explained_variance_ratio)}};
}

inline PCAModel pca_from_json(const nlohmann::json& j) {
    PCAModel m;
    m.mean = detail::vector_from_json(j.at("mean"));
    m.components = detail::matrix_from_json(j.at("components"));
    m.explained_variance_ratio = detail::vector_from_json(j.at("explained_variance_ratio"));
    return m;
}

inline nlohmann::json scaler_to_json(const ScalerModel& m) {
    return {{"col_min", detail::vector_to_json(m.col_min)},
            {"col_max", detail::vector_to_json(m.col_max)},
            {"lo", m.lo},
            {"hi", m.hi}};
}

inline ScalerModel scaler_from_json(const nlohmann::json& j) {
    ScalerModel m;
    m.col_min = detail::vector_from_json(j.at("col_min"));
    m.col_max = detail::vector_from_json(j.at("col_max"));
    m.lo = j.at("lo");
    m.hi = j.at("hi");
    return m;
}

inline nlohmann::json feature_map_to_json(const FeatureMapSpec& spec) {
    const char* family = spec.family == MapFamily::Z ? "z" : "zz";
    const char* ent = spec.entanglement == Entanglement::None     ? "none"
                      : spec.entanglement == Entanglement::Linear ? "linear"
                                                                  : "full";
    return {{"family", family},
            {"entanglement", ent},
            {"reps", spec.reps},
            {"n_features", spec.n_features}};
}

inline FeatureMapSpec feature_map_from_json(const nlohmann::json& j) {
    FeatureMapSpec spec;
    const std::string family = j.at("family");
    const std::string ent = j.at("entanglement");
    spec.family = family == "z" ? MapFamily::Z : MapFamily::ZZ;
    spec.entanglement = ent == "none"     ? Entanglement::None
                        : ent == "linear" ? Entanglement::Linear
                                          : Entanglement::Full;
    spec.reps = j.at("reps");
    spec.n_features = j.at("n_features");
    spec.validate();
    return spec;
}

inline nlohmann::json svr_to_json(const SVRModel& m) {
    return {{"beta", detail::vector_to_json(m.beta)},
            {"bias", m.bias},
            {"c", m.c},
            {"epsilon", m.epsilon},
            {"support_ids", m.support_ids},
            {"train_ids", m.train_ids},
            {"kkt_violation", m.kkt_violation}};
}

inline SVRModel svr_from_json(const nlohmann::json& j) {
    SVRModel m;
    m.beta = detail::vector_from_json(j.at("beta"));
    m.bias = j.at("bias");
    m.c = j.at("c");
    m.epsilon = j.at("epsilon");
    m.support_ids = j.at("support_ids").get<std::vector<int>>();
    m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    m.kkt_violation = j.at("kkt_violation");
    return m;
}

inline nlohmann::json vae_to_json(const VAEParams& p) {
    return {{"input", p.input},
            {"hidden", p.hidden},
            {"latent", p.latent},
            {"w_enc", detail::matrix_to_json(p.w_enc)},
            {"b_enc", detail::vector_to_json(p.b_enc)},
            {"w_mu", detail::matrix_to_json(p.w_mu)},
            {"b_mu", detail::vector_to_json(p.b_mu)},
            {"w_logvar", detail::matrix_to_json(p.w_logvar)},
            {"b_logvar", detail::vector_to_json(p.b_logvar)},
            {"w_dec", detail::matrix_to_json(p.w_dec)},
            {"b_dec", detail::vector_to_json(p.b_dec)},
            {"w_out", detail::matrix_to_json(p.w_out)},
            {"b_out", detail::vector_to_json(p.b_out)},
            {"label_lo", p.label_lo},
            {"label_hi", p.label_hi}};
}

inline VAEParams vae_from_json(const nlohmann::json& j) {
    VAEParams p;
    p.input = j.at("input");
    p.hidden = j.at("hidden");
    p.latent = j.at("latent");
    p.w_enc = detail::matrix_from_json(j.at("w_enc"));
    p.b_enc = detail::vector_from_json(j.at("b_enc"));
    p.w_mu = detail::matrix_from_json(j.at("w_mu"));
    p.b_mu = detail::vector_from_json(j.at("b_mu"));
    p.w_logvar = detail::matrix_from_json(j.at("w_logvar"));
    p.b_logvar = detail::vector_from_json(j.at("b_logvar"));
    p.w_dec = detail::matrix_from_json(j.at("w_dec"));
    p.b_dec = detail::vector_from_json(j.at("b_dec"));
    p.w_out = detail::matrix_from_json(j.at("w_out"));
    p.b_out = detail::vector_from_json(j.at("b_out"));
    p.label_lo = j.at("label_lo");
    p.label_hi = j.at("label_hi");
    return p;
}

// ---------------------------------------------------------------------------
// Frozen pipeline bundle: everything needed to take raw records to
// predictions after training.
// ---------------------------------------------------------------------------

inline constexpr const char* kBundleSchemaVersion = "qkr-bundle-v1";

struct PipelineBundle {
    std::string schema_version = kBundleSchemaVersion;
    PipelineConfig config;
    PCAModel pca;
    ScalerModel scaler;
    FeatureMapSpec map_spec;
    SVRModel svr;
    Eigen::MatrixXd train_features;  // augmented training rows, reduced + scaled
    VAEParams vae;
    bool has_vae = false;
};

inline nlohmann::json bundle_to_json(const PipelineBundle& b) {
    nlohmann::json j{{"schema_version", b.schema_version},
                     {"version", kArtifactVersion},
                     {"config", b.config.to_json()},
                     {"pca", pca_to_json(b.pca)},
                     {"scaler", scaler_to_json(b.scaler)},
                     {"feature_map", feature_map_to_json(b.map_spec)},
                     {"svr", svr_to_json(b.svr)},
                     {"train_features", detail::matrix_to_json(b.train_features)}};
    if (b.has_vae) j["vae"] = vae_to_json(b.vae);
    return j;
}

inline PipelineBundle bundle_from_json(const nlohmann::json& j) {
    PipelineBundle b;
    b.schema_version = j.at("schema_version");
    if (b.schema_version != kBundleSchemaVersion) {
        throw std::invalid_argument("bundle: unsupported schema version '" + b.schema_version +
                                    "'");
    }
    b.config = PipelineConfig::from_json(j.at("config"));
    b.pca = pca_from_json(j.at("pca"));
    b.scaler = scaler_from_json(j.at("scaler"));
    b.map_spec = feature_map_from_json(j.at("feature_map"));
    b.svr = svr_from_json(j.at("svr"));
    b.train_features = detail::matrix_from_json(j.at("train_features"));
    if (j.contains("vae")) {
        b.vae = vae_from_json(j.at("vae"));
        b.has_vae = true;
    }
    return b;
}

inline void save_bundle(const std::string& path, const PipelineBundle& b) {
    std::ofstream os(path);
    if (!os) throw std::invalid_argument("cannot open '" + path + "' for writing");
    os << bundle_to_json(b).dump(2) << '\n';
}

inline PipelineBundle load_bundle(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open bundle '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("bundle '" + path + "': " + e.what());
    }
    try {
        return bundle_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("bundle '" + path + "': " + std::string(e.what()));
    }
}

// ---------------------------------------------------------------------------
// Training pipeline.
// ---------------------------------------------------------------------------

namespace detail {

/// One fully prepared train/test split: reduced, scaled and VAE-augmented
/// training rows plus the transformed experimental-only test rows. Shared
/// by training and by every benchmark repetition so that all models within
/// a repetition see identical data.
struct PreparedSplit {
    EncodedDataset augmented_train;
    Eigen::MatrixXd test_features;
    Eigen::VectorXd test_labels;
    std::vector<std::string> test_ids;
    Eigen::VectorXd train_labels_experimental;  // pre-augmentation
    std::vector<Provenance> train_provenance;
    PCAModel pca;
    ScalerModel scaler;
};

inline Eigen::VectorXd labels_of(const Dataset& data) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].r_c) {
            throw std::invalid_argument("record " + data[i].record_id + " is missing its r_c label");
        }
        y[static_cast<Eigen::Index>(i)] = *data[i].r_c;
    }
    return y;
}

inline std::vector<std::string> ids_of(const Dataset& data) {
    std::vector<std::string> ids;
    ids.reserve(data.size());
    for (const auto& rec : data) ids.push_back(rec.record_id);
    return ids;
}

inline PreparedSplit prepare_split(const Dataset& data, const PipelineConfig& cfg,
                                   std::uint64_t seed) {
    auto [train_ds, test_ds] = split(data, cfg.train_fraction, derive_seed(seed, 0));
    if (test_ds.empty()) {
        throw std::invalid_argument("dataset too small: the holdout side of the split is empty");
    }
    for (const auto& rec : test_ds) {
        if (rec.provenance != Provenance::Experimental) {
            throw std::runtime_error("internal: synthesized record in a test set");
        }
    }

    const Eigen::MatrixXd x_train_raw = encode_dataset(train_ds);
    const Eigen::MatrixXd x_test_raw = encode_dataset(test_ds);

    PreparedSplit ps;
    ps.pca = pca_fit(x_train_raw, cfg.pca_k);
    const Eigen::MatrixXd z_train = pca_transform(ps.pca, x_train_raw);
    const Eigen::MatrixXd z_test =
        cfg.pca_per_set ? pca_transform(pca_fit(x_test_raw, cfg.pca_k), x_test_raw)
                        : pca_transform(ps.pca, x_test_raw);

    ps.scaler = scale_fit(z_train);
    const Eigen::MatrixXd s_train = scale_transform(ps.scaler, z_train);
    ps.test_features = scale_transform(ps.scaler, z_test);
    ps.test_labels = labels_of(test_ds);
    ps.test_ids = ids_of(test_ds);
    ps.train_labels_experimental = labels_of(train_ds);
    ps.train_provenance.assign(train_ds.size(), Provenance::Experimental);

    EncodedDataset train_enc;
    train_enc.X = s_train;
    train_enc.y = ps.train_labels_experimental;
    train_enc.ids = ids_of(train_ds);
    train_enc.provenance = ps.train_provenance;

    const auto target = static_cast<Eigen::Index>(cfg.vae_factor) * train_enc.size();
    ps.augmented_train = augment(train_enc, target, cfg.vae_hyper(), derive_seed(seed, 1));
    return ps;
}

}  // namespace detail

struct ResidualRow {
    std::string id;
    double y_true = 0.0;
    double y_pred = 0.0;
    double residual() const { return y_pred - y_true; }
};

struct TrainResult {
    PipelineBundle bundle;
    MetricSet test_metrics;
    std::vector<ResidualRow> test_rows;
    Eigen::VectorXd train_fitted;  // predictions on the augmented training set
};

/// Full training run: split, reduce, scale, augment, kernel, SVR; evaluates
/// on the experimental-only holdout and freezes every fitted transform into
/// the bundle.
inline TrainResult train_pipeline(const Dataset& data, const PipelineConfig& cfg) {
    const auto ps = detail::prepare_split(data, cfg, cfg.seed);
    const auto& aug = ps.augmented_train;

    const FeatureMapSpec spec = cfg.feature_map_spec(cfg.pca_k);
    const KernelMode mode = cfg.kernel_mode_enum();

    KernelMatrix gram = gram_matrix(spec, aug.X, aug.ids, mode, cfg.kernel_shots,
                                    derive_seed(cfg.seed, 2));
    if (mode == KernelMode::Sampled) gram = psd_project(gram);

    TrainResult result;
    result.bundle.config = cfg;
    result.bundle.pca = ps.pca;
    result.bundle.scaler = ps.scaler;
    result.bundle.map_spec = spec;
    result.bundle.svr =
        fit_svr(gram, aug.y, cfg.svr_c, cfg.svr_epsilon, cfg.svr_tol, cfg.svr_max_passes);
    result.bundle.train_features = aug.X;

    const KernelMatrix cross = cross_matrix(spec, ps.test_features, ps.test_ids, aug.X, aug.ids,
                                            mode, cfg.kernel_shots, derive_seed(cfg.seed, 3));
    const Eigen::VectorXd preds = predict(result.bundle.svr, cross);
    result.test_metrics = compute_metrics(ps.test_labels, preds);
    for (std::size_t i = 0; i < ps.test_ids.size(); ++i) {
        result.test_rows.push_back(
            {ps.test_ids[i], ps.test_labels[static_cast<Eigen::Index>(i)],
             preds[static_cast<Eigen::Index>(i)]});
    }

    KernelMatrix self = gram;  // gram doubles as the train-side cross matrix
    result.train_fitted = predict(result.bundle.svr, self);
    return result;
}

/// Applies the frozen transforms of a bundle to raw records and predicts.
inline Eigen::VectorXd predict_records(const PipelineBundle& bundle, const Dataset& records) {
    if (records.empty()) throw std::invalid_argument("predict: no records given");
    const Eigen::MatrixXd raw = encode_dataset(records);
    const Eigen::MatrixXd reduced = pca_transform(bundle.pca, raw);
    const Eigen::MatrixXd scaled = scale_transform(bundle.scaler, reduced);
    if (scaled.cols() != bundle.map_spec.n_features) {
        throw std::invalid_argument("predict: bundle expects " +
                                    std::to_string(bundle.map_spec.n_features) +
                                    " reduced features, data yields " +
                                    std::to_string(scaled.cols()));
    }
    const KernelMatrix cross = cross_matrix(
        bundle.map_spec, scaled, detail::ids_of(records), bundle.train_features,
        bundle.svr.train_ids, bundle.config.kernel_mode_enum(), bundle.config.kernel_shots,
        derive_seed(bundle.config.seed, 4));
    return predict(bundle.svr, cross);
}

}  // namespace qkr
