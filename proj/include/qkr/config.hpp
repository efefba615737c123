#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qkr/baselines.hpp"
#include "qkr/feature_map.hpp"
#include "qkr/qkernel.hpp"
#include "qkr/vae.hpp"

namespace qkr {

inline constexpr const char* kArtifactVersion = "qkr 0.1.0";

/// Flat pipeline configuration. Every field has a default; unknown keys in
/// a config document are rejected to catch typos. The full snapshot is
/// embedded in every report and bundle.
struct PipelineConfig {
    // feature map
    std::string feature_map_family = "zz";
    std::string feature_map_entanglement = "full";
    int feature_map_reps = 2;
    // regressor
    double svr_c = 1.0;
    double svr_epsilon = 0.1;
    double svr_tol = 1e-3;
    std::int64_t svr_max_passes = 0;  // 0 = 10 * n^2 auto budget
    // reduction and scaling
    int pca_k = 5;
    bool pca_per_set = false;
    // augmentation
    int vae_hidden = 16;
    int vae_latent = 3;
    int vae_epochs = 200;
    double vae_learning_rate = 1e-2;
    int vae_batch = 0;
    double vae_kl_weight = 1.0;
    int vae_factor = 3;  // target train size = factor * |train|
    // kernel evaluation
    std::string kernel_mode = "exact";
    std::uint64_t kernel_shots = 4096;
    // harness
    double train_fraction = 0.8;
    int repetitions = 5;
    std::uint64_t seed = 7;
    // classical baselines
    BaselineHyper baselines;

    FeatureMapSpec feature_map_spec(int n_features) const {
        FeatureMapSpec spec;
        if (feature_map_family == "z") {
            spec.family = MapFamily::Z;
        } else if (feature_map_family == "zz") {
            spec.family = MapFamily::ZZ;
        } else {
            throw std::invalid_argument("config: feature_map_family must be 'z' or 'zz', got '" +
                                        feature_map_family + "'");
        }
        if (feature_map_entanglement == "none") {
            spec.entanglement = Entanglement::None;
        } else if (feature_map_entanglement == "linear") {
            spec.entanglement = Entanglement::Linear;
        } else if (feature_map_entanglement == "full") {
            spec.entanglement = Entanglement::Full;
        } else {
            throw std::invalid_argument(
                "config: feature_map_entanglement must be 'none', 'linear' or 'full', got '" +
                feature_map_entanglement + "'");
        }
        spec.reps = feature_map_reps;
        spec.n_features = n_features;
        spec.validate();
        return spec;
    }

    KernelMode kernel_mode_enum() const {
        if (kernel_mode == "exact") return KernelMode::Exact;
        if (kernel_mode == "sampled") return KernelMode::Sampled;
        throw std::invalid_argument("config: kernel_mode must be 'exact' or 'sampled', got '" +
                                    kernel_mode + "'");
    }

    VAEHyper vae_hyper() const {
        VAEHyper h;
        h.hidden = vae_hidden;
        h.latent = vae_latent;
        h.epochs = vae_epochs;
        h.learning_rate = vae_learning_rate;
        h.batch_size = vae_batch;
        h.kl_weight = vae_kl_weight;
        return h;
    }

    nlohmann::json to_json() const {
        return {
            {"feature_map_family", feature_map_family},
            {"feature_map_entanglement", feature_map_entanglement},
            {"feature_map_reps", feature_map_reps},
            {"svr_c", svr_c},
            {"svr_epsilon", svr_epsilon},
            {"svr_tol", svr_tol},
            {"svr_max_passes", svr_max_passes},
            {"pca_k", pca_k},
            {"pca_per_set", pca_per_set},
            {"vae_hidden", vae_hidden},
            {"vae_latent", vae_latent},
            {"vae_epochs", vae_epochs},
            {"vae_learning_rate", vae_learning_rate},
            {"vae_batch", vae_batch},
            {"vae_kl_weight", vae_kl_weight},
            {"vae_factor", vae_factor},
            {"kernel_mode", kernel_mode},
            {"kernel_shots", kernel_shots},
            {"train_fraction", train_fraction},
            {"repetitions", repetitions},
            {"seed", seed},
            {"ridge_lambda", baselines.ridge_lambda},
            {"knn_k", baselines.knn_k},
            {"tree_max_depth", baselines.tree_max_depth},
            {"tree_min_leaf", baselines.tree_min_leaf},
            {"forest_trees", baselines.forest_trees},
            {"forest_mtry", baselines.forest_mtry},
            {"forest_bootstrap", baselines.forest_bootstrap},
            {"boost_rounds", baselines.boost_rounds},
            {"boost_depth", baselines.boost_depth},
            {"boost_learning_rate", baselines.boost_learning_rate},
            {"rbf_c", baselines.rbf_c},
            {"rbf_epsilon", baselines.rbf_epsilon},
            {"rbf_gamma", baselines.rbf_gamma},
        };
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw std::invalid_argument("config: document must be a JSON object");
        PipelineConfig cfg;
        const nlohmann::json defaults = cfg.to_json();
        for (const auto& [key, value] : j.items()) {
            if (!defaults.contains(key)) {
                throw std::invalid_argument("config: unknown key '" + key + "'");
            }
            (void)value;
        }

        auto read = [&j](const char* key, auto& out) {
            if (!j.contains(key)) return;
            try {
                j.at(key).get_to(out);
            } catch (const nlohmann::json::exception&) {
                throw std::invalid_argument(std::string("config: bad value type for key '") +
                                            key + "'");
            }
        };
        read("feature_map_family", cfg.feature_map_family);
        read("feature_map_entanglement", cfg.feature_map_entanglement);
        read("feature_map_reps", cfg.feature_map_reps);
        read("svr_c", cfg.svr_c);
        read("svr_epsilon", cfg.svr_epsilon);
        read("svr_tol", cfg.svr_tol);
        read("svr_max_passes", cfg.svr_max_passes);
        read("pca_k", cfg.pca_k);
        read("pca_per_set", cfg.pca_per_set);
        read("vae_hidden", cfg.vae_hidden);
        read("vae_latent", cfg.vae_latent);
        read("vae_epochs", cfg.vae_epochs);
        read("vae_learning_rate", cfg.vae_learning_rate);
        read("vae_batch", cfg.vae_batch);
        read("vae_kl_weight", cfg.vae_kl_weight);
        read("vae_factor", cfg.vae_factor);
        read("kernel_mode", cfg.kernel_mode);
        read("kernel_shots", cfg.kernel_shots);
        read("train_fraction", cfg.train_fraction);
        read("repetitions", cfg.repetitions);
        read("seed", cfg.seed);
        read("ridge_lambda", cfg.baselines.ridge_lambda);
        read("knn_k", cfg.baselines.knn_k);
        read("tree_max_depth", cfg.baselines.tree_max_depth);
        read("tree_min_leaf", cfg.baselines.tree_min_leaf);
        read("forest_trees", cfg.baselines.forest_trees);
        read("forest_mtry", cfg.baselines.forest_mtry);
        read("forest_bootstrap", cfg.baselines.forest_bootstrap);
        read("boost_rounds", cfg.baselines.boost_rounds);
        read("boost_depth", cfg.baselines.boost_depth);
        read("boost_learning_rate", cfg.baselines.boost_learning_rate);
        read("rbf_c", cfg.baselines.rbf_c);
        read("rbf_epsilon", cfg.baselines.rbf_epsilon);
        read("rbf_gamma", cfg.baselines.rbf_gamma);

        cfg.feature_map_spec(1);   // validates the enum strings
        cfg.kernel_mode_enum();
        if (cfg.repetitions < 1) throw std::invalid_argument("config: repetitions must be >= 1");
        if (cfg.vae_factor < 1) throw std::invalid_argument("config: vae_factor must be >= 1");
        if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
            throw std::invalid_argument("config: train_fraction must lie in (0, 1)");
        }
        return cfg;
    }

    static PipelineConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::invalid_argument("cannot open config '" + path + "'");
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config '" + path + "': " + e.what());
        }
        return from_json(j);
    }
};

}  // namespace qkr
