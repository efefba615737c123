#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkr/baselines.hpp"
#include "qkr/metrics.hpp"
#include "qkr/pipeline.hpp"

namespace qkr {

inline constexpr const char* kQkrModelName = "qkr";

/// Mean and sample standard deviation of one metric over the repetitions in
/// which it was defined.
struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct BenchmarkReport {
    int repetitions = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> model_names;  // qkr first, then the six baselines
    std::map<std::string, std::map<std::string, MetricStats>> stats;  // model -> metric
    std::map<std::string, MetricStats> reference;                     // metric -> stats
    // cml model -> metric -> ratio; nullopt when the classical mean is zero
    std::map<std::string, std::map<std::string, std::optional<double>>> advantage;
    std::vector<std::map<std::string, MetricSet>> per_rep;  // includes "reference"
    std::vector<std::vector<std::string>> test_ids_per_rep;
    std::vector<std::vector<ResidualRow>> qkr_scatter;  // per-rep holdout rows
    nlohmann::json config_snapshot;
    std::string version = kArtifactVersion;
};

namespace detail {

inline MetricStats aggregate(const std::vector<double>& values) {
    MetricStats s;
    s.count = static_cast<int>(values.size());
    if (s.count == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.count;
    if (s.count > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (s.count - 1));
    }
    return s;
}

inline std::map<std::string, MetricStats> aggregate_metric_sets(
    const std::vector<MetricSet>& sets) {
    std::map<std::string, MetricStats> out;
    std::vector<double> mae, mse, rmse, pearson;
    for (const auto& m : sets) {
        mae.push_back(m.mae);
        mse.push_back(m.mse);
        rmse.push_back(m.rmse);
        if (m.pearson_defined) pearson.push_back(m.pearson_r);
    }
    out["mae"] = aggregate(mae);
    out["mse"] = aggregate(mse);
    out["rmse"] = aggregate(rmse);
    out["pearson"] = aggregate(pearson);
    return out;
}

}  // namespace detail

/// Repeated-split benchmark of the quantum regressor against the six
/// classical baselines. Every repetition derives its own seed, prepares one
/// shared split (reduce, scale, augment), fits all seven models on the
/// identical augmented training set and scores them on the identical
/// experimental-only holdout. Advantage ratios come from the metric means.
inline BenchmarkReport run_benchmark(const Dataset& data, const PipelineConfig& cfg,
                                     int repetitions, std::uint64_t master_seed) {
    if (repetitions < 1) throw std::invalid_argument("run_benchmark: repetitions must be >= 1");

    BenchmarkReport report;
    report.repetitions = repetitions;
    report.config_snapshot = cfg.to_json();
    report.model_names.push_back(kQkrModelName);
    for (const auto kind : all_baseline_kinds()) report.model_names.push_back(baseline_name(kind));

    std::map<std::string, std::vector<MetricSet>> collected;
    std::vector<MetricSet> reference_sets;

    for (int rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t seed_rep = derive_seed(master_seed, static_cast<std::uint64_t>(rep));
        report.seeds.push_back(seed_rep);

        const auto ps = detail::prepare_split(data, cfg, seed_rep);
        const auto& aug = ps.augmented_train;
        std::map<std::string, MetricSet> rep_metrics;

        const auto run_model = [&](const std::string& name, auto&& predict_fn) {
            try {
                const Eigen::VectorXd preds = predict_fn();
                const MetricSet m = compute_metrics(ps.test_labels, preds);
                collected[name].push_back(m);
                rep_metrics[name] = m;
                if (name == kQkrModelName) {
                    std::vector<ResidualRow> rows;
                    for (std::size_t i = 0; i < ps.test_ids.size(); ++i) {
                        rows.push_back({ps.test_ids[i],
                                        ps.test_labels[static_cast<Eigen::Index>(i)],
                                        preds[static_cast<Eigen::Index>(i)]});
                    }
                    report.qkr_scatter.push_back(std::move(rows));
                }
            } catch (const std::exception& e) {
                throw std::runtime_error("benchmark repetition " + std::to_string(rep) +
                                         ", model " + name + ": " + e.what());
            }
        };

        run_model(kQkrModelName, [&] {
            const FeatureMapSpec spec = cfg.feature_map_spec(cfg.pca_k);
            const KernelMode mode = cfg.kernel_mode_enum();
            KernelMatrix gram = gram_matrix(spec, aug.X, aug.ids, mode, cfg.kernel_shots,
                                            derive_seed(seed_rep, 2));
            if (mode == KernelMode::Sampled) gram = psd_project(gram);
            const SVRModel svr =
                fit_svr(gram, aug.y, cfg.svr_c, cfg.svr_epsilon, cfg.svr_tol, cfg.svr_max_passes);
            const KernelMatrix cross =
                cross_matrix(spec, ps.test_features, ps.test_ids, aug.X, aug.ids, mode,
                             cfg.kernel_shots, derive_seed(seed_rep, 3));
            return predict(svr, cross);
        });

        int kind_index = 0;
        for (const auto kind : all_baseline_kinds()) {
            run_model(baseline_name(kind), [&] {
                const BaselineModel model =
                    fit_baseline(kind, aug.X, aug.y, cfg.baselines,
                                 derive_seed(seed_rep, 10 + static_cast<std::uint64_t>(kind_index)));
                return predict_baseline(model, ps.test_features);
            });
            ++kind_index;
        }

        const MetricSet ref = reference_metrics(ps.train_labels_experimental,
                                                ps.train_provenance, ps.test_labels);
        reference_sets.push_back(ref);
        rep_metrics["reference"] = ref;
        report.per_rep.push_back(std::move(rep_metrics));
        report.test_ids_per_rep.push_back(ps.test_ids);
    }

    for (const auto& name : report.model_names) {
        report.stats[name] = detail::aggregate_metric_sets(collected[name]);
    }
    report.reference = detail::aggregate_metric_sets(reference_sets);

    for (const auto kind : all_baseline_kinds()) {
        const std::string name = baseline_name(kind);
        for (const char* metric : {"mae", "mse", "rmse"}) {
            const double qkr_mean = report.stats[kQkrModelName][metric].mean;
            const double cml_mean = report.stats[name][metric].mean;
            report.advantage[name][metric] =
                cml_mean > 0.0 ? std::optional<double>(advantage_ratio(qkr_mean, cml_mean))
                               : std::nullopt;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Feature-map comparison.
// ---------------------------------------------------------------------------

struct FeatureMapComparison {
    struct Entry {
        std::string name;
        FeatureMapSpec spec;
        MetricSet metrics;
    };
    std::vector<Entry> entries;
    std::string winner;  // lowest MAE; ties by RMSE, then name
};

/// The four standard comparison variants at the given register width.
inline std::vector<FeatureMapSpec> standard_feature_maps(int n_features) {
    return {
        {MapFamily::Z, Entanglement::None, 1, n_features},
        {MapFamily::ZZ, Entanglement::Linear, 1, n_features},
        {MapFamily::ZZ, Entanglement::Full, 1, n_features},
        {MapFamily::ZZ, Entanglement::Full, 2, n_features},
    };
}

/// Runs the identical pipeline (same split, same augmentation) once per
/// feature map and tabulates holdout metrics.
inline FeatureMapComparison compare_feature_maps(const Dataset& data,
                                                 const std::vector<FeatureMapSpec>& specs,
                                                 const PipelineConfig& cfg,
                                                 std::uint64_t seed) {
    if (specs.size() < 2) {
        throw std::invalid_argument("compare_feature_maps: need at least 2 specs");
    }
    std::set<std::string> names;
    for (const auto& spec : specs) {
        if (!names.insert(spec.name()).second) {
            throw std::invalid_argument("compare_feature_maps: duplicate spec " + spec.name());
        }
    }

    const auto ps = detail::prepare_split(data, cfg, seed);
    const auto& aug = ps.augmented_train;
    const KernelMode mode = cfg.kernel_mode_enum();

    FeatureMapComparison cmp;
    for (const auto& spec : specs) {
        if (spec.n_features != aug.X.cols()) {
            throw std::invalid_argument("compare_feature_maps: spec " + spec.name() +
                                        " expects " + std::to_string(spec.n_features) +
                                        " features, pipeline provides " +
                                        std::to_string(aug.X.cols()));
        }
        KernelMatrix gram =
            gram_matrix(spec, aug.X, aug.ids, mode, cfg.kernel_shots, derive_seed(seed, 2));
        if (mode == KernelMode::Sampled) gram = psd_project(gram);
        const SVRModel svr =
            fit_svr(gram, aug.y, cfg.svr_c, cfg.svr_epsilon, cfg.svr_tol, cfg.svr_max_passes);
        const KernelMatrix cross =
            cross_matrix(spec, ps.test_features, ps.test_ids, aug.X, aug.ids, mode,
                         cfg.kernel_shots, derive_seed(seed, 3));
        cmp.entries.push_back({spec.name(), spec, compute_metrics(ps.test_labels,
                                                                  predict(svr, cross))});
    }

    const auto best = std::min_element(
        cmp.entries.begin(), cmp.entries.end(), [](const auto& a, const auto& b) {
            if (a.metrics.mae != b.metrics.mae) return a.metrics.mae < b.metrics.mae;
            if (a.metrics.rmse != b.metrics.rmse) return a.metrics.rmse < b.metrics.rmse;
            return a.name < b.name;
        });
    cmp.winner = best->name;
    return cmp;
}

// ---------------------------------------------------------------------------
// External holdout verification through a frozen bundle.
// ---------------------------------------------------------------------------

struct HoldoutRow {
    std::string id;
    double measured = 0.0;
    double predicted = 0.0;
    double abs_error = 0.0;
};

struct HoldoutReport {
    std::vector<HoldoutRow> rows;
    double mae = 0.0;
};

inline HoldoutReport verify_holdout(const PipelineBundle& bundle, const Dataset& external) {
    if (external.empty()) throw std::invalid_argument("verify: external record set is empty");
    for (const auto& rec : external) {
        if (!rec.r_c) {
            throw std::invalid_argument("verify: record " + rec.record_id +
                                        " is missing its measured r_c");
        }
    }
    const Eigen::VectorXd preds = predict_records(bundle, external);
    HoldoutReport report;
    double err_sum = 0.0;
    for (std::size_t i = 0; i < external.size(); ++i) {
        HoldoutRow row;
        row.id = external[i].record_id;
        row.measured = *external[i].r_c;
        row.predicted = preds[static_cast<Eigen::Index>(i)];
        row.abs_error = std::abs(row.predicted - row.measured);
        err_sum += row.abs_error;
        report.rows.push_back(std::move(row));
    }
    report.mae = err_sum / static_cast<double>(external.size());
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

inline nlohmann::json metric_set_to_json(const MetricSet& m) {
    nlohmann::json j{{"mae", m.mae}, {"mse", m.mse}, {"rmse", m.rmse}, {"n", m.n}};
    if (m.pearson_defined) {
        j["pearson"] = m.pearson_r;
    } else {
        j["pearson"] = nullptr;
    }
    return j;
}

inline nlohmann::json metric_stats_to_json(const MetricStats& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
}

inline nlohmann::json benchmark_report_to_json(const BenchmarkReport& r) {
    nlohmann::json stats;
    for (const auto& [model, metrics] : r.stats) {
        for (const auto& [metric, s] : metrics) stats[model][metric] = metric_stats_to_json(s);
    }
    nlohmann::json reference;
    for (const auto& [metric, s] : r.reference) reference[metric] = metric_stats_to_json(s);
    nlohmann::json advantage;
    for (const auto& [model, metrics] : r.advantage) {
        for (const auto& [metric, v] : metrics) {
            advantage[model][metric] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        }
    }
    nlohmann::json per_rep = nlohmann::json::array();
    for (std::size_t rep = 0; rep < r.per_rep.size(); ++rep) {
        nlohmann::json entry;
        for (const auto& [model, m] : r.per_rep[rep]) entry[model] = metric_set_to_json(m);
        per_rep.push_back({{"repetition", rep},
                           {"seed", r.seeds[rep]},
                           {"test_ids", r.test_ids_per_rep[rep]},
                           {"metrics", entry}});
    }
    nlohmann::json scatter = nlohmann::json::array();
    for (std::size_t rep = 0; rep < r.qkr_scatter.size(); ++rep) {
        for (const auto& row : r.qkr_scatter[rep]) {
            scatter.push_back({{"repetition", rep},
                               {"record_id", row.id},
                               {"y_true", row.y_true},
                               {"y_pred", row.y_pred},
                               {"residual", row.residual()}});
        }
    }
    return {{"version", r.version},
            {"repetitions", r.repetitions},
            {"seeds", r.seeds},
            {"models", r.model_names},
            {"config", r.config_snapshot},
            {"stats", stats},
            {"reference", reference},
            {"advantage", advantage},
            {"per_repetition", per_rep},
            {"qkr_scatter", scatter}};
}

/// Long-format CSV: one row per (model, metric).
inline void write_benchmark_csv(std::ostream& os, const BenchmarkReport& r) {
    os << "model,metric,mean,std,count\n";
    for (const auto& name : r.model_names) {
        for (const char* metric : {"mae", "mse", "rmse", "pearson"}) {
            const auto& s = r.stats.at(name).at(metric);
            os << name << ',' << metric << ',' << format_double(s.mean) << ','
               << format_double(s.stddev) << ',' << s.count << '\n';
        }
    }
    for (const char* metric : {"mae", "mse", "rmse", "pearson"}) {
        const auto& s = r.reference.at(metric);
        os << "reference," << metric << ',' << format_double(s.mean) << ','
           << format_double(s.stddev) << ',' << s.count << '\n';
    }
}

/// Bar-chart data: per-model mean and std per error metric, with the
/// reference line repeated on every row.
inline void write_metric_bars_csv(std::ostream& os, const BenchmarkReport& r) {
    os << "metric,model,mean,std,reference_mean\n";
    for (const char* metric : {"mae", "mse", "rmse"}) {
        for (const auto& name : r.model_names) {
            const auto& s = r.stats.at(name).at(metric);
            os << metric << ',' << name << ',' << format_double(s.mean) << ','
               << format_double(s.stddev) << ',' << format_double(r.reference.at(metric).mean)
               << '\n';
        }
    }
}

inline void write_advantage_csv(std::ostream& os, const BenchmarkReport& r) {
    os << "model,metric,advantage_ratio\n";
    for (const auto& [model, metrics] : r.advantage) {
        for (const auto& [metric, v] : metrics) {
            os << model << ',' << metric << ',';
            if (v) os << format_double(*v);
            os << '\n';
        }
    }
}

/// Scatter/residual data of the quantum model's holdout predictions.
inline void write_scatter_csv(std::ostream& os, const BenchmarkReport& r) {
    os << "repetition,record_id,y_true,y_pred,residual\n";
    for (std::size_t rep = 0; rep < r.qkr_scatter.size(); ++rep) {
        for (const auto& row : r.qkr_scatter[rep]) {
            os << rep << ',' << row.id << ',' << format_double(row.y_true) << ','
               << format_double(row.y_pred) << ',' << format_double(row.residual()) << '\n';
        }
    }
}

inline void write_feature_map_csv(std::ostream& os, const FeatureMapComparison& cmp) {
    os << "feature_map,mae,mse,rmse,pearson,winner\n";
    for (const auto& e : cmp.entries) {
        os << e.name << ',' << format_double(e.metrics.mae) << ',' << format_double(e.metrics.mse)
           << ',' << format_double(e.metrics.rmse) << ',';
        if (e.metrics.pearson_defined) os << format_double(e.metrics.pearson_r);
        os << ',' << (e.name == cmp.winner ? "yes" : "no") << '\n';
    }
}

}  // namespace qkr
