// Command-line surface of the quantum-kernel regression toolkit:
// data synthesis, training, prediction, benchmarking, kernel export and
// external verification. Exit codes: 0 success, 1 input error, 2 internal
// error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qkr/qkr.hpp"

namespace fs = std::filesystem;

namespace {

qkr::PipelineConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return {};
    return qkr::PipelineConfig::load(path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::invalid_argument("cannot open '" + path + "' for writing");
    return os;
}

struct SynthArgs {
    int n = 159;
    std::uint64_t seed = 7;
    double noise = 0.05;
    std::string out;
};

int run_synth(const SynthArgs& args) {
    const qkr::Dataset data = qkr::synth_dataset(args.n, args.seed, args.noise);
    qkr::write_dataset_csv(args.out, data);
    std::cout << "wrote " << data.size() << " records to " << args.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_path, config_path;
    std::string bundle_out = "bundle.json";
    std::string report_out = "train_report.json";
};

int run_train(const TrainArgs& args) {
    const qkr::PipelineConfig cfg = load_config_or_default(args.config_path);
    const qkr::Dataset data = qkr::read_dataset_csv(args.data_path);
    const qkr::TrainResult result = qkr::train_pipeline(data, cfg);

    qkr::save_bundle(args.bundle_out, result.bundle);

    nlohmann::json residuals = nlohmann::json::array();
    for (const auto& row : result.test_rows) {
        residuals.push_back({{"record_id", row.id},
                             {"y_true", row.y_true},
                             {"y_pred", row.y_pred},
                             {"residual", row.residual()}});
    }
    const nlohmann::json report{
        {"version", qkr::kArtifactVersion},
        {"config", cfg.to_json()},
        {"n_train_experimental", result.bundle.svr.train_ids.size() -
                                     static_cast<std::size_t>(std::count_if(
                                         result.bundle.svr.train_ids.begin(),
                                         result.bundle.svr.train_ids.end(),
                                         [](const std::string& id) {
                                             return id.rfind("synth-", 0) == 0;
                                         }))},
        {"n_train_augmented", result.bundle.svr.train_ids.size()},
        {"n_test", result.test_rows.size()},
        {"test_metrics", qkr::metric_set_to_json(result.test_metrics)},
        {"kkt_violation", result.bundle.svr.kkt_violation},
        {"support_vectors", result.bundle.svr.support_ids.size()},
        {"residuals", residuals}};
    open_out(args.report_out) << report.dump(2) << '\n';

    std::cout << "bundle: " << args.bundle_out << "\nreport: " << args.report_out
              << "\ntest mae " << qkr::format_double(result.test_metrics.mae) << ", rmse "
              << qkr::format_double(result.test_metrics.rmse) << ", pearson "
              << (result.test_metrics.pearson_defined
                      ? qkr::format_double(result.test_metrics.pearson_r)
                      : std::string("undefined"))
              << "\n";
    return 0;
}

struct PredictArgs {
    std::string bundle_path, data_path;
    std::string out = "predictions.csv";
};

int run_predict(const PredictArgs& args) {
    const qkr::PipelineBundle bundle = qkr::load_bundle(args.bundle_path);
    const qkr::Dataset data = qkr::read_dataset_csv(args.data_path);
    const Eigen::VectorXd preds = qkr::predict_records(bundle, data);

    auto os = open_out(args.out);
    os << "record_id,predicted_r_c_ohm_mm,measured_r_c_ohm_mm,abs_error\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double p = preds[static_cast<Eigen::Index>(i)];
        os << data[i].record_id << ',' << qkr::format_double(p) << ',';
        if (data[i].r_c) {
            os << qkr::format_double(*data[i].r_c) << ','
               << qkr::format_double(std::abs(p - *data[i].r_c));
        } else {
            os << ',';
        }
        os << '\n';
    }
    std::cout << "wrote " << data.size() << " predictions to " << args.out << "\n";
    return 0;
}

struct BenchmarkArgs {
    std::string data_path, config_path;
    std::string out_dir = "bench_out";
    int repetitions = 0;  // 0 = take from config
    bool maps = false;
};

int run_benchmark_cmd(const BenchmarkArgs& args) {
    const qkr::PipelineConfig cfg = load_config_or_default(args.config_path);
    const qkr::Dataset data = qkr::read_dataset_csv(args.data_path);
    const int reps = args.repetitions > 0 ? args.repetitions : cfg.repetitions;

    const qkr::BenchmarkReport report = qkr::run_benchmark(data, cfg, reps, cfg.seed);

    fs::create_directories(fs::path(args.out_dir) / "plotdata");
    nlohmann::json report_json = qkr::benchmark_report_to_json(report);

    std::optional<qkr::FeatureMapComparison> cmp;
    if (args.maps) {
        cmp = qkr::compare_feature_maps(data, qkr::standard_feature_maps(cfg.pca_k), cfg,
                                        cfg.seed);
        nlohmann::json table = nlohmann::json::array();
        for (const auto& e : cmp->entries) {
            table.push_back({{"feature_map", e.name},
                             {"metrics", qkr::metric_set_to_json(e.metrics)}});
        }
        report_json["feature_map_comparison"] = {{"table", table}, {"winner", cmp->winner}};
    }

    open_out((fs::path(args.out_dir) / "benchmark.json").string()) << report_json.dump(2) << '\n';
    {
        auto os = open_out((fs::path(args.out_dir) / "benchmark.csv").string());
        qkr::write_benchmark_csv(os, report);
    }
    {
        auto os = open_out((fs::path(args.out_dir) / "plotdata" / "metric_bars.csv").string());
        qkr::write_metric_bars_csv(os, report);
    }
    {
        auto os =
            open_out((fs::path(args.out_dir) / "plotdata" / "advantage_ratios.csv").string());
        qkr::write_advantage_csv(os, report);
    }
    {
        auto os =
            open_out((fs::path(args.out_dir) / "plotdata" / "predictions_scatter.csv").string());
        qkr::write_scatter_csv(os, report);
    }
    if (cmp) {
        auto os = open_out((fs::path(args.out_dir) / "feature_maps.csv").string());
        qkr::write_feature_map_csv(os, *cmp);
    }

    std::cout << "benchmark over " << reps << " repetitions (" << data.size()
              << " records), reports in " << args.out_dir << "\n";
    std::cout << "model      mae (mean +/- std)\n";
    for (const auto& name : report.model_names) {
        const auto& s = report.stats.at(name).at("mae");
        std::cout << "  " << name << std::string(name.size() < 9 ? 9 - name.size() : 1, ' ')
                  << qkr::format_double(s.mean) << " +/- " << qkr::format_double(s.stddev)
                  << "\n";
    }
    std::cout << "  reference " << qkr::format_double(report.reference.at("mae").mean) << "\n";
    if (cmp) std::cout << "feature-map winner: " << cmp->winner << "\n";
    return 0;
}

struct KernelArgs {
    std::string data_path, config_path;
    std::string out = "kernel.csv";
};

int run_kernel(const KernelArgs& args) {
    const qkr::PipelineConfig cfg = load_config_or_default(args.config_path);
    qkr::Dataset data = qkr::read_dataset_csv(args.data_path);
    std::erase_if(data, [](const qkr::DeviceRecord& rec) {
        return rec.provenance != qkr::Provenance::Experimental;
    });
    if (data.empty()) throw std::invalid_argument("kernel: no experimental records in input");

    const Eigen::MatrixXd raw = qkr::encode_dataset(data);
    const qkr::PCAModel pca = qkr::pca_fit(raw, cfg.pca_k);
    const qkr::ScalerModel scaler = qkr::scale_fit(qkr::pca_transform(pca, raw));
    const Eigen::MatrixXd features = qkr::scale_transform(scaler, qkr::pca_transform(pca, raw));

    std::vector<std::string> ids;
    for (const auto& rec : data) ids.push_back(rec.record_id);
    const qkr::KernelMatrix K =
        qkr::gram_matrix(cfg.feature_map_spec(cfg.pca_k), features, ids, cfg.kernel_mode_enum(),
                         cfg.kernel_shots, cfg.seed);

    auto os = open_out(args.out);
    qkr::write_kernel_csv(os, K);
    std::cout << "wrote " << K.rows() << "x" << K.cols() << " kernel matrix to " << args.out
              << "\n";
    return 0;
}

struct VerifyArgs {
    std::string bundle_path, data_path;
    std::string out = "verification.json";
};

int run_verify(const VerifyArgs& args) {
    const qkr::PipelineBundle bundle = qkr::load_bundle(args.bundle_path);
    const qkr::Dataset external = qkr::read_dataset_csv(args.data_path);
    const qkr::HoldoutReport report = qkr::verify_holdout(bundle, external);

    std::cout << "record_id        measured   predicted  abs_error\n";
    for (const auto& row : report.rows) {
        std::printf("%-16s %9.4f  %9.4f  %9.4f\n", row.id.c_str(), row.measured, row.predicted,
                    row.abs_error);
    }
    std::cout << "MAE: " << qkr::format_double(report.mae) << "\n";

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"record_id", row.id},
                        {"measured", row.measured},
                        {"predicted", row.predicted},
                        {"abs_error", row.abs_error}});
    }
    open_out(args.out) << nlohmann::json{{"version", qkr::kArtifactVersion},
                                         {"rows", rows},
                                         {"mae", report.mae}}
                              .dump(2)
                       << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-kernel regression toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic recipe dataset CSV");
    synth->add_option("--n", synth_args.n, "number of records")->required();
    synth->add_option("--seed", synth_args.seed, "generator seed");
    synth->add_option("--noise", synth_args.noise, "label noise sigma (ohm*mm)");
    synth->add_option("--out", synth_args.out, "output CSV path")->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train the pipeline and freeze a bundle");
    train->add_option("--data", train_args.data_path, "dataset CSV")->required();
    train->add_option("--config", train_args.config_path, "pipeline config JSON");
    train->add_option("--out", train_args.bundle_out, "bundle output path");
    train->add_option("--report", train_args.report_out, "training report output path");

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "predict r_c for records through a bundle");
    predict->add_option("--bundle", predict_args.bundle_path, "trained bundle JSON")->required();
    predict->add_option("--data", predict_args.data_path, "dataset CSV")->required();
    predict->add_option("--out", predict_args.out, "predictions CSV path");

    BenchmarkArgs bench_args;
    auto* bench = app.add_subcommand("benchmark", "repeated-split comparison against baselines");
    bench->add_option("--data", bench_args.data_path, "dataset CSV")->required();
    bench->add_option("--config", bench_args.config_path, "pipeline config JSON");
    bench->add_option("--out-dir", bench_args.out_dir, "report output directory");
    bench->add_option("--repetitions", bench_args.repetitions, "override repetition count");
    bench->add_flag("--maps", bench_args.maps, "also compare the four standard feature maps");

    KernelArgs kernel_args;
    auto* kernel = app.add_subcommand("kernel", "export the experimental-only Gram matrix CSV");
    kernel->add_option("--data", kernel_args.data_path, "dataset CSV")->required();
    kernel->add_option("--config", kernel_args.config_path, "pipeline config JSON");
    kernel->add_option("--out", kernel_args.out, "kernel CSV path");

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "evaluate a bundle on external labeled records");
    verify->add_option("--bundle", verify_args.bundle_path, "trained bundle JSON")->required();
    verify->add_option("--data", verify_args.data_path, "external labeled CSV")->required();
    verify->add_option("--out", verify_args.out, "verification report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (train->parsed()) return run_train(train_args);
        if (predict->parsed()) return run_predict(predict_args);
        if (bench->parsed()) return run_benchmark_cmd(bench_args);
        if (kernel->parsed()) return run_kernel(kernel_args);
        if (verify->parsed()) return run_verify(verify_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
