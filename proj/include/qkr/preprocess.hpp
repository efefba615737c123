#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkr/common.hpp"

namespace qkr {

enum class Ambient { N2, Other };
enum class Provenance { Experimental, Synthesized };

/// Electrode layer materials. The encoding reserves one 8-way one-hot block
/// per stack position.
enum class Material { Ti, Al, Ni, Au, Mo, Ta, TiN, Pt };

inline constexpr int kNumMaterials = 8;
inline constexpr int kMaxLayers = 4;
inline constexpr int kScalarFeatures = 5;  // al, thickness, temp, time, ambient flag
inline constexpr int kEncodedWidth = kScalarFeatures + kMaxLayers * kNumMaterials;  // 37

inline const char* material_name(Material m) {
    switch (m) {
        case Material::Ti: return "Ti";
        case Material::Al: return "Al";
        case Material::Ni: return "Ni";
        case Material::Au: return "Au";
        case Material::Mo: return "Mo";
        case Material::Ta: return "Ta";
        case Material::TiN: return "TiN";
        case Material::Pt: return "Pt";
    }
    return "?";
}

inline Material parse_material(const std::string& s) {
    for (int i = 0; i < kNumMaterials; ++i) {
        const auto m = static_cast<Material>(i);
        if (s == material_name(m)) return m;
    }
    throw std::invalid_argument("unknown stack material '" + s + "'");
}

/// One Ohmic-contact fabrication recipe with its measured contact
/// resistance label (ohm*mm), when available.
struct DeviceRecord {
    std::string record_id;
    double al_content = 0.0;           // mole fraction, [0, 1]
    double barrier_thickness_nm = 0.0; // > 0
    double anneal_temp_c = 0.0;
    double anneal_time_s = 0.0;        // > 0
    Ambient ambient = Ambient::N2;
    std::vector<Material> metal_stack; // 1..4 layers
    std::optional<double> r_c;         // ohm*mm, >= 0
    Provenance provenance = Provenance::Experimental;

    void validate() const {
        if (al_content < 0.0 || al_content > 1.0) {
            throw std::invalid_argument("record " + record_id + ": al_content outside [0, 1]");
        }
        if (!(barrier_thickness_nm > 0.0)) {
            throw std::invalid_argument("record " + record_id + ": barrier thickness must be > 0");
        }
        if (!(anneal_time_s > 0.0)) {
            throw std::invalid_argument("record " + record_id + ": anneal time must be > 0");
        }
        if (metal_stack.empty() || metal_stack.size() > kMaxLayers) {
            throw std::invalid_argument("record " + record_id + ": stack must have 1.." +
                                        std::to_string(kMaxLayers) + " layers");
        }
        if (r_c && *r_c < 0.0) {
            throw std::invalid_argument("record " + record_id + ": r_c must be >= 0");
        }
    }
};

using Dataset = std::vector<DeviceRecord>;

/// Feature matrix plus labels, ids and provenance flags; the shape every
/// downstream stage consumes.
struct EncodedDataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> ids;
    std::vector<Provenance> provenance;
    std::string schema_version = "qkr-dataset-v1";

    Eigen::Index size() const { return X.rows(); }
};

/// Fixed 37-wide layout: [al, thickness, temp, time, ambient(Other=1)]
/// followed by four 8-way material one-hot blocks; absent layers encode as
/// all-zero blocks.
inline Eigen::VectorXd encode_record(const DeviceRecord& rec) {
    rec.validate();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kEncodedWidth);
    v[0] = rec.al_content;
    v[1] = rec.barrier_thickness_nm;
    v[2] = rec.anneal_temp_c;
    v[3] = rec.anneal_time_s;
    v[4] = rec.ambient == Ambient::Other ? 1.0 : 0.0;
    for (std::size_t layer = 0; layer < rec.metal_stack.size(); ++layer) {
        const int slot = kScalarFeatures + static_cast<int>(layer) * kNumMaterials +
                         static_cast<int>(rec.metal_stack[layer]);
        v[slot] = 1.0;
    }
    return v;
}

inline Eigen::MatrixXd encode_dataset(const Dataset& data) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(data.size()), kEncodedWidth);
    for (std::size_t i = 0; i < data.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = encode_record(data[i]).transpose();
    }
    return X;
}

/// Seeded uniform shuffle split; train size = round(train_fraction * n).
/// Only experimental records may enter a split (test sets must never see
/// synthesized rows).
inline std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                         std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
    }
    if (data.size() < 2) throw std::invalid_argument("split: need at least 2 records");
    for (const auto& rec : data) {
        if (rec.provenance != Provenance::Experimental) {
            throw std::invalid_argument("split: synthesized record " + rec.record_id +
                                        " may not enter a train/test split");
        }
    }
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(
        std::lround(train_fraction * static_cast<double>(data.size())));
    Dataset train, test;
    train.reserve(n_train);
    test.reserve(data.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).push_back(data[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

/// Centering plus the top-k principal directions of the covariance
/// (divisor n). Component rows are orthonormal; each row's
/// largest-magnitude coordinate is made positive so fits are sign-stable.
struct PCAModel {
    Eigen::VectorXd mean;                       // d
    Eigen::MatrixXd components;                 // k x d, orthonormal rows
    Eigen::VectorXd explained_variance_ratio;   // k, non-increasing
};

inline PCAModel pca_fit(const Eigen::MatrixXd& X, int k = 5) {
    const Eigen::Index n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (k < 1 || k > std::min<Eigen::Index>(n - 1, d)) {
        throw std::invalid_argument("pca_fit: k must lie in [1, min(n-1, d)]");
    }

    PCAModel model;
    model.mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigensolve failed");
    const double total = std::max(es.eigenvalues().cwiseMax(0.0).sum(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("pca_fit: degenerate data with zero variance");

    // Eigen returns ascending eigenvalues; take the top k in descending order.
    model.components.resize(k, d);
    model.explained_variance_ratio.resize(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::Index src = d - 1 - i;
        Eigen::VectorXd comp = es.eigenvectors().col(src);
        Eigen::Index peak = 0;
        comp.cwiseAbs().maxCoeff(&peak);
        if (comp[peak] < 0.0) comp = -comp;
        model.components.row(i) = comp.transpose();
        model.explained_variance_ratio[i] = std::max(es.eigenvalues()[src], 0.0) / total;
    }
    return model;
}

inline Eigen::MatrixXd pca_transform(const PCAModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.mean.size()) {
        throw std::invalid_argument("pca_transform: width " + std::to_string(X.cols()) +
                                    " does not match fitted width " +
                                    std::to_string(model.mean.size()));
    }
    return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

/// Per-column affine map of the observed [min, max] onto [lo, hi]
/// (defaults [0, pi]); constant columns map to the midpoint and transforms
/// clamp out-of-range values into the target interval.
struct ScalerModel {
    Eigen::VectorXd col_min;
    Eigen::VectorXd col_max;
    double lo = 0.0;
    double hi = kPi;
};

inline ScalerModel scale_fit(const Eigen::MatrixXd& X, double lo = 0.0, double hi = kPi) {
    if (X.rows() == 0) throw std::invalid_argument("scale_fit: empty matrix");
    if (!X.allFinite()) throw std::invalid_argument("scale_fit: non-finite entries");
    ScalerModel m;
    m.col_min = X.colwise().minCoeff();
    m.col_max = X.colwise().maxCoeff();
    m.lo = lo;
    m.hi = hi;
    return m;
}

inline Eigen::MatrixXd scale_transform(const ScalerModel& m, const Eigen::MatrixXd& X) {
    if (X.cols() != m.col_min.size()) {
        throw std::invalid_argument("scale_transform: width mismatch");
    }
    Eigen::MatrixXd out(X.rows(), X.cols());
    const double mid = 0.5 * (m.lo + m.hi);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double range = m.col_max[j] - m.col_min[j];
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            double v = range == 0.0
                           ? mid
                           : m.lo + (X(i, j) - m.col_min[j]) / range * (m.hi - m.lo);
            out(i, j) = std::clamp(v, m.lo, m.hi);
        }
    }
    return out;
}

inline Eigen::MatrixXd scale_inverse(const ScalerModel& m, const Eigen::MatrixXd& S) {
    if (S.cols() != m.col_min.size()) {
        throw std::invalid_argument("scale_inverse: width mismatch");
    }
    Eigen::MatrixXd out(S.rows(), S.cols());
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
        const double range = m.col_max[j] - m.col_min[j];
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            out(i, j) = range == 0.0
                            ? m.col_min[j]
                            : m.col_min[j] + (S(i, j) - m.lo) / (m.hi - m.lo) * range;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic recipe generator. Stands in for unpublished fabrication data;
// real data drops in through the same CSV schema.
// ---------------------------------------------------------------------------

/// Deterministic ground-truth contact resistance of a recipe (ohm*mm).
/// The documented formula (see README) combines an annealing-temperature
/// parabola with an optimum near 840 C, a mild annealing-time parabola, a
/// linear barrier-thickness penalty, a weak Al-content term, and stack and
/// ambient offsets.
inline double synth_ground_truth(const DeviceRecord& rec) {
    const double temp_term = 1.1 * std::pow((rec.anneal_temp_c - 840.0) / 250.0, 2.0);
    const double time_term = 0.5 * std::pow((rec.anneal_time_s - 60.0) / 90.0, 2.0);
    const double thickness_term = 0.011 * (rec.barrier_thickness_nm - 5.0);
    const double al_term = 14.0 * std::pow(rec.al_content - 0.25, 2.0);
    const bool ti_first = !rec.metal_stack.empty() && rec.metal_stack.front() == Material::Ti;
    const bool has_au = std::find(rec.metal_stack.begin(), rec.metal_stack.end(),
                                  Material::Au) != rec.metal_stack.end();
    const double stack_term = (ti_first ? 0.0 : 0.22) + (has_au ? -0.15 : 0.0);
    const double ambient_term = rec.ambient == Ambient::Other ? 0.10 : 0.0;
    const double r = 0.32 + temp_term + time_term + thickness_term + al_term + stack_term +
                     ambient_term;
    return std::max(r, 0.02);
}

/// Samples n recipes over realistic process levels and labels them with
/// synth_ground_truth plus seeded Gaussian noise. Fully deterministic per
/// (n, seed, noise_sigma); every record is flagged Experimental so the
/// output behaves like measured data downstream.
inline Dataset synth_dataset(int n, std::uint64_t seed, double noise_sigma = 0.05) {
    if (n < 1) throw std::invalid_argument("synth_dataset: n must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth_dataset: noise must be >= 0");

    static const std::vector<std::vector<Material>> kStacks = {
        {Material::Ti, Material::Al, Material::Ni, Material::Au},
        {Material::Ti, Material::Al, Material::Ti, Material::Au},
        {Material::Ti, Material::Al, Material::Mo, Material::Au},
        {Material::Ti, Material::Al, Material::Ti, Material::TiN},
        {Material::Ti, Material::Al, Material::Pt, Material::Au},
        {Material::Ta, Material::Al, Material::Ta},
        {Material::Mo, Material::Al, Material::Mo, Material::Au},
        {Material::Ti, Material::Al},
    };
    static const std::vector<double> kStackWeights = {0.30, 0.10, 0.10, 0.15,
                                                      0.10, 0.10, 0.05, 0.10};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto pick_level = [&](double lo, double hi, double step) {
        const int levels = static_cast<int>(std::lround((hi - lo) / step)) + 1;
        const int idx = std::min<int>(static_cast<int>(unit(rng) * levels), levels - 1);
        return lo + step * idx;
    };

    Dataset data;
    data.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        DeviceRecord rec;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "rec-%04d", i + 1);
        rec.record_id = idbuf;
        rec.al_content = pick_level(0.15, 0.35, 0.05);
        rec.barrier_thickness_nm = pick_level(5.0, 30.0, 5.0);
        rec.anneal_temp_c = pick_level(400.0, 900.0, 25.0);
        rec.anneal_time_s = pick_level(30.0, 120.0, 30.0);
        rec.ambient = unit(rng) < 0.85 ? Ambient::N2 : Ambient::Other;

        double u = unit(rng);
        std::size_t stack_idx = 0;
        for (; stack_idx + 1 < kStacks.size(); ++stack_idx) {
            if (u < kStackWeights[stack_idx]) break;
            u -= kStackWeights[stack_idx];
        }
        rec.metal_stack = kStacks[stack_idx];

        const double noise = noise_sigma > 0.0 ? noise_sigma * gauss(rng) : 0.0;
        rec.r_c = std::max(synth_ground_truth(rec) + noise, 0.0);
        rec.provenance = Provenance::Experimental;
        data.push_back(std::move(rec));
    }
    return data;
}

// ---------------------------------------------------------------------------
// Dataset CSV: one row per record, '.' decimal separator, empty cells for
// absent layers and missing labels.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetCsvHeader =
    "record_id,al_content,barrier_thickness_nm,anneal_temp_c,anneal_time_s,anneal_ambient,"
    "layer1,layer2,layer3,layer4,r_c_ohm_mm,provenance";

inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
    os << kDatasetCsvHeader << '\n';
    for (const auto& rec : data) {
        os << rec.record_id << ',' << format_double(rec.al_content) << ','
           << format_double(rec.barrier_thickness_nm) << ','
           << format_double(rec.anneal_temp_c) << ',' << format_double(rec.anneal_time_s) << ','
           << (rec.ambient == Ambient::N2 ? "N2" : "Other");
        for (int layer = 0; layer < kMaxLayers; ++layer) {
            os << ',';
            if (layer < static_cast<int>(rec.metal_stack.size())) {
                os << material_name(rec.metal_stack[static_cast<std::size_t>(layer)]);
            }
        }
        os << ',';
        if (rec.r_c) os << format_double(*rec.r_c);
        os << ',' << (rec.provenance == Provenance::Experimental ? "experimental" : "synthesized")
           << '\n';
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream os(path);
    if (!os) throw std::invalid_argument("cannot open '" + path + "' for writing");
    write_dataset_csv(os, data);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double_field(const std::string& s, int line_no, const char* col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": bad numeric value '"
                                    + s + "' in column " + col);
    }
}

}  // namespace detail

inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("dataset CSV is empty");
    if (detail::split_csv_line(line) != detail::split_csv_line(kDatasetCsvHeader)) {
        throw std::invalid_argument("dataset CSV header does not match the expected schema");
    }

    Dataset data;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 12) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 12 fields, got "
                                        + std::to_string(f.size()));
        }
        DeviceRecord rec;
        rec.record_id = f[0];
        rec.al_content = detail::parse_double_field(f[1], line_no, "al_content");
        rec.barrier_thickness_nm =
            detail::parse_double_field(f[2], line_no, "barrier_thickness_nm");
        rec.anneal_temp_c = detail::parse_double_field(f[3], line_no, "anneal_temp_c");
        rec.anneal_time_s = detail::parse_double_field(f[4], line_no, "anneal_time_s");
        if (f[5] == "N2") {
            rec.ambient = Ambient::N2;
        } else if (f[5] == "Other") {
            rec.ambient = Ambient::Other;
        } else {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": bad ambient '" +
                                        f[5] + "' (expected N2 or Other)");
        }
        for (int layer = 0; layer < kMaxLayers; ++layer) {
            const auto& cell = f[static_cast<std::size_t>(6 + layer)];
            if (cell.empty()) continue;
            if (static_cast<int>(rec.metal_stack.size()) != layer) {
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": stack has a gap before layer " +
                                            std::to_string(layer + 1));
            }
            try {
                rec.metal_stack.push_back(parse_material(cell));
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (!f[10].empty()) rec.r_c = detail::parse_double_field(f[10], line_no, "r_c_ohm_mm");
        if (f[11] == "experimental") {
            rec.provenance = Provenance::Experimental;
        } else if (f[11] == "synthesized") {
            rec.provenance = Provenance::Synthesized;
        } else {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": bad provenance '" +
                                        f[11] + "'");
        }
        try {
            rec.validate();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
        data.push_back(std::move(rec));
    }
    return data;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open dataset '" + path + "'");
    return read_dataset_csv(is);
}

}  // namespace qkr
