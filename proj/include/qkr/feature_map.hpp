#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkr/statevector.hpp"

namespace qkr {

enum class MapFamily { Z, ZZ };
enum class Entanglement { None, Linear, Full };

/// Declarative description of a data-encoding circuit. One register qubit
/// per input feature; `reps` concatenated repetitions of the encoding layer.
struct FeatureMapSpec {
    MapFamily family = MapFamily::ZZ;
    Entanglement entanglement = Entanglement::Full;
    int reps = 2;
    int n_features = 5;

    void validate() const {
        if (n_features < 1) throw std::invalid_argument("feature map: n_features must be >= 1");
        if (reps < 1) throw std::invalid_argument("feature map: reps must be >= 1");
        if (family == MapFamily::Z && entanglement != Entanglement::None) {
            throw std::invalid_argument("feature map: Z family admits no entanglement");
        }
    }

    std::string name() const {
        std::string s = family == MapFamily::Z ? "z" : "zz";
        switch (entanglement) {
            case Entanglement::None: s += "-none"; break;
            case Entanglement::Linear: s += "-linear"; break;
            case Entanglement::Full: s += "-full"; break;
        }
        return s + "-" + std::to_string(reps);
    }
};

/// An encoding circuit: an ordered gate list over a fixed register width.
struct CircuitProgram {
    int n_qubits = 0;
    std::vector<GateOp> gates;
};

/// Qubit pairs touched by the entangling blocks, in deterministic order.
/// Linear couples neighbours (i, i+1); Full couples every i < j
/// lexicographically.
inline std::vector<std::pair<int, int>> entangled_pairs(const FeatureMapSpec& spec) {
    std::vector<std::pair<int, int>> pairs;
    const int n = spec.n_features;
    switch (spec.entanglement) {
        case Entanglement::None:
            break;
        case Entanglement::Linear:
            for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
            break;
        case Entanglement::Full:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
            break;
    }
    return pairs;
}

/// Builds the encoding circuit for feature vector x. Per repetition:
///   H on every qubit,
///   Phase(2 * x_i) on qubit i,
///   per entangled pair (i, j): CNOT(i->j), Phase(2 * (pi-x_i) * (pi-x_j)) on j,
///   CNOT(i->j).
inline CircuitProgram build_circuit(const FeatureMapSpec& spec, std::span<const double> x) {
    spec.validate();
    if (static_cast<int>(x.size()) != spec.n_features) {
        throw std::invalid_argument("build_circuit: feature vector length " +
                                    std::to_string(x.size()) + " does not match spec width " +
                                    std::to_string(spec.n_features));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("build_circuit: non-finite feature");
    }

    const int n = spec.n_features;
    const auto pairs = entangled_pairs(spec);

    CircuitProgram prog;
    prog.n_qubits = n;
    prog.gates.reserve(static_cast<std::size_t>(spec.reps) * (2 * n + 3 * pairs.size()));
    for (int r = 0; r < spec.reps; ++r) {
        for (int q = 0; q < n; ++q) prog.gates.push_back(GateOp::hadamard(q));
        for (int q = 0; q < n; ++q) prog.gates.push_back(GateOp::phase(q, 2.0 * x[q]));
        for (const auto& [i, j] : pairs) {
            prog.gates.push_back(GateOp::cnot(i, j));
            prog.gates.push_back(GateOp::phase(j, 2.0 * (kPi - x[i]) * (kPi - x[j])));
            prog.gates.push_back(GateOp::cnot(i, j));
        }
    }
    return prog;
}

/// Adjoint of an encoding circuit: reversed gate order with negated phases
/// (H and CNOT are self-inverse).
inline std::vector<GateOp> adjoint_gates(const CircuitProgram& prog) {
    std::vector<GateOp> rev(prog.gates.rbegin(), prog.gates.rend());
    for (auto& g : rev) {
        if (g.kind == GateKind::Phase) g.angle = -g.angle;
    }
    return rev;
}

/// Encoded state of x: the circuit applied to |0...0>.
inline QuantumState encode(const FeatureMapSpec& spec, std::span<const double> x) {
    const CircuitProgram prog = build_circuit(spec, x);
    QuantumState state = new_zero_state(prog.n_qubits);
    apply_circuit(state, prog.gates);
    return state;
}

/// Reduced single-qubit expectation values (<X>, <Y>, <Z>) of one qubit.
/// Entangled registers yield vectors of length < 1.
inline std::array<double, 3> bloch_vector(const QuantumState& state, int qubit) {
    detail::check_qubit(state, qubit, "bloch_vector");
    const std::size_t bit = std::size_t{1} << qubit;
    double z = 0.0;
    std::complex<double> coh{0.0, 0.0};  // sum over conj(a_{q=0}) * a_{q=1}
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if (i & bit) {
            z -= std::norm(state.amplitudes[i]);
        } else {
            z += std::norm(state.amplitudes[i]);
            coh += std::conj(state.amplitudes[i]) * state.amplitudes[i | bit];
        }
    }
    return {2.0 * coh.real(), 2.0 * coh.imag(), z};
}

struct BlochAngles {
    double polar = 0.0;    // angle from +Z, in [0, pi]
    double azimuth = 0.0;  // angle in the XY plane from +X, in (-pi, pi]
    double radius = 0.0;   // <= 1; < 1 for entangled qubits
};

/// Spherical view of one qubit's reduced Bloch vector.
inline BlochAngles bloch_angles(const QuantumState& state, int qubit) {
    const auto [x, y, z] = bloch_vector(state, qubit);
    BlochAngles out;
    out.radius = std::sqrt(x * x + y * y + z * z);
    out.polar = std::atan2(std::sqrt(x * x + y * y), z);
    out.azimuth = std::atan2(y, x);
    return out;
}

}  // namespace qkr
