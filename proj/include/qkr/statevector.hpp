#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "qkr/common.hpp"

namespace qkr {

/// Dense amplitude vector over n qubits. Basis index bit k corresponds to
/// qubit k, so qubit 0 is the least significant bit of the index.
struct QuantumState {
    int n_qubits = 0;
    std::vector<std::complex<double>> amplitudes;

    std::size_t dim() const { return amplitudes.size(); }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return std::sqrt(s);
    }
};

enum class GateKind { Hadamard, Phase, Cnot };

/// One circuit element: H, Phase(angle) or CNOT(control -> target).
struct GateOp {
    GateKind kind = GateKind::Hadamard;
    int target = 0;
    int control = -1;    // CNOT only
    double angle = 0.0;  // Phase only

    static GateOp hadamard(int target) { return {GateKind::Hadamard, target, -1, 0.0}; }
    static GateOp phase(int target, double angle) { return {GateKind::Phase, target, -1, angle}; }
    static GateOp cnot(int control, int target) { return {GateKind::Cnot, target, control, 0.0}; }
};

inline constexpr int kMaxQubits = 24;  // memory guard: 2^24 amplitudes

/// |0...0> on n qubits.
inline QuantumState new_zero_state(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("new_zero_state: n_qubits must be in [1, " +
                                    std::to_string(kMaxQubits) + "], got " +
                                    std::to_string(n_qubits));
    }
    QuantumState s;
    s.n_qubits = n_qubits;
    s.amplitudes.assign(std::size_t{1} << n_qubits, {0.0, 0.0});
    s.amplitudes[0] = {1.0, 0.0};
    return s;
}

namespace detail {

inline void check_qubit(const QuantumState& s, int q, const char* what) {
    if (q < 0 || q >= s.n_qubits) {
        throw std::out_of_range(std::string(what) + ": qubit index " + std::to_string(q) +
                                " out of range for " + std::to_string(s.n_qubits) + " qubits");
    }
}

}  // namespace detail

/// Applies the gate's unitary in place via stride iteration over the
/// amplitude vector; no 2^n x 2^n matrix is ever built.
inline void apply_gate(QuantumState& state, const GateOp& gate) {
    detail::check_qubit(state, gate.target, "apply_gate");
    const std::size_t dim = state.dim();
    const std::size_t t_bit = std::size_t{1} << gate.target;
    auto& amps = state.amplitudes;

    switch (gate.kind) {
        case GateKind::Hadamard: {
            constexpr double inv_sqrt2 = 0.70710678118654752440;
            for (std::size_t base = 0; base < dim; base += 2 * t_bit) {
                for (std::size_t off = 0; off < t_bit; ++off) {
                    const std::size_t i0 = base + off;
                    const std::size_t i1 = i0 + t_bit;
                    const auto a0 = amps[i0];
                    const auto a1 = amps[i1];
                    amps[i0] = (a0 + a1) * inv_sqrt2;
                    amps[i1] = (a0 - a1) * inv_sqrt2;
                }
            }
            break;
        }
        case GateKind::Phase: {
            const std::complex<double> ph = std::polar(1.0, gate.angle);
            for (std::size_t base = 0; base < dim; base += 2 * t_bit) {
                for (std::size_t off = 0; off < t_bit; ++off) {
                    amps[base + off + t_bit] *= ph;
                }
            }
            break;
        }
        case GateKind::Cnot: {
            detail::check_qubit(state, gate.control, "apply_gate");
            if (gate.control == gate.target) {
                throw std::invalid_argument("apply_gate: CNOT control equals target");
            }
            const std::size_t c_bit = std::size_t{1} << gate.control;
            for (std::size_t i = 0; i < dim; ++i) {
                if ((i & c_bit) && !(i & t_bit)) {
                    std::swap(amps[i], amps[i | t_bit]);
                }
            }
            break;
        }
    }
}

inline void apply_circuit(QuantumState& state, const std::vector<GateOp>& gates) {
    for (const auto& g : gates) apply_gate(state, g);
}

/// <a|b> = sum_k conj(a_k) * b_k.
inline std::complex<double> inner_product(const QuantumState& a, const QuantumState& b) {
    if (a.n_qubits != b.n_qubits) {
        throw std::invalid_argument("inner_product: dimension mismatch (" +
                                    std::to_string(a.n_qubits) + " vs " +
                                    std::to_string(b.n_qubits) + " qubits)");
    }
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t k = 0; k < a.dim(); ++k) {
        acc += std::conj(a.amplitudes[k]) * b.amplitudes[k];
    }
    return acc;
}

/// |amplitude[0]|^2, the probability of reading all qubits as 0.
inline double probability_all_zero(const QuantumState& state) {
    return std::norm(state.amplitudes[0]);
}

/// Multinomial measurement in the computational basis. Deterministic for a
/// fixed seed; counts sum to shots.
inline std::map<std::uint64_t, std::uint64_t> sample_measurement(const QuantumState& state,
                                                                 std::uint64_t shots,
                                                                 std::uint64_t seed) {
    if (shots == 0) throw std::invalid_argument("sample_measurement: shots must be >= 1");

    std::vector<double> cumulative(state.dim());
    double acc = 0.0;
    for (std::size_t k = 0; k < state.dim(); ++k) {
        acc += std::norm(state.amplitudes[k]);
        cumulative[k] = acc;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = unit(rng) * acc;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        std::size_t outcome = it == cumulative.end() ? state.dim() - 1
                                                     : std::size_t(it - cumulative.begin());
        ++counts[outcome];
    }
    return counts;
}

}  // namespace qkr
