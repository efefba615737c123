#pragma once

// Independent Kronecker-product oracle for gate application: builds the
// explicit 2^n x 2^n unitary of a gate and applies it by dense
// matrix-vector multiplication. Deliberately separate from the library's
// stride-iteration path.

#include <complex>
#include <vector>

#include "qkr/statevector.hpp"

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = std::vector<std::vector<Complex>>;

inline CMatrix full_gate_matrix(int n_qubits, const qkr::GateOp& gate) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    CMatrix m(dim, std::vector<Complex>(dim, Complex{0.0, 0.0}));

    const auto bit = [](std::size_t v, int q) { return (v >> q) & 1u; };

    Complex u2[2][2];
    if (gate.kind == qkr::GateKind::Hadamard) {
        const double s = 0.70710678118654752440;
        u2[0][0] = s; u2[0][1] = s;
        u2[1][0] = s; u2[1][1] = -s;
    } else if (gate.kind == qkr::GateKind::Phase) {
        u2[0][0] = 1.0; u2[0][1] = 0.0;
        u2[1][0] = 0.0; u2[1][1] = std::polar(1.0, gate.angle);
    }

    // CNOT truth table over the (control, target) pair.
    const auto cnot4 = [](unsigned r, unsigned c) -> Complex {
        const unsigned rc = r >> 1, rt = r & 1, cc = c >> 1, ct = c & 1;
        if (rc != cc) return 0.0;
        if (cc == 0) return rt == ct ? 1.0 : 0.0;
        return rt == (ct ^ 1u) ? 1.0 : 0.0;
    };

    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            Complex prod{1.0, 0.0};
            bool zero = false;
            for (int q = 0; q < n_qubits && !zero; ++q) {
                Complex factor;
                if (gate.kind == qkr::GateKind::Cnot) {
                    if (q == gate.control) {
                        factor = cnot4((bit(r, gate.control) << 1) | bit(r, gate.target),
                                       (bit(c, gate.control) << 1) | bit(c, gate.target));
                    } else if (q == gate.target) {
                        factor = 1.0;  // folded into the pair factor above
                    } else {
                        factor = bit(r, q) == bit(c, q) ? 1.0 : 0.0;
                    }
                } else {
                    factor = q == gate.target ? u2[bit(r, q)][bit(c, q)]
                                              : (bit(r, q) == bit(c, q) ? 1.0 : 0.0);
                }
                if (factor == Complex{0.0, 0.0}) zero = true;
                prod *= factor;
            }
            m[r][c] = zero ? Complex{0.0, 0.0} : prod;
        }
    }
    return m;
}

inline std::vector<Complex> matvec(const CMatrix& m, const std::vector<Complex>& v) {
    std::vector<Complex> out(m.size(), Complex{0.0, 0.0});
    for (std::size_t r = 0; r < m.size(); ++r) {
        for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
    }
    return out;
}

/// Applies a gate to a copy of the state through the explicit matrix.
inline qkr::QuantumState apply_gate_by_matrix(const qkr::QuantumState& state,
                                              const qkr::GateOp& gate) {
    qkr::QuantumState out = state;
    out.amplitudes = matvec(full_gate_matrix(state.n_qubits, gate), state.amplitudes);
    return out;
}

/// Applies a whole circuit through explicit matrices.
inline qkr::QuantumState apply_circuit_by_matrix(const qkr::QuantumState& state,
                                                 const std::vector<qkr::GateOp>& gates) {
    qkr::QuantumState out = state;
    for (const auto& g : gates) out = apply_gate_by_matrix(out, g);
    return out;
}

}  // namespace oracle
