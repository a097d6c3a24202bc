// Copyright 2026 The edgevqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Dense statevector simulation over W qubits.
 *
 * Conventions, fixed for the whole library:
 *  - little-endian: qubit w is bit w of the amplitude index;
 *  - measuring eigenvalue +1 of Pauli-Z yields bit 0, eigenvalue -1 yields bit 1,
 *    so a sampled basis index is directly the measured bitstring.
 */
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgevqc/rng.hpp"

namespace edgevqc {

using complex = std::complex<double>;

/// Row-major 2x2 complex matrix {m00, m01, m10, m11}.
using Mat2 = std::array<complex, 4>;

enum class GateKind : std::uint8_t { RX, RY, RZ, U3, CNOT, CZ, CRX, CRZ };

constexpr std::size_t gate_arity(GateKind k) noexcept {
    switch (k) {
    case GateKind::CNOT:
    case GateKind::CZ:
    case GateKind::CRX:
    case GateKind::CRZ:
        return 2;
    default:
        return 1;
    }
}

constexpr std::size_t gate_param_count(GateKind k) noexcept {
    switch (k) {
    case GateKind::U3:
        return 3;
    case GateKind::CNOT:
    case GateKind::CZ:
        return 0;
    default:
        return 1;
    }
}

constexpr const char *gate_name(GateKind k) noexcept {
    switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::U3: return "U3";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
    case GateKind::CRX: return "CRX";
    case GateKind::CRZ: return "CRZ";
    }
    return "?";
}

/**
 * A gate placed on concrete wires.
 *
 * Two-qubit gates store the control in wires[0] and the target in wires[1].
 * U3 parameters are (theta, phi, lambda) with
 * U3 = [[c, -e^{i lambda} s], [e^{i phi} s, e^{i(phi+lambda)} c]], c = cos(theta/2).
 * theta_index maps each parameter to a slot of a flat trainable vector, or -1.
 */
struct Gate {
    GateKind kind{GateKind::RX};
    std::array<std::size_t, 2> wires{};
    std::array<double, 3> params{};
    std::array<std::int32_t, 3> theta_index{-1, -1, -1};

    std::size_t arity() const noexcept { return gate_arity(kind); }
    std::size_t param_count() const noexcept { return gate_param_count(kind); }

    static Gate rx(std::size_t w, double a) { return {GateKind::RX, {w, 0}, {a, 0, 0}}; }
    static Gate ry(std::size_t w, double a) { return {GateKind::RY, {w, 0}, {a, 0, 0}}; }
    static Gate rz(std::size_t w, double a) { return {GateKind::RZ, {w, 0}, {a, 0, 0}}; }
    static Gate u3(std::size_t w, double theta, double phi, double lambda) {
        return {GateKind::U3, {w, 0}, {theta, phi, lambda}};
    }
    static Gate cnot(std::size_t c, std::size_t t) { return {GateKind::CNOT, {c, t}, {}}; }
    static Gate cz(std::size_t c, std::size_t t) { return {GateKind::CZ, {c, t}, {}}; }
    static Gate crx(std::size_t c, std::size_t t, double a) { return {GateKind::CRX, {c, t}, {a, 0, 0}}; }
    static Gate crz(std::size_t c, std::size_t t, double a) { return {GateKind::CRZ, {c, t}, {a, 0, 0}}; }
};

/// The 2x2 matrix acting on the target wire (the controlled block for 2-qubit gates).
inline Mat2 target_matrix(const Gate &g) {
    using namespace std::complex_literals;
    const double h = 0.5 * g.params[0];
    const double c = std::cos(h), s = std::sin(h);
    switch (g.kind) {
    case GateKind::RX:
    case GateKind::CRX:
        return {complex(c), -1i * s, -1i * s, complex(c)};
    case GateKind::RY:
        return {complex(c), complex(-s), complex(s), complex(c)};
    case GateKind::RZ:
    case GateKind::CRZ:
        return {std::polar(1.0, -h), 0.0, 0.0, std::polar(1.0, h)};
    case GateKind::U3: {
        const double phi = g.params[1], lam = g.params[2];
        return {complex(c), -std::polar(s, lam), std::polar(s, phi), std::polar(c, phi + lam)};
    }
    case GateKind::CNOT:
        return {0.0, 1.0, 1.0, 0.0};
    case GateKind::CZ:
        return {1.0, 0.0, 0.0, -1.0};
    }
    throw std::invalid_argument("unknown gate kind");
}

inline Mat2 dagger(const Mat2 &m) {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

/**
 * Full local unitary, row-major, dimension 2^arity.
 * Local basis index: bit 0 is wires[0], bit 1 is wires[1].
 */
inline std::vector<complex> unitary(const Gate &g) {
    const Mat2 m = target_matrix(g);
    if (g.arity() == 1) {
        return {m.begin(), m.end()};
    }
    std::vector<complex> u(16, 0.0);
    u[0 * 4 + 0] = 1.0; // control 0, target 0
    u[2 * 4 + 2] = 1.0; // control 0, target 1
    u[1 * 4 + 1] = m[0];
    u[1 * 4 + 3] = m[1];
    u[3 * 4 + 1] = m[2];
    u[3 * 4 + 3] = m[3];
    return u;
}

/// A measured W-bit outcome; bit w is the outcome of wire w.
struct Bitstring {
    std::uint64_t value{0};
    std::size_t width{0};

    bool operator[](std::size_t w) const noexcept { return (value >> w) & 1U; }
    bool operator==(const Bitstring &) const = default;

    /// Wire 0 first, e.g. "010" has wire 1 set.
    std::string to_string() const {
        std::string s(width, '0');
        for (std::size_t w = 0; w < width; ++w) {
            if ((*this)[w]) s[w] = '1';
        }
        return s;
    }

    static Bitstring from_string(const std::string &s) {
        if (s.size() > 64) throw std::invalid_argument("bitstring longer than 64 bits");
        Bitstring b{0, s.size()};
        for (std::size_t w = 0; w < s.size(); ++w) {
            if (s[w] == '1') b.value |= std::uint64_t{1} << w;
            else if (s[w] != '0') throw std::invalid_argument("bitstring must be 0/1");
        }
        return b;
    }
};

class StateVector {
  public:
    static constexpr std::size_t kMaxQubits = 30;

    /// |0...0> on n_qubits wires.
    explicit StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits == 0 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("qubit count must be in [1, 30]");
        }
        amps_.assign(std::size_t{1} << n_qubits, complex(0.0));
        amps_[0] = 1.0;
    }

    static StateVector basis_state(std::size_t n_qubits, std::uint64_t index) {
        StateVector sv(n_qubits);
        if (index >= sv.dim()) throw std::out_of_range("basis index out of range");
        sv.amps_[0] = 0.0;
        sv.amps_[index] = 1.0;
        return sv;
    }

    static StateVector from_amplitudes(std::vector<complex> amps) {
        const std::size_t n = amps.size();
        if (n < 2 || (n & (n - 1)) != 0) {
            throw std::invalid_argument("amplitude count must be a power of two >= 2");
        }
        StateVector sv(static_cast<std::size_t>(std::countr_zero(n)));
        sv.amps_ = std::move(amps);
        return sv;
    }

    std::size_t n_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return amps_.size(); }
    std::span<const complex> amplitudes() const noexcept { return amps_; }
    std::span<complex> amplitudes() noexcept { return amps_; }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const complex &a : amps_) s += std::norm(a);
        return s;
    }

    void apply(const Gate &g) { apply_local(g, target_matrix(g)); }

    void apply_adjoint(const Gate &g) { apply_local(g, dagger(target_matrix(g))); }

    void apply_single(std::size_t wire, const Mat2 &m) {
        check_wire(wire);
        const std::size_t stride = std::size_t{1} << wire;
        const std::size_t n = amps_.size();
        for (std::size_t hi = 0; hi < n; hi += 2 * stride) {
            for (std::size_t i0 = hi; i0 < hi + stride; ++i0) {
                const std::size_t i1 = i0 + stride;
                const complex a0 = amps_[i0], a1 = amps_[i1];
                amps_[i0] = m[0] * a0 + m[1] * a1;
                amps_[i1] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    /// Applies m to the target on the subspace where the control bit is 1.
    void apply_controlled(std::size_t control, std::size_t target, const Mat2 &m) {
        check_wire(control);
        check_wire(target);
        if (control == target) throw std::invalid_argument("two-qubit gate needs distinct wires");
        const std::size_t cmask = std::size_t{1} << control;
        const std::size_t tmask = std::size_t{1} << target;
        const std::size_t n = amps_.size();
        for (std::size_t i0 = 0; i0 < n; ++i0) {
            if ((i0 & cmask) == 0 || (i0 & tmask) != 0) continue;
            const std::size_t i1 = i0 | tmask;
            const complex a0 = amps_[i0], a1 = amps_[i1];
            amps_[i0] = m[0] * a0 + m[1] * a1;
            amps_[i1] = m[2] * a0 + m[3] * a1;
        }
    }

    /// <Z_w> = P(bit w = 0) - P(bit w = 1), computed from amplitudes.
    double expectation_z(std::size_t wire) const {
        check_wire(wire);
        const std::size_t mask = std::size_t{1} << wire;
        double e = 0.0;
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            const double p = std::norm(amps_[k]);
            e += (k & mask) ? -p : p;
        }
        return e;
    }

    /// <Z_w> for every wire in one sweep.
    std::vector<double> expectations_z() const {
        std::vector<double> e(n_qubits_, 0.0);
        for (std::size_t k = 0; k < amps_.size(); ++k) {
            const double p = std::norm(amps_[k]);
            for (std::size_t w = 0; w < n_qubits_; ++w) {
                e[w] += ((k >> w) & 1U) ? -p : p;
            }
        }
        return e;
    }

    std::vector<double> probabilities() const {
        std::vector<double> p(amps_.size());
        std::transform(amps_.begin(), amps_.end(), p.begin(), [](const complex &a) { return std::norm(a); });
        return p;
    }

  private:
    void check_wire(std::size_t wire) const {
        if (wire >= n_qubits_) throw std::out_of_range("wire index out of range");
    }

    void apply_local(const Gate &g, const Mat2 &m) {
        if (g.arity() == 1) {
            apply_single(g.wires[0], m);
            return;
        }
        if (g.kind == GateKind::CZ) {
            check_wire(g.wires[0]);
            check_wire(g.wires[1]);
            if (g.wires[0] == g.wires[1]) throw std::invalid_argument("two-qubit gate needs distinct wires");
            const std::size_t both = (std::size_t{1} << g.wires[0]) | (std::size_t{1} << g.wires[1]);
            for (std::size_t k = 0; k < amps_.size(); ++k) {
                if ((k & both) == both) amps_[k] = -amps_[k];
            }
            return;
        }
        apply_controlled(g.wires[0], g.wires[1], m);
    }

    std::size_t n_qubits_;
    std::vector<complex> amps_;
};

inline StateVector apply_gate(StateVector state, const Gate &gate) {
    state.apply(gate);
    return state;
}

inline double expectation_z(const StateVector &state, std::size_t wire) { return state.expectation_z(wire); }

/**
 * Draws basis states with probability |amp|^2 by inverse-CDF lookup.
 * The table is built once, so repeated draws from the same state are cheap.
 */
class BasisSampler {
  public:
    explicit BasisSampler(const StateVector &state) : width_(state.n_qubits()), cdf_(state.dim()) {
        double acc = 0.0;
        const auto amps = state.amplitudes();
        for (std::size_t k = 0; k < amps.size(); ++k) {
            acc += std::norm(amps[k]);
            cdf_[k] = acc;
        }
    }

    Bitstring draw(Rng &rng) const {
        const double u = rng.uniform() * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
        if (k >= cdf_.size()) k = cdf_.size() - 1;
        return {static_cast<std::uint64_t>(k), width_};
    }

  private:
    std::size_t width_;
    std::vector<double> cdf_;
};

inline std::vector<Bitstring> sample_bitstrings(const StateVector &state, std::size_t shots, std::uint64_t seed) {
    if (shots == 0) throw std::invalid_argument("shots must be >= 1");
    const BasisSampler sampler(state);
    Rng rng(seed);
    std::vector<Bitstring> out;
    out.reserve(shots);
    for (std::size_t i = 0; i < shots; ++i) out.push_back(sampler.draw(rng));
    return out;
}

} // namespace edgevqc
