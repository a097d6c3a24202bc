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
 * Circuit construction: dual angle encoding followed by layered rings of
 * two-qubit blocks on W = K(K-1)/2 wires.
 */
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgevqc/statevec.hpp"

namespace edgevqc {

enum class BlockKind : std::uint8_t { CNN7, CNN8, SO4, SU4, SEL_X, SEL_Z };

inline constexpr std::array<BlockKind, 6> kAllBlocks{BlockKind::CNN7, BlockKind::CNN8, BlockKind::SO4,
                                                     BlockKind::SU4,  BlockKind::SEL_X, BlockKind::SEL_Z};

/// Trainable parameters per block placement; for SEL_* per wire per layer.
constexpr std::size_t params_per_block(BlockKind b) noexcept {
    switch (b) {
    case BlockKind::CNN7:
    case BlockKind::CNN8:
        return 10;
    case BlockKind::SO4:
        return 6;
    case BlockKind::SU4:
        return 15;
    case BlockKind::SEL_X:
    case BlockKind::SEL_Z:
        return 3;
    }
    return 0;
}

constexpr bool is_strongly_entangling(BlockKind b) noexcept {
    return b == BlockKind::SEL_X || b == BlockKind::SEL_Z;
}

inline std::string to_string(BlockKind b) {
    switch (b) {
    case BlockKind::CNN7: return "CNN7";
    case BlockKind::CNN8: return "CNN8";
    case BlockKind::SO4: return "SO4";
    case BlockKind::SU4: return "SU4";
    case BlockKind::SEL_X: return "SEL_X";
    case BlockKind::SEL_Z: return "SEL_Z";
    }
    return "?";
}

inline BlockKind parse_block(std::string_view name) {
    for (BlockKind b : kAllBlocks) {
        if (name == to_string(b)) return b;
    }
    throw std::invalid_argument("unknown block kind: " + std::string(name));
}

constexpr std::size_t wires_for_classes(std::size_t k_classes) noexcept { return k_classes * (k_classes - 1) / 2; }

using WirePair = std::pair<std::size_t, std::size_t>;

struct RingLayout {
    std::vector<WirePair> even;
    std::vector<WirePair> odd;

    std::size_t placements() const noexcept { return even.size() + odd.size(); }
};

/**
 * Neighbour pairs (w, w+1 mod W) split into two alternating rings.
 *
 * Even ring: w even, skipping a pair whose wire is already used in the ring.
 * Odd ring: w odd. For odd W the closing pair (W-1, 0) cannot join the even
 * ring, so it is appended to the odd ring; every cycle edge appears once.
 */
inline RingLayout ring_layout(std::size_t n_wires) {
    if (n_wires < 2) throw std::invalid_argument("ring needs at least 2 wires");
    RingLayout r;
    std::vector<bool> used(n_wires, false);
    for (std::size_t w = 0; w < n_wires; w += 2) {
        const std::size_t a = w, b = (w + 1) % n_wires;
        if (used[a] || used[b]) continue;
        used[a] = used[b] = true;
        r.even.emplace_back(a, b);
    }
    for (std::size_t w = 1; w < n_wires; w += 2) {
        r.odd.emplace_back(w, (w + 1) % n_wires);
    }
    if (n_wires % 2 == 1 && n_wires > 2) r.odd.emplace_back(n_wires - 1, 0);
    return r;
}

inline std::size_t parameter_count(BlockKind block, std::size_t n_wires, std::size_t n_layers) {
    if (is_strongly_entangling(block)) return n_layers * n_wires * params_per_block(block);
    return n_layers * ring_layout(n_wires).placements() * params_per_block(block);
}

/// Ansatz description plus its flat parameter vector.
struct CircuitSpec {
    std::size_t k_classes{3};
    std::size_t n_wires{3};
    BlockKind block{BlockKind::CNN7};
    std::size_t n_layers{4};
    std::vector<double> theta;

    /// Spec for K classes with zero-initialized parameters.
    static CircuitSpec make(std::size_t k_classes, BlockKind block, std::size_t n_layers = 4) {
        if (k_classes < 3) throw std::invalid_argument("need K >= 3 classes");
        CircuitSpec s{k_classes, wires_for_classes(k_classes), block, n_layers, {}};
        s.theta.assign(s.parameter_count(), 0.0);
        return s;
    }

    std::size_t parameter_count() const { return edgevqc::parameter_count(block, n_wires, n_layers); }

    void validate() const {
        if (k_classes < 3) throw std::invalid_argument("need K >= 3 classes");
        if (n_wires != wires_for_classes(k_classes)) throw std::invalid_argument("n_wires must equal K(K-1)/2");
        if (theta.size() != parameter_count()) throw std::invalid_argument("theta length does not match the ansatz");
    }
};

namespace detail {

class BlockWriter {
  public:
    BlockWriter(std::vector<Gate> &out, std::span<const double> theta) : out_(out), theta_(theta) {}

    void rot(GateKind kind, std::size_t w) { push(Gate{kind, {w, 0}, {}}, 1); }
    void ctrl_rot(GateKind kind, std::size_t c, std::size_t t) { push(Gate{kind, {c, t}, {}}, 1); }
    void u3(std::size_t w) { push(Gate{GateKind::U3, {w, 0}, {}}, 3); }
    void fixed(GateKind kind, std::size_t c, std::size_t t) { out_.push_back(Gate{kind, {c, t}, {}}); }

    std::size_t consumed() const noexcept { return next_; }

  private:
    void push(Gate g, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            g.params[i] = theta_[next_];
            g.theta_index[i] = static_cast<std::int32_t>(next_);
            ++next_;
        }
        out_.push_back(g);
    }

    std::vector<Gate> &out_;
    std::span<const double> theta_;
    std::size_t next_{0};
};

// Two-qubit block sequences from the quantum-CNN literature (a, b) = (first, second wire).
inline void write_block(BlockWriter &bw, BlockKind block, std::size_t a, std::size_t b) {
    switch (block) {
    case BlockKind::CNN7:
    case BlockKind::CNN8: {
        const GateKind c = block == BlockKind::CNN7 ? GateKind::CRZ : GateKind::CRX;
        bw.rot(GateKind::RX, a);
        bw.rot(GateKind::RX, b);
        bw.rot(GateKind::RZ, a);
        bw.rot(GateKind::RZ, b);
        bw.ctrl_rot(c, b, a);
        bw.ctrl_rot(c, a, b);
        bw.rot(GateKind::RX, a);
        bw.rot(GateKind::RX, b);
        bw.rot(GateKind::RZ, a);
        bw.rot(GateKind::RZ, b);
        return;
    }
    case BlockKind::SO4:
        bw.rot(GateKind::RY, a);
        bw.rot(GateKind::RY, b);
        bw.fixed(GateKind::CNOT, a, b);
        bw.rot(GateKind::RY, a);
        bw.rot(GateKind::RY, b);
        bw.fixed(GateKind::CNOT, a, b);
        bw.rot(GateKind::RY, a);
        bw.rot(GateKind::RY, b);
        return;
    case BlockKind::SU4:
        bw.u3(a);
        bw.u3(b);
        bw.fixed(GateKind::CNOT, a, b);
        bw.rot(GateKind::RY, a);
        bw.rot(GateKind::RZ, b);
        bw.fixed(GateKind::CNOT, b, a);
        bw.rot(GateKind::RY, a);
        bw.fixed(GateKind::CNOT, a, b);
        bw.u3(a);
        bw.u3(b);
        return;
    case BlockKind::SEL_X:
    case BlockKind::SEL_Z:
        break;
    }
    throw std::invalid_argument("block has no two-qubit placement form");
}

} // namespace detail

/**
 * Full ansatz gate list with parameters bound from theta.
 *
 * Parameter slots are consumed layer by layer, even ring before odd ring,
 * ascending wire order within a ring, gate order within a block. SEL layers
 * place one U3 per wire, then a ring of CNOT (SEL_X) or CZ (SEL_Z) on
 * (w, w+1 mod W).
 */
inline std::vector<Gate> build_ring(BlockKind block, std::size_t n_wires, std::size_t n_layers,
                                    std::span<const double> theta) {
    if (n_wires < 2) throw std::invalid_argument("ring needs at least 2 wires");
    if (theta.size() != parameter_count(block, n_wires, n_layers)) {
        throw std::invalid_argument("theta length does not match the ansatz");
    }
    std::vector<Gate> gates;
    detail::BlockWriter bw(gates, theta);
    if (is_strongly_entangling(block)) {
        const GateKind link = block == BlockKind::SEL_X ? GateKind::CNOT : GateKind::CZ;
        for (std::size_t l = 0; l < n_layers; ++l) {
            for (std::size_t w = 0; w < n_wires; ++w) bw.u3(w);
            for (std::size_t w = 0; w < n_wires; ++w) bw.fixed(link, w, (w + 1) % n_wires);
        }
    } else {
        const RingLayout ring = ring_layout(n_wires);
        for (std::size_t l = 0; l < n_layers; ++l) {
            for (const auto &[a, b] : ring.even) detail::write_block(bw, block, a, b);
            for (const auto &[a, b] : ring.odd) detail::write_block(bw, block, a, b);
        }
    }
    if (bw.consumed() != theta.size()) throw std::logic_error("parameter slots not fully consumed");
    return gates;
}

inline std::vector<Gate> build_ring(const CircuitSpec &spec) {
    spec.validate();
    return build_ring(spec.block, spec.n_wires, spec.n_layers, spec.theta);
}

/**
 * Rewrites U3 as RZ(lambda), RY(theta), RZ(phi) in application order.
 * The result differs from the original by a global phase only, and every
 * parameterized gate in it has a single generator.
 */
inline std::vector<Gate> lower_to_primitives(std::span<const Gate> gates) {
    std::vector<Gate> out;
    out.reserve(gates.size());
    for (const Gate &g : gates) {
        if (g.kind != GateKind::U3) {
            out.push_back(g);
            continue;
        }
        const std::size_t w = g.wires[0];
        Gate rz_l = Gate::rz(w, g.params[2]);
        rz_l.theta_index[0] = g.theta_index[2];
        Gate ry_t = Gate::ry(w, g.params[0]);
        ry_t.theta_index[0] = g.theta_index[0];
        Gate rz_p = Gate::rz(w, g.params[1]);
        rz_p.theta_index[0] = g.theta_index[1];
        out.push_back(rz_l);
        out.push_back(ry_t);
        out.push_back(rz_p);
    }
    return out;
}

/// Dual angle encoding: RX(features[w]) then RY(features[W + w]) on each wire w.
inline StateVector encode_input(std::span<const double> features, std::size_t n_wires) {
    if (features.size() != 2 * n_wires) throw std::invalid_argument("encoding needs 2W features");
    for (double f : features) {
        if (!(f >= 0.0 && f <= std::numbers::pi)) throw std::invalid_argument("encoded feature outside [0, pi]");
    }
    StateVector sv(n_wires);
    for (std::size_t w = 0; w < n_wires; ++w) {
        sv.apply(Gate::rx(w, features[w]));
        sv.apply(Gate::ry(w, features[n_wires + w]));
    }
    return sv;
}

inline StateVector run_circuit(std::span<const Gate> gates, std::span<const double> features, std::size_t n_wires) {
    StateVector sv = encode_input(features, n_wires);
    for (const Gate &g : gates) sv.apply(g);
    return sv;
}

/// Exact <Z_w> on every wire after encoding and ansatz.
inline std::vector<double> forward(const CircuitSpec &spec, std::span<const double> features) {
    const std::vector<Gate> gates = build_ring(spec);
    return run_circuit(gates, features, spec.n_wires).expectations_z();
}

} // namespace edgevqc
