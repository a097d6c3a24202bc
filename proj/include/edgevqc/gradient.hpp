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
 * Circuit derivatives and the end-to-end loss gradient.
 *
 * Two paths compute d<Z_w>/d theta:
 *   - parameter shift (reference): RX/RY/RZ and the U3 components use the
 *     two-term rule; CRX/CRZ generators have spectrum {0, +-1/2} and need the
 *     four-term rule.
 *   - adjoint (training fast path): one forward and one backward sweep per
 *     observable.
 * Both agree to ~1e-12.
 */
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgevqc/ansatz.hpp"
#include "edgevqc/readout.hpp"
#include "edgevqc/statevec.hpp"

namespace edgevqc {

enum class GradientMethod { ParameterShift, Adjoint };

namespace detail {

/// <lambda| G |psi> for the generator G of a single-parameter primitive.
inline complex generator_overlap(std::span<const complex> lambda, std::span<const complex> psi, const Gate &g) {
    using namespace std::complex_literals;
    const bool controlled = g.kind == GateKind::CRX || g.kind == GateKind::CRZ;
    const std::size_t target = controlled ? g.wires[1] : g.wires[0];
    const std::size_t tmask = std::size_t{1} << target;
    const std::size_t cmask = controlled ? (std::size_t{1} << g.wires[0]) : 0;
    complex acc = 0.0;
    for (std::size_t i0 = 0; i0 < psi.size(); ++i0) {
        if ((i0 & tmask) != 0 || (i0 & cmask) != cmask) continue;
        const std::size_t i1 = i0 | tmask;
        const complex p0 = psi[i0], p1 = psi[i1];
        complex g0, g1;
        switch (g.kind) {
        case GateKind::RX:
        case GateKind::CRX:
            g0 = p1;
            g1 = p0;
            break;
        case GateKind::RY:
            g0 = -1i * p1;
            g1 = 1i * p0;
            break;
        case GateKind::RZ:
        case GateKind::CRZ:
            g0 = p0;
            g1 = -p1;
            break;
        default:
            throw std::invalid_argument("gate has no single generator");
        }
        acc += std::conj(lambda[i0]) * g0 + std::conj(lambda[i1]) * g1;
    }
    return 0.5 * acc;
}

inline void check_primitive(const Gate &g) {
    if (g.kind == GateKind::U3) throw std::invalid_argument("lower U3 before differentiating");
}

inline bool is_controlled_rotation(GateKind k) { return k == GateKind::CRX || k == GateKind::CRZ; }

} // namespace detail

/**
 * d/d theta of sum_w coeffs[w] <Z_w> over a lowered gate list. Result has
 * n_params entries indexed by theta_index.
 */
inline std::vector<double> observable_gradient(std::span<const Gate> lowered, std::span<const double> features,
                                               std::size_t n_wires, std::span<const double> coeffs,
                                               std::size_t n_params, GradientMethod method) {
    if (coeffs.size() != n_wires) throw std::invalid_argument("one coefficient per wire expected");
    std::vector<double> grad(n_params, 0.0);
    auto slot = [&](const Gate &g) -> std::size_t {
        const auto idx = static_cast<std::size_t>(g.theta_index[0]);
        if (idx >= n_params) throw std::out_of_range("theta index out of range");
        return idx;
    };

    if (method == GradientMethod::Adjoint) {
        StateVector psi = run_circuit(lowered, features, n_wires);
        StateVector lambda = psi;
        auto amps = lambda.amplitudes();
        for (std::size_t k = 0; k < amps.size(); ++k) {
            double o = 0.0;
            for (std::size_t w = 0; w < n_wires; ++w) o += ((k >> w) & 1U) ? -coeffs[w] : coeffs[w];
            amps[k] *= o;
        }
        for (std::size_t r = lowered.size(); r-- > 0;) {
            const Gate &g = lowered[r];
            detail::check_primitive(g);
            if (g.theta_index[0] >= 0) {
                grad[slot(g)] += 2.0 * detail::generator_overlap(lambda.amplitudes(), psi.amplitudes(), g).imag();
            }
            psi.apply_adjoint(g);
            lambda.apply_adjoint(g);
        }
        return grad;
    }

    auto observe = [&](const StateVector &s) {
        const std::vector<double> z = s.expectations_z();
        double f = 0.0;
        for (std::size_t w = 0; w < n_wires; ++w) f += coeffs[w] * z[w];
        return f;
    };
    auto shifted = [&](const StateVector &prefix, std::size_t r, double delta) {
        StateVector s = prefix;
        Gate g = lowered[r];
        g.params[0] += delta;
        s.apply(g);
        for (std::size_t q = r + 1; q < lowered.size(); ++q) s.apply(lowered[q]);
        return observe(s);
    };

    constexpr double half_pi = std::numbers::pi / 2.0;
    const double c_near = (std::numbers::sqrt2 + 1.0) / (4.0 * std::numbers::sqrt2);
    const double c_far = (std::numbers::sqrt2 - 1.0) / (4.0 * std::numbers::sqrt2);

    StateVector prefix = encode_input(features, n_wires);
    for (std::size_t r = 0; r < lowered.size(); ++r) {
        const Gate &g = lowered[r];
        detail::check_primitive(g);
        if (g.theta_index[0] >= 0) {
            double d;
            if (detail::is_controlled_rotation(g.kind)) {
                d = c_near * (shifted(prefix, r, half_pi) - shifted(prefix, r, -half_pi)) -
                    c_far * (shifted(prefix, r, 3.0 * half_pi) - shifted(prefix, r, -3.0 * half_pi));
            } else {
                d = 0.5 * (shifted(prefix, r, half_pi) - shifted(prefix, r, -half_pi));
            }
            grad[slot(g)] += d;
        }
        prefix.apply(g);
    }
    return grad;
}

/// W x P matrix of d<Z_w>/d theta_p.
inline Eigen::MatrixXd expectation_jacobian(const CircuitSpec &spec, std::span<const double> features,
                                            GradientMethod method = GradientMethod::ParameterShift) {
    const std::vector<Gate> lowered = lower_to_primitives(build_ring(spec));
    const std::size_t p = spec.parameter_count();
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(spec.n_wires), static_cast<Eigen::Index>(p));
    std::vector<double> coeffs(spec.n_wires, 0.0);
    for (std::size_t w = 0; w < spec.n_wires; ++w) {
        coeffs.assign(spec.n_wires, 0.0);
        coeffs[w] = 1.0;
        const std::vector<double> row = observable_gradient(lowered, features, spec.n_wires, coeffs, p, method);
        for (std::size_t q = 0; q < p; ++q) jac(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(q)) = row[q];
    }
    return jac;
}

struct LossGradient {
    double loss{0.0};
    std::vector<double> grad;
};

inline void check_batch(const CircuitSpec &spec, std::span<const std::vector<double>> inputs,
                        std::span<const std::size_t> labels, const Readout &readout) {
    spec.validate();
    if (inputs.empty() || inputs.size() != labels.size()) throw std::invalid_argument("batch shape mismatch");
    if (readout.n_wires() != spec.n_wires) throw std::invalid_argument("readout and circuit disagree on W");
}

/// Batch loss sum_b sum_i (a_i - y_i)^2 / (B K).
inline double batch_loss(const CircuitSpec &spec, std::span<const std::vector<double>> inputs,
                         std::span<const std::size_t> labels, const Readout &readout) {
    check_batch(spec, inputs, labels, readout);
    const std::vector<Gate> gates = build_ring(spec);
    double loss = 0.0;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        const std::vector<double> z = run_circuit(gates, inputs[b], spec.n_wires).expectations_z();
        loss += readout.sample_loss(z, labels[b]);
    }
    return loss / static_cast<double>(inputs.size());
}

/**
 * Batch loss and dL/d theta. Per-sample gradients are summed in batch order,
 * so the result is bit-reproducible.
 */
inline LossGradient loss_gradient(const CircuitSpec &spec, std::span<const std::vector<double>> inputs,
                                  std::span<const std::size_t> labels, const Readout &readout,
                                  GradientMethod method = GradientMethod::Adjoint) {
    check_batch(spec, inputs, labels, readout);
    const std::vector<Gate> gates = build_ring(spec);
    const std::vector<Gate> lowered = lower_to_primitives(gates);
    const std::size_t p = spec.parameter_count();
    const double inv_b = 1.0 / static_cast<double>(inputs.size());

    LossGradient out;
    out.grad.assign(p, 0.0);
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        const std::vector<double> z = run_circuit(gates, inputs[b], spec.n_wires).expectations_z();
        out.loss += readout.sample_loss(z, labels[b]);
        const std::vector<double> gz = readout.loss_grad_z(z, labels[b], inv_b);
        const std::vector<double> g = observable_gradient(lowered, inputs[b], spec.n_wires, gz, p, method);
        for (std::size_t q = 0; q < p; ++q) out.grad[q] += g[q];
    }
    out.loss *= inv_b;
    return out;
}

/**
 * Topological backward light cone: a gate is inside when it touches a wire
 * that is measured or feeds, through later gates, into a measured wire.
 * Returns one flag per parameter slot.
 */
inline std::vector<bool> backward_light_cone(std::span<const Gate> gates, std::span<const std::size_t> measured,
                                             std::size_t n_params) {
    std::size_t n_wires = 0;
    for (const Gate &g : gates) {
        for (std::size_t a = 0; a < g.arity(); ++a) n_wires = std::max(n_wires, g.wires[a] + 1);
    }
    for (std::size_t m : measured) n_wires = std::max(n_wires, m + 1);
    std::vector<bool> live(n_wires, false);
    for (std::size_t m : measured) live[m] = true;

    std::vector<bool> inside(n_params, false);
    for (std::size_t r = gates.size(); r-- > 0;) {
        const Gate &g = gates[r];
        bool touches = false;
        for (std::size_t a = 0; a < g.arity(); ++a) touches = touches || live[g.wires[a]];
        if (!touches) continue;
        for (std::size_t a = 0; a < g.arity(); ++a) live[g.wires[a]] = true;
        for (std::size_t q = 0; q < g.param_count(); ++q) {
            if (g.theta_index[q] >= 0) inside.at(static_cast<std::size_t>(g.theta_index[q])) = true;
        }
    }
    return inside;
}

/**
 * Parameters whose gradient vanishes identically for any input, for an
 * observable that is a weighted sum of Z on the measured wires.
 *
 * Sweeps the lowered gates backwards, conjugating the observable, and keeps
 * per wire the set of Pauli letters {X, Y, Z} that may occur there. A rotation
 * is dead when every component of its generator commutes with every letter
 * that can meet it. The per-wire sets over-approximate, so a dead verdict is
 * always sound. This refines backward_light_cone: parameters outside the cone
 * are dead, and so is e.g. a Z rotation right before measurement.
 */
inline std::vector<bool> structurally_dead_parameters(std::span<const Gate> gates,
                                                      std::span<const std::size_t> measured, std::size_t n_params) {
    using Letters = std::uint8_t;
    constexpr Letters X = 1, Y = 2, Z = 4, XY = X | Y, YZ = Y | Z, XZ = X | Z;
    const std::vector<Gate> lowered = lower_to_primitives(gates);
    std::size_t n_wires = 0;
    for (const Gate &g : lowered) {
        for (std::size_t a = 0; a < g.arity(); ++a) n_wires = std::max(n_wires, g.wires[a] + 1);
    }
    for (std::size_t m : measured) n_wires = std::max(n_wires, m + 1);
    std::vector<Letters> on(n_wires, 0);
    for (std::size_t m : measured) on[m] = Z;

    // letters of a single-qubit rotation about P that do not commute with P
    auto rotate = [&](std::size_t w, Letters moving) {
        if ((on[w] & moving) == 0) return false;
        on[w] |= moving;
        return true;
    };

    std::vector<bool> alive(n_params, false);
    for (std::size_t r = lowered.size(); r-- > 0;) {
        const Gate &g = lowered[r];
        const std::size_t c = g.wires[0];
        const std::size_t t = g.arity() == 2 ? g.wires[1] : c;
        bool live = false;
        switch (g.kind) {
        case GateKind::RX:
            live = rotate(c, YZ);
            break;
        case GateKind::RY:
            live = rotate(c, XZ);
            break;
        case GateKind::RZ:
            live = rotate(c, XY);
            break;
        case GateKind::CZ:
        case GateKind::CRZ: {
            // generator components Z_t and Z_c Z_t (CZ: fixed angle, same algebra)
            const bool tc = on[t] & XY, cc = on[c] & XY;
            if (tc) on[t] |= XY, on[c] |= Z;
            if (cc) on[c] |= XY, on[t] |= Z;
            live = tc || cc;
            break;
        }
        case GateKind::CRX: {
            // generator components X_t and Z_c X_t
            const bool tc = on[t] & YZ, cc = on[c] & XY;
            if (tc) on[t] |= YZ, on[c] |= Z;
            if (cc) on[c] |= XY, on[t] |= X;
            live = tc || cc;
            break;
        }
        case GateKind::CNOT: {
            // X_c -> X_c X_t, Y_c -> Y_c X_t, Z_t -> Z_c Z_t, Y_t -> Z_c Y_t
            const bool cc = on[c] & XY, tc = on[t] & YZ;
            if (cc) on[t] |= X;
            if (tc) on[c] |= Z;
            break;
        }
        case GateKind::U3:
            throw std::logic_error("U3 survived lowering");
        }
        if (live && g.theta_index[0] >= 0) alive.at(static_cast<std::size_t>(g.theta_index[0])) = true;
    }
    std::vector<bool> dead(n_params);
    for (std::size_t q = 0; q < n_params; ++q) dead[q] = !alive[q];
    return dead;
}

} // namespace edgevqc
