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
 * Maps per-wire <Z> values to class activations and back-propagates the MSE
 * loss to d loss / d<Z>.
 *
 * Edge: every wire is tempered and fed to the simplex codec.
 * Vertex: wires 0..K-1 are tempered and used directly as class activations.
 */
#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgevqc/simplex.hpp"
#include "edgevqc/tempering.hpp"

namespace edgevqc {

class Readout {
  public:
    Readout(Codec codec, std::size_t k_classes, Tempering tempering, SimplexScale scale = SimplexScale::UnitRadius)
        : codec_(codec), geom_(build_simplex(k_classes, scale)), tempering_(tempering) {}

    Codec codec() const noexcept { return codec_; }
    std::size_t k_classes() const noexcept { return geom_.k_classes(); }
    std::size_t n_wires() const noexcept { return geom_.n_edges(); }
    const SimplexGeometry &geometry() const noexcept { return geom_; }
    const Tempering &tempering() const noexcept { return tempering_; }

    std::vector<std::size_t> measured_wires() const {
        std::vector<std::size_t> w(codec_ == Codec::Edge ? n_wires() : k_classes());
        std::iota(w.begin(), w.end(), std::size_t{0});
        return w;
    }

    /// Edge: simplex logits p. Vertex: tempered <Z> of wires 0..K-1.
    std::vector<double> activations(std::span<const double> z) const {
        check(z);
        const std::vector<double> t = tempered(z);
        if (codec_ == Codec::Edge) return edge_logits(geom_, t);
        return t;
    }

    /// sum_i (a_i - y_i)^2 / K for one sample.
    double sample_loss(std::span<const double> z, std::size_t label) const {
        const std::vector<double> a = activations(z);
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double r = a[i] - (i == label ? 1.0 : 0.0);
            sum += r * r;
        }
        return sum / static_cast<double>(a.size());
    }

    /// d(scale * sample_loss)/dz, one entry per wire; unmeasured wires get 0.
    std::vector<double> loss_grad_z(std::span<const double> z, std::size_t label, double scale = 1.0) const {
        check(z);
        if (label >= k_classes()) throw std::out_of_range("label out of range");
        const std::size_t k = k_classes();
        const std::vector<double> t = tempered(z);
        std::vector<double> grad(z.size(), 0.0);
        const double norm = 2.0 * scale / static_cast<double>(k);

        if (codec_ == Codec::Edge) {
            const std::vector<double> p = edge_logits(geom_, t);
            std::vector<double> gp(k);
            for (std::size_t i = 0; i < k; ++i) gp[i] = norm * (p[i] - (i == label ? 1.0 : 0.0));
            const std::vector<double> gt = edge_logits_vjp(geom_, t, gp);
            for (std::size_t w = 0; w < gt.size(); ++w) grad[w] = gt[w] * tempering_.derivative(z[w]);
        } else {
            for (std::size_t i = 0; i < k; ++i) {
                grad[i] = norm * (t[i] - (i == label ? 1.0 : 0.0)) * tempering_.derivative(z[i]);
            }
        }
        return grad;
    }

    DecodeResult decode_outcome(const Bitstring &bits) const { return decode(codec_, geom_, bits); }

  private:
    void check(std::span<const double> z) const {
        if (z.size() != n_wires()) throw std::invalid_argument("expected one <Z> per wire");
    }

    std::vector<double> tempered(std::span<const double> z) const {
        const std::size_t n = codec_ == Codec::Edge ? n_wires() : k_classes();
        std::vector<double> t(n);
        for (std::size_t w = 0; w < n; ++w) t[w] = tempering_(z[w]);
        return t;
    }

    Codec codec_;
    SimplexGeometry geom_;
    Tempering tempering_;
};

} // namespace edgevqc
