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
 * Mini-batch training of a ring ansatz against the MSE loss of a readout.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgevqc/gradient.hpp"
#include "edgevqc/optim.hpp"
#include "edgevqc/rng.hpp"

namespace edgevqc {

/// Encoded samples: 2W features in [0, pi] and a class index in [0, K).
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;
    std::size_t k_classes{0};

    std::size_t size() const noexcept { return labels.size(); }

    void validate(std::size_t n_wires) const {
        if (features.size() != labels.size()) throw std::invalid_argument("feature and label counts differ");
        for (const auto &f : features) {
            if (f.size() != 2 * n_wires) throw std::invalid_argument("each sample needs 2W features");
        }
        for (std::size_t y : labels) {
            if (y >= k_classes) throw std::invalid_argument("label out of range");
        }
    }
};

/// Uniform on [0, 2 pi), one draw per parameter slot in order.
inline std::vector<double> init_params(const CircuitSpec &spec, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1417));
    std::vector<double> theta(spec.parameter_count());
    for (double &t : theta) t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return theta;
}

struct TrainResult {
    CircuitSpec spec;
    std::vector<double> grad_totals; // sum over steps of |dL/d theta_p|
    std::vector<double> step_loss;
    std::size_t steps{0};
};

struct TrainStep {
    std::size_t step;
    std::size_t epoch;
    double loss;
    double lr;
};

/**
 * Runs epochs x ceil(N / batch_size) optimizer steps. Sample order is
 * reshuffled each epoch from the config seed; theta is taken from spec as is
 * (see init_params).
 */
inline TrainResult train(CircuitSpec spec, const Dataset &data, const Readout &readout, const OptimizerConfig &opt,
                         GradientMethod method = GradientMethod::Adjoint,
                         const std::function<void(const TrainStep &)> &on_step = {}) {
    opt.validate();
    spec.validate();
    data.validate(spec.n_wires);
    if (data.size() == 0) throw std::invalid_argument("empty dataset");
    if (data.k_classes != readout.k_classes()) throw std::invalid_argument("dataset and readout disagree on K");

    const std::size_t n = data.size();
    const std::size_t per_epoch = (n + opt.batch_size - 1) / opt.batch_size;
    const std::size_t total = per_epoch * opt.epochs;

    TrainResult out;
    out.grad_totals.assign(spec.parameter_count(), 0.0);
    out.step_loss.reserve(total);
    Optimizer optimizer(opt.kind, spec.parameter_count());
    Rng shuffler(derive_seed(opt.seed, 0x5u));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<std::vector<double>> xs;
    std::vector<std::size_t> ys;
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffler.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += opt.batch_size) {
            const std::size_t end = std::min(n, start + opt.batch_size);
            xs.clear();
            ys.clear();
            for (std::size_t i = start; i < end; ++i) {
                xs.push_back(data.features[order[i]]);
                ys.push_back(data.labels[order[i]]);
            }
            const LossGradient lg = loss_gradient(spec, xs, ys, readout, method);
            if (!std::isfinite(lg.loss)) throw std::runtime_error("non-finite training loss");
            for (std::size_t q = 0; q < lg.grad.size(); ++q) out.grad_totals[q] += std::abs(lg.grad[q]);
            const double lr = learning_rate(opt.scheduler, opt.lr0, step, total);
            optimizer.step(spec.theta, lg.grad, lr);
            out.step_loss.push_back(lg.loss);
            if (on_step) on_step({step, epoch, lg.loss, lr});
            ++step;
        }
    }
    out.steps = step;
    out.spec = std::move(spec);
    return out;
}

} // namespace edgevqc
