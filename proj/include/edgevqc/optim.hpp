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
 * Adam / SGD and step-indexed learning-rate schedules.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgevqc {

enum class OptimizerKind { Adam, SGD };
enum class Scheduler { Exponential, Cosine, Piecewise, Constant };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

inline std::string to_string(Scheduler s) {
    switch (s) {
    case Scheduler::Exponential: return "exponential";
    case Scheduler::Cosine: return "cosine";
    case Scheduler::Piecewise: return "piecewise";
    case Scheduler::Constant: return "constant";
    }
    return "?";
}

inline OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "sgd") return OptimizerKind::SGD;
    throw std::invalid_argument("unknown optimizer: " + std::string(s));
}

inline Scheduler parse_scheduler(std::string_view s) {
    for (Scheduler k : {Scheduler::Exponential, Scheduler::Cosine, Scheduler::Piecewise, Scheduler::Constant}) {
        if (s == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown scheduler: " + std::string(s));
}

struct OptimizerConfig {
    OptimizerKind kind{OptimizerKind::Adam};
    double lr0{0.01};
    Scheduler scheduler{Scheduler::Exponential};
    std::size_t batch_size{32};
    std::size_t epochs{6};
    std::uint64_t seed{0};

    void validate() const {
        if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw std::invalid_argument("lr0 must be positive");
        if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
        if (epochs == 0) throw std::invalid_argument("epochs must be >= 1");
    }
};

/**
 * Learning rate at step t of total_steps.
 *   exponential: lr0 * 0.9^(t / (total/10)), continuous in t
 *   cosine:      lr0 * (1 + cos(pi t / total)) / 2
 *   piecewise:   lr0 * {1, 0.1, 0.01} over equal thirds
 */
inline double learning_rate(Scheduler s, double lr0, std::size_t t, std::size_t total_steps) {
    if (total_steps == 0) throw std::invalid_argument("total_steps must be positive");
    const double x = static_cast<double>(t) / static_cast<double>(total_steps);
    switch (s) {
    case Scheduler::Exponential:
        return lr0 * std::pow(0.9, 10.0 * x);
    case Scheduler::Cosine:
        return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    case Scheduler::Piecewise:
        if (3 * t < total_steps) return lr0;
        if (3 * t < 2 * total_steps) return lr0 * 0.1;
        return lr0 * 0.01;
    case Scheduler::Constant:
        return lr0;
    }
    throw std::invalid_argument("bad scheduler");
}

class Optimizer {
  public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    Optimizer(OptimizerKind kind, std::size_t n_params) : kind_(kind), m_(n_params, 0.0), v_(n_params, 0.0) {}

    std::size_t steps_taken() const noexcept { return t_; }

    void step(std::span<double> theta, std::span<const double> grad, double lr) {
        if (theta.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("size mismatch");
        ++t_;
        if (kind_ == OptimizerKind::SGD) {
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
            return;
        }
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
            const double mhat = m_[i] / c1, vhat = v_[i] / c2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
        }
    }

  private:
    OptimizerKind kind_;
    std::vector<double> m_, v_;
    std::size_t t_{0};
};

} // namespace edgevqc
