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
 * Tempering: a decreasing sigmoid map from <Z> in [-1, 1] to (0, 1).
 *
 * t(z) = g(-s z) where g is a CDF-shaped sigmoid and s is chosen so that
 * |t'(+-1)| equals a requested minimum gradient. t(z) reads as the probability
 * that the wire measures bit 1.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edgevqc {

enum class TemperFn { Logistic, Erf, Gudermannian, Linear };

inline std::string to_string(TemperFn f) {
    switch (f) {
    case TemperFn::Logistic: return "logistic";
    case TemperFn::Erf: return "erf";
    case TemperFn::Gudermannian: return "gudermannian";
    case TemperFn::Linear: return "linear";
    }
    return "?";
}

inline TemperFn parse_temper_fn(std::string_view s) {
    for (TemperFn f : {TemperFn::Logistic, TemperFn::Erf, TemperFn::Gudermannian, TemperFn::Linear}) {
        if (s == to_string(f)) return f;
    }
    throw std::invalid_argument("unknown tempering function: " + std::string(s));
}

namespace detail {

/// Unscaled sigmoid with range (0, 1) and g(0) = 1/2.
inline double sigmoid(TemperFn f, double u) {
    switch (f) {
    case TemperFn::Logistic:
        return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
    case TemperFn::Erf:
        return 0.5 * std::erfc(-u / std::numbers::sqrt2);
    case TemperFn::Gudermannian:
        return 2.0 * std::atan(std::tanh(0.5 * u)) / std::numbers::pi + 0.5;
    case TemperFn::Linear:
        return 0.5 + 0.5 * u;
    }
    throw std::invalid_argument("bad tempering function");
}

/// g'(u); even in u for every function.
inline double sigmoid_slope(TemperFn f, double u) {
    switch (f) {
    case TemperFn::Logistic: {
        const double e = std::exp(-std::abs(u));
        return e / ((1.0 + e) * (1.0 + e));
    }
    case TemperFn::Erf:
        return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    case TemperFn::Gudermannian:
        return 1.0 / (std::numbers::pi * std::cosh(u));
    case TemperFn::Linear:
        return 0.5;
    }
    throw std::invalid_argument("bad tempering function");
}

/// |t'(1)| as a function of the scale s.
inline double edge_slope(TemperFn f, double s) { return s * sigmoid_slope(f, s); }

/// Location of the single maximum of s * g'(s) on s > 0 (golden-section search).
inline double edge_slope_peak(TemperFn f) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.0, b = 20.0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    while (b - a > 1e-13) {
        if (edge_slope(f, c) > edge_slope(f, d)) b = d;
        else a = c;
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    return 0.5 * (a + b);
}

} // namespace detail

/**
 * Solves s * g'(s) = min_grad on the decreasing branch past the peak, by
 * bisection on (peak, 1e6]. Throws when min_grad is not below the peak value.
 */
inline double solve_scale(TemperFn f, double min_grad) {
    if (f == TemperFn::Linear) throw std::invalid_argument("linear tempering has no scale");
    if (!(min_grad > 0.0)) throw std::invalid_argument("min_grad must be positive");
    double lo = detail::edge_slope_peak(f);
    double hi = 1e6;
    if (min_grad >= detail::edge_slope(f, lo)) {
        throw std::invalid_argument("min_grad " + std::to_string(min_grad) + " is not reachable for " + to_string(f));
    }
    // edge_slope(lo) > min_grad > edge_slope(hi)
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::edge_slope(f, mid) > min_grad) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

class Tempering {
  public:
    /// Linear map (1 - z) / 2.
    Tempering() = default;

    Tempering(TemperFn fn, double min_grad) : fn_(fn), min_grad_(min_grad) {
        if (fn != TemperFn::Linear) scale_ = solve_scale(fn, min_grad);
    }

    TemperFn function() const noexcept { return fn_; }
    double min_grad() const noexcept { return min_grad_; }
    /// 0 for the linear map.
    double scale() const noexcept { return scale_; }

    double operator()(double z) const {
        z = checked(z);
        if (fn_ == TemperFn::Linear) return 0.5 * (1.0 - z);
        return detail::sigmoid(fn_, -scale_ * z);
    }

    /// dt/dz, always negative.
    double derivative(double z) const {
        z = checked(z);
        if (fn_ == TemperFn::Linear) return -0.5;
        return -scale_ * detail::sigmoid_slope(fn_, scale_ * z);
    }

  private:
    static double checked(double z) {
        constexpr double slack = 1e-9;
        if (!(z >= -1.0 - slack && z <= 1.0 + slack)) throw std::domain_error("tempering input outside [-1, 1]");
        return z < -1.0 ? -1.0 : (z > 1.0 ? 1.0 : z);
    }

    TemperFn fn_{TemperFn::Linear};
    double min_grad_{0.0};
    double scale_{0.0};
};

inline double temper(const Tempering &cfg, double z) { return cfg(z); }
inline double temper_grad(const Tempering &cfg, double z) { return cfg.derivative(z); }

} // namespace edgevqc
