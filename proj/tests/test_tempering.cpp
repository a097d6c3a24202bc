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

#include <gtest/gtest.h>

#include <cmath>

#include "edgevqc/tempering.hpp"

namespace edgevqc {
namespace {

constexpr TemperFn kCurved[] = {TemperFn::Logistic, TemperFn::Erf, TemperFn::Gudermannian};

TEST(Tempering, EdgeSlopeEqualsMinGrad) {
    for (TemperFn f : kCurved) {
        for (double g : {0.01, 0.001}) {
            const Tempering t(f, g);
            EXPECT_NEAR(std::abs(t.derivative(1.0)), g, 1e-6) << to_string(f);
            EXPECT_NEAR(std::abs(t.derivative(-1.0)), g, 1e-6) << to_string(f);
            EXPECT_NEAR(std::abs(temper_grad(t, 1.0)), g, 1e-12);
        }
    }
}

TEST(Tempering, CentreIsExactlyHalf) {
    for (TemperFn f : kCurved) {
        EXPECT_EQ(Tempering(f, 0.01)(0.0), 0.5);
        EXPECT_EQ(Tempering(f, 0.001)(0.0), 0.5);
    }
    EXPECT_EQ(Tempering()(0.0), 0.5);
}

TEST(Tempering, ErfScaleMatchesClosedForm) {
    // s phi(s) = 0.01 with phi the standard normal density; independent Newton solve.
    double s = 3.0;
    for (int i = 0; i < 50; ++i) {
        const double phi = std::exp(-0.5 * s * s) / std::sqrt(2 * M_PI);
        const double f = s * phi - 0.01;
        const double df = phi * (1 - s * s);
        s -= f / df;
    }
    EXPECT_NEAR(Tempering(TemperFn::Erf, 0.01).scale(), s, 1e-9);
    EXPECT_NEAR(s, 3.1, 0.05);
}

TEST(Tempering, LogisticScaleMatchesClosedForm) {
    double s = 6.0;
    for (int i = 0; i < 60; ++i) {
        const double e = std::exp(-s);
        const double f = s * e / ((1 + e) * (1 + e)) - 0.01;
        const double h = 1e-7;
        const double e2 = std::exp(-(s + h));
        const double df = ((s + h) * e2 / ((1 + e2) * (1 + e2)) - 0.01 - f) / h;
        s -= f / df;
    }
    EXPECT_NEAR(Tempering(TemperFn::Logistic, 0.01).scale(), s, 1e-6);
}

TEST(Tempering, MonotoneDecreasingAndSymmetric) {
    for (TemperFn f : {TemperFn::Logistic, TemperFn::Erf, TemperFn::Gudermannian, TemperFn::Linear}) {
        const Tempering t = f == TemperFn::Linear ? Tempering() : Tempering(f, 0.01);
        double prev = 2.0;
        for (double z = -1.0; z <= 1.0; z += 0.01) {
            const double v = t(z);
            EXPECT_LT(v, prev);
            EXPECT_GT(v, 0.0 - 1e-15);
            EXPECT_LT(v, 1.0 + 1e-15);
            EXPECT_NEAR(t(z) + t(-z), 1.0, 1e-15);
            EXPECT_LT(t.derivative(z), 0.0);
            prev = v;
        }
    }
}

TEST(Tempering, DerivativeMatchesFiniteDifference) {
    for (TemperFn f : kCurved) {
        const Tempering t(f, 0.001);
        for (double z = -0.95; z <= 0.95; z += 0.05) {
            const double h = 1e-6;
            EXPECT_NEAR(t.derivative(z), (t(z + h) - t(z - h)) / (2 * h), 1e-6 * std::max(1.0, t.scale()));
        }
    }
}

TEST(Tempering, SlopeLargestAtCentre) {
    for (TemperFn f : kCurved) {
        const Tempering t(f, 0.01);
        for (double z = 0.05; z <= 1.0; z += 0.05) EXPECT_LT(std::abs(t.derivative(z)), std::abs(t.derivative(0.0)));
    }
}

TEST(Tempering, LinearMap) {
    const Tempering lin;
    EXPECT_DOUBLE_EQ(lin(1.0), 0.0);
    EXPECT_DOUBLE_EQ(lin(-1.0), 1.0);
    EXPECT_DOUBLE_EQ(lin.derivative(0.3), -0.5);
}

TEST(Tempering, RejectsBadInput) {
    EXPECT_THROW(Tempering(TemperFn::Erf, 0.0), std::invalid_argument);
    EXPECT_THROW(Tempering(TemperFn::Erf, 0.5), std::invalid_argument);
    EXPECT_THROW(Tempering(TemperFn::Logistic, 0.01)(1.5), std::domain_error);
    EXPECT_NO_THROW(Tempering(TemperFn::Logistic, 0.01)(1.0 + 1e-12));
    EXPECT_THROW(parse_temper_fn("tanh"), std::invalid_argument);
    EXPECT_EQ(parse_temper_fn("gudermannian"), TemperFn::Gudermannian);
}

} // namespace
} // namespace edgevqc
