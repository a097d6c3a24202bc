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
#include <memory>

#include "edgevqc/metrics.hpp"
#include "edgevqc/train.hpp"

namespace edgevqc {
namespace {

// Replays a fixed list of decoded classes per t-sample, cycling if exhausted.
ShotSource replay(std::vector<std::vector<int>> streams) {
    auto data = std::make_shared<std::vector<std::vector<int>>>(std::move(streams));
    return [data](std::size_t t) -> ShotStream {
        auto pos = std::make_shared<std::size_t>(0);
        return [data, t, pos]() {
            const auto &s = (*data)[t];
            return DecodeResult{s[(*pos)++ % s.size()]};
        };
    };
}

ShotSource constant_class(int c) {
    return [c](std::size_t) -> ShotStream { return [c]() { return DecodeResult{c}; }; };
}

ShotSource uniform_valid(std::size_t k, std::uint64_t seed) {
    return [k, seed](std::size_t t) -> ShotStream {
        auto rng = std::make_shared<Rng>(derive_seed(seed, t));
        return [k, rng]() { return DecodeResult{static_cast<int>(rng->below(k))}; };
    };
}

TEST(Confusion, CountsAndInvalidColumn) {
    ConfusionMatrix m(3);
    m.add(0, {0});
    m.add(0, {});
    m.add(2, {1}, 4);
    EXPECT_EQ(m.at(0, 3), 1U);
    EXPECT_EQ(m.at(2, 1), 4U);
    EXPECT_EQ(m.trace(), 1U);
    EXPECT_EQ(m.total(), 6U);
    EXPECT_EQ(m.row_total(2), 4U);
    EXPECT_THROW(m.add(3, {0}), std::out_of_range);
}

TEST(Plurality, TieRules) {
    const std::vector<std::uint64_t> c = {4, 4, 1};
    EXPECT_EQ(plurality(c, 4).class_id, kInvalidClass);
    EXPECT_EQ(plurality(c, 3).class_id, 0);
    const std::vector<std::uint64_t> d = {1, 5, 5};
    EXPECT_EQ(plurality(d, 0).class_id, 1);
}

TEST(EvalConstant, PerfectDecoder) {
    const std::vector<std::size_t> labels = {0, 1, 2, 1};
    const ShotSource perfect = [&](std::size_t t) -> ShotStream {
        const int y = static_cast<int>(labels[t]);
        return [y]() { return DecodeResult{y}; };
    };
    const ConstantRateReport r = eval_constant(perfect, labels, 3, 100);
    EXPECT_DOUBLE_EQ(r.micro, 1.0);
    EXPECT_DOUBLE_EQ(r.macro, 1.0);
    for (std::size_t row = 0; row < 3; ++row) EXPECT_EQ(r.plurality.at(row, 3), 0U);
    EXPECT_EQ(r.plurality.total(), labels.size());
    EXPECT_EQ(r.per_sample.total(), labels.size() * 100);
}

TEST(EvalConstant, AlwaysInvalid) {
    const std::vector<std::size_t> labels = {0, 1, 2};
    const ConstantRateReport r = eval_constant(constant_class(kInvalidClass), labels, 3, 7);
    EXPECT_EQ(r.micro, 0.0);
    EXPECT_EQ(r.macro, 0.0);
    EXPECT_EQ(r.plurality.at(1, 3), 1U);
}

TEST(EvalConstant, HandCountedFixture) {
    // t0 (true 0): 0,0,1,-1,0  -> plurality 0; t1 (true 2): 1,-1,2,1,-1 -> tie 1 vs invalid -> invalid
    const std::vector<std::size_t> labels = {0, 2};
    const ShotSource src = replay({{0, 0, 1, -1, 0}, {1, -1, 2, 1, -1}});
    const ConstantRateReport r = eval_constant(src, labels, 3, 5);
    EXPECT_EQ(r.plurality.at(0, 0), 1U);
    EXPECT_EQ(r.plurality.at(2, 3), 1U);
    EXPECT_EQ(r.plurality.total(), 2U);
    EXPECT_DOUBLE_EQ(r.micro, 0.5);
    EXPECT_EQ(r.per_sample.at(0, 0), 3U);
    EXPECT_EQ(r.per_sample.at(0, 1), 1U);
    EXPECT_EQ(r.per_sample.at(0, 3), 1U);
    EXPECT_EQ(r.per_sample.at(2, 1), 2U);
    EXPECT_EQ(r.per_sample.at(2, 2), 1U);
    EXPECT_EQ(r.per_sample.at(2, 3), 2U);
    EXPECT_DOUBLE_EQ(r.macro, 4.0 / 10.0);
}

TEST(ChiSquared, PValueMatchesTwoDegreeClosedForm) {
    // df = 2: survival function exp(-x / 2)
    const std::vector<std::uint64_t> c = {10, 0, 0};
    const double stat = (10 - 10.0 / 3) * (10 - 10.0 / 3) / (10.0 / 3) + 2 * (10.0 / 3);
    EXPECT_NEAR(uniform_gof_pvalue(c), std::exp(-stat / 2), 1e-14);
    const std::vector<std::uint64_t> flat = {5, 5, 5};
    EXPECT_NEAR(uniform_gof_pvalue(flat), 1.0, 1e-15);
    EXPECT_EQ(uniform_gof_pvalue(std::vector<std::uint64_t>{0, 0, 0}), 1.0);
}

TEST(ValidSampling, FixedClassStopsAtFirstIncrement) {
    const std::vector<std::size_t> labels = {1, 0};
    const ValidSamplingReport r = eval_valid_sampling(constant_class(1), labels, 3);
    EXPECT_DOUBLE_EQ(r.mean_samples, 10.0);
    EXPECT_EQ(r.capped, 0U);
    EXPECT_DOUBLE_EQ(r.micro, 0.5);
}

TEST(ValidSampling, InvalidSamplesAreDiscarded) {
    // 10 draws with 4 valid (all class 2): p = exp(-4) > 0.001, so a second increment is needed
    const std::vector<std::size_t> labels = {2};
    const ShotSource src = replay({{-1, 2, -1, -1, 2, -1, 2, -1, 2, -1}});
    const ValidSamplingReport r = eval_valid_sampling(src, labels, 3);
    EXPECT_DOUBLE_EQ(r.mean_samples, 20.0);
    EXPECT_DOUBLE_EQ(r.micro, 1.0);
}

TEST(ValidSampling, UniformValidHitsCap) {
    const std::vector<std::size_t> labels = {0, 1, 2, 0, 1};
    const ValidSamplingReport r = eval_valid_sampling(uniform_valid(3, 42), labels, 3);
    EXPECT_GE(r.capped, 4U);
    EXPECT_GT(r.mean_samples, 8000.0);
}

TEST(ValidSampling, NeverValidReportsInvalid) {
    const std::vector<std::size_t> labels = {0};
    const ValidSamplingReport r = eval_valid_sampling(constant_class(kInvalidClass), labels, 3, {0.001, 10, 100});
    EXPECT_EQ(r.capped, 1U);
    EXPECT_DOUBLE_EQ(r.mean_samples, 100.0);
    EXPECT_EQ(r.plurality.at(0, 3), 1U);
}

TEST(ValidSampling, DeterministicForSeed) {
    CircuitSpec spec = CircuitSpec::make(3, BlockKind::CNN7);
    spec.theta = init_params(spec, 3);
    const Readout ro(Codec::Edge, 3, Tempering(TemperFn::Erf, 0.01));
    const std::vector<std::vector<double>> xs = {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {2.0, 1.0, 0.5, 3.0, 0.1, 1.1}};
    const std::vector<std::size_t> ys = {0, 2};
    const ValidSamplingReport a = eval_valid_sampling(circuit_shots(spec, ro, xs, 5), ys, 3);
    const ValidSamplingReport b = eval_valid_sampling(circuit_shots(spec, ro, xs, 5), ys, 3);
    EXPECT_EQ(a.micro, b.micro);
    EXPECT_EQ(a.mean_samples, b.mean_samples);
    EXPECT_EQ(a.plurality, b.plurality);
}

TEST(CircuitShots, MatchExactMarginals) {
    // frequency of each decoded class approaches the exact class probability
    CircuitSpec spec = CircuitSpec::make(3, BlockKind::SU4);
    spec.theta = init_params(spec, 8);
    const Readout ro(Codec::Edge, 3, Tempering());
    const std::vector<std::vector<double>> xs = {{0.3, 1.4, 2.2, 0.9, 0.1, 2.8}};
    const StateVector sv = run_circuit(build_ring(spec), xs[0], 3);
    std::vector<double> exact(4, 0.0);
    const std::vector<double> p = sv.probabilities();
    for (std::uint64_t k = 0; k < p.size(); ++k) {
        const DecodeResult d = ro.decode_outcome({k, 3});
        exact[d.valid() ? static_cast<std::size_t>(d.class_id) : 3] += p[k];
    }
    ShotStream s = circuit_shots(spec, ro, xs, 1)(0);
    std::vector<double> freq(4, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const DecodeResult d = s();
        freq[d.valid() ? static_cast<std::size_t>(d.class_id) : 3] += 1.0 / n;
    }
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(freq[c], exact[c], 5 * std::sqrt(0.25 / n));
}

TEST(Threshold, Examples) {
    const std::vector<std::vector<double>> onehot = {{1, 0, 0}, {0, 0, 1}};
    const std::vector<std::size_t> y = {0, 2};
    const ThresholdReport a = eval_threshold(onehot, y);
    EXPECT_DOUBLE_EQ(a.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(a.margin, 1.0);
    const std::vector<std::vector<double>> hand = {{0.9, 0.4, 0.1}};
    const std::vector<std::size_t> y0 = {0};
    const ThresholdReport b = eval_threshold(hand, y0);
    EXPECT_DOUBLE_EQ(b.accuracy, 1.0);
    EXPECT_NEAR(b.margin, 0.5, 1e-15);
    const std::vector<std::vector<double>> tie = {{0.3, 0.7, 0.7}};
    const std::vector<std::size_t> y2 = {2};
    const ThresholdReport c = eval_threshold(tie, y2);
    EXPECT_DOUBLE_EQ(c.accuracy, 0.0); // lowest index (1) wins the tie
    EXPECT_EQ(c.ties, 1U);
    EXPECT_DOUBLE_EQ(c.margin, 0.0);
}

TEST(Friedman, Examples) {
    const std::vector<std::vector<double>> row = {{1, 2, 3}};
    const std::vector<Direction> up = {Direction::HigherBetter}, down = {Direction::LowerBetter};
    EXPECT_EQ(friedman_rank(row, up).ranks[0], (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(friedman_rank(row, down).ranks[0], (std::vector<double>{3, 2, 1}));
    const std::vector<std::vector<double>> tied = {{5, 5, 1}};
    EXPECT_EQ(friedman_rank(tied, up).ranks[0], (std::vector<double>{2.5, 2.5, 1}));
}

TEST(Friedman, AveragesOverRows) {
    const std::vector<std::vector<double>> grid = {{0.7, 0.5, 0.6}, {300, 100, 200}};
    const std::vector<Direction> dir = {Direction::HigherBetter, Direction::LowerBetter};
    const RankTable t = friedman_rank(grid, dir);
    EXPECT_EQ(t.mean_rank, (std::vector<double>{2.0, 2.0, 2.0}));
    const std::vector<std::vector<double>> ragged = {{1, 2}, {1}};
    EXPECT_THROW(friedman_rank(ragged, dir), std::invalid_argument);
}

TEST(WinRate, Examples) {
    const std::vector<double> a = {1, 1, 1, 1, 1, 1}, b = {0, 0, 0, 0, 0, 0};
    const WinRate all = win_rate(a, b, Direction::HigherBetter);
    EXPECT_DOUBLE_EQ(all.a, 100.0);
    EXPECT_DOUBLE_EQ(all.b, 0.0);
    const std::vector<double> c = {1, 0, 1, 0, 1, 0}, d = {0, 1, 0, 1, 0, 1};
    const WinRate half = win_rate(c, d, Direction::HigherBetter);
    EXPECT_DOUBLE_EQ(half.a, 50.0);
    EXPECT_DOUBLE_EQ(half.b, 50.0);
    const std::vector<double> e = {1, 1, 1, 1, 1, 0.5}, f = {0, 0, 0, 0, 0, 0.5};
    const WinRate five = win_rate(e, f, Direction::HigherBetter);
    EXPECT_NEAR(five.a, 91.67, 0.005);
    EXPECT_NEAR(five.b, 8.33, 0.005);
    EXPECT_DOUBLE_EQ(five.a, 100.0 * 5.5 / 6.0);
    const WinRate low = win_rate(b, a, Direction::LowerBetter);
    EXPECT_DOUBLE_EQ(low.a, 100.0);
    EXPECT_THROW(win_rate(a, std::vector<double>{1}, Direction::HigherBetter), std::invalid_argument);
}

} // namespace
} // namespace edgevqc
