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
 * Evaluation protocols over sampled outcomes and exact activations, plus
 * rank aggregation across strategies.
 *
 * Sampled protocols read decoded m-samples from a ShotStream, one stream per
 * t-sample, so they can be driven by a circuit or by a fixed fixture.
 */
#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "edgevqc/ansatz.hpp"
#include "edgevqc/readout.hpp"
#include "edgevqc/rng.hpp"

namespace edgevqc {

/// K rows (true class) x K+1 columns (predicted class, last = invalid).
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t k_classes = 0) : k_(k_classes), counts_(k_classes * (k_classes + 1), 0) {}

    std::size_t k_classes() const noexcept { return k_; }
    std::size_t invalid_column() const noexcept { return k_; }

    void add(std::size_t truth, DecodeResult predicted, std::uint64_t n = 1) {
        if (truth >= k_) throw std::out_of_range("true class out of range");
        const std::size_t col = predicted.valid() ? static_cast<std::size_t>(predicted.class_id) : k_;
        if (col > k_) throw std::out_of_range("predicted class out of range");
        counts_[truth * (k_ + 1) + col] += n;
    }

    std::uint64_t at(std::size_t row, std::size_t col) const { return counts_.at(row * (k_ + 1) + col); }

    std::uint64_t trace() const {
        std::uint64_t t = 0;
        for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
        return t;
    }

    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

    std::uint64_t row_total(std::size_t row) const {
        std::uint64_t t = 0;
        for (std::size_t c = 0; c <= k_; ++c) t += at(row, c);
        return t;
    }

    double accuracy() const {
        const std::uint64_t n = total();
        return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
    }

    bool operator==(const ConfusionMatrix &) const = default;

  private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

/// Decoded m-samples of one t-sample, produced on demand.
using ShotStream = std::function<DecodeResult()>;
/// Builds the stream for t-sample t.
using ShotSource = std::function<ShotStream(std::size_t t)>;

/**
 * Streams of a trained circuit: exact final state per t-sample, sampled with
 * a seed derived from (seed, t) and decoded by the readout. The readout and
 * the inputs must outlive the returned source.
 */
inline ShotSource circuit_shots(const CircuitSpec &spec, const Readout &readout,
                                std::span<const std::vector<double>> inputs, std::uint64_t seed) {
    auto gates = std::make_shared<const std::vector<Gate>>(build_ring(spec));
    const std::size_t w = spec.n_wires;
    return [gates, w, &readout, inputs, seed](std::size_t t) -> ShotStream {
        const StateVector sv = run_circuit(*gates, inputs[t], w);
        auto sampler = std::make_shared<BasisSampler>(sv);
        auto rng = std::make_shared<Rng>(derive_seed(seed, t));
        return [sampler, rng, &readout]() { return readout.decode_outcome(sampler->draw(*rng)); };
    };
}

/**
 * Plurality over per-class counts plus an invalid count. Ties go to invalid
 * when it is among the maxima, otherwise to the lowest class index.
 */
inline DecodeResult plurality(std::span<const std::uint64_t> class_counts, std::uint64_t invalid_count) {
    std::uint64_t best = invalid_count;
    for (std::uint64_t c : class_counts) best = std::max(best, c);
    if (invalid_count == best) return {};
    for (std::size_t i = 0; i < class_counts.size(); ++i) {
        if (class_counts[i] == best) return {static_cast<int>(i)};
    }
    return {};
}

struct ConstantRateReport {
    ConfusionMatrix plurality;  // one entry per t-sample
    ConfusionMatrix per_sample; // one entry per m-sample
    double micro{0.0};          // C_m
    double macro{0.0};          // A_M
};

/// Fixed number of shots per t-sample; the plurality decides the prediction.
inline ConstantRateReport eval_constant(const ShotSource &source, std::span<const std::size_t> labels,
                                        std::size_t k_classes, std::size_t shots = 100) {
    if (shots == 0) throw std::invalid_argument("shots must be >= 1");
    ConstantRateReport r{ConfusionMatrix(k_classes), ConfusionMatrix(k_classes), 0.0, 0.0};
    std::vector<std::uint64_t> counts(k_classes);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        std::uint64_t invalid = 0;
        ShotStream stream = source(t);
        for (std::size_t s = 0; s < shots; ++s) {
            const DecodeResult d = stream();
            r.per_sample.add(labels[t], d);
            if (d.valid()) ++counts.at(static_cast<std::size_t>(d.class_id));
            else ++invalid;
        }
        r.plurality.add(labels[t], plurality(counts, invalid));
    }
    r.micro = r.plurality.accuracy();
    r.macro = r.per_sample.accuracy();
    return r;
}

struct ValidSamplingConfig {
    double alpha{0.001};
    std::size_t increment{10};
    std::size_t cap{10000};
};

struct ValidSamplingReport {
    ConfusionMatrix plurality; // valid-sample plurality per t-sample
    double micro{0.0};         // V_m
    double mean_samples{0.0};  // S, mean m-samples drawn per t-sample
    std::size_t capped{0};     // t-samples that hit the cap without rejecting uniformity
};

/// Upper tail of the chi-squared goodness-of-fit test of counts against uniform.
inline double uniform_gof_pvalue(std::span<const std::uint64_t> counts) {
    const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    if (n == 0.0 || counts.size() < 2) return 1.0;
    const double expected = n / static_cast<double>(counts.size());
    double stat = 0.0;
    for (std::uint64_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/**
 * Per t-sample, draw m-samples in increments and discard invalid decodes.
 * After each increment the valid-class counts are tested against the uniform
 * distribution over K classes; sampling stops once p < alpha or at the cap.
 * The prediction is the plurality of valid classes (ties: lowest index;
 * no valid sample: invalid).
 */
inline ValidSamplingReport eval_valid_sampling(const ShotSource &source, std::span<const std::size_t> labels,
                                               std::size_t k_classes, const ValidSamplingConfig &cfg = {}) {
    if (cfg.increment == 0 || cfg.cap < cfg.increment) throw std::invalid_argument("bad sampling increments");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    ValidSamplingReport r{ConfusionMatrix(k_classes), 0.0, 0.0, 0};
    std::vector<std::uint64_t> counts(k_classes);
    double drawn_total = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        ShotStream stream = source(t);
        std::size_t drawn = 0;
        bool rejected = false;
        while (drawn < cfg.cap && !rejected) {
            for (std::size_t s = 0; s < cfg.increment; ++s) {
                const DecodeResult d = stream();
                if (d.valid()) ++counts.at(static_cast<std::size_t>(d.class_id));
            }
            drawn += cfg.increment;
            rejected = uniform_gof_pvalue(counts) < cfg.alpha;
        }
        if (!rejected) ++r.capped;
        drawn_total += static_cast<double>(drawn);
        const std::uint64_t any = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
        r.plurality.add(labels[t], any == 0 ? DecodeResult{} : plurality(counts, 0));
    }
    r.micro = r.plurality.accuracy();
    r.mean_samples = labels.empty() ? 0.0 : drawn_total / static_cast<double>(labels.size());
    return r;
}

struct ThresholdReport {
    double accuracy{0.0};   // T
    double margin{0.0};     // L_r, mean top-1 minus top-2 activation
    std::size_t ties{0};    // t-samples whose top activation was tied
};

/// Argmax of exact activations; ties resolved to the lowest class index.
inline ThresholdReport eval_threshold(std::span<const std::vector<double>> activations,
                                      std::span<const std::size_t> labels) {
    if (activations.size() != labels.size()) throw std::invalid_argument("activation and label counts differ");
    ThresholdReport r;
    if (labels.empty()) return r;
    std::size_t correct = 0;
    double gap = 0.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const std::vector<double> &a = activations[t];
        if (a.size() < 2) throw std::invalid_argument("need at least two activations");
        std::size_t best = 0;
        for (std::size_t i = 1; i < a.size(); ++i) {
            if (a[i] > a[best]) best = i;
        }
        double second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i != best) second = std::max(second, a[i]);
        }
        if (second == a[best]) ++r.ties;
        correct += best == labels[t];
        gap += a[best] - second;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    r.margin = gap / static_cast<double>(labels.size());
    return r;
}

/// Exact activations of every input under a readout.
inline std::vector<std::vector<double>> model_activations(const CircuitSpec &spec, const Readout &readout,
                                                          std::span<const std::vector<double>> inputs) {
    const std::vector<Gate> gates = build_ring(spec);
    std::vector<std::vector<double>> out;
    out.reserve(inputs.size());
    for (const auto &x : inputs) out.push_back(readout.activations(run_circuit(gates, x, spec.n_wires).expectations_z()));
    return out;
}

enum class Direction { HigherBetter, LowerBetter };

struct RankTable {
    std::vector<std::vector<double>> ranks; // per row, per strategy
    std::vector<double> mean_rank;          // F-Rank per strategy (higher is better)
};

/**
 * Per row, the best value gets rank = number of strategies and the worst gets
 * 1; ties share the average of their ranks. Ranks are averaged over rows.
 */
inline RankTable friedman_rank(std::span<const std::vector<double>> grid, std::span<const Direction> directions) {
    if (grid.empty()) throw std::invalid_argument("empty grid");
    if (directions.size() != grid.size()) throw std::invalid_argument("one direction per row");
    const std::size_t n = grid.front().size();
    RankTable t;
    t.mean_rank.assign(n, 0.0);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (grid[r].size() != n) throw std::invalid_argument("ragged grid");
        std::vector<double> v = grid[r];
        if (directions[r] == Direction::LowerBetter) {
            for (double &x : v) x = -x;
        }
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t m = i; m <= j; ++m) rank[idx[m]] = avg;
            i = j + 1;
        }
        for (std::size_t c = 0; c < n; ++c) t.mean_rank[c] += rank[c] / static_cast<double>(grid.size());
        t.ranks.push_back(std::move(rank));
    }
    return t;
}

struct WinRate {
    double a{0.0}; // percent of blocks where A beats B, ties split evenly
    double b{0.0};
};

inline WinRate win_rate(std::span<const double> scores_a, std::span<const double> scores_b, Direction dir) {
    if (scores_a.size() != scores_b.size() || scores_a.empty()) throw std::invalid_argument("unpaired scores");
    double wins = 0.0;
    for (std::size_t i = 0; i < scores_a.size(); ++i) {
        const double x = scores_a[i], y = scores_b[i];
        if (x == y) wins += 0.5;
        else if ((dir == Direction::HigherBetter) == (x > y)) wins += 1.0;
    }
    const double n = static_cast<double>(scores_a.size());
    return {100.0 * wins / n, 100.0 * (n - wins) / n};
}

} // namespace edgevqc
