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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edgevqc/simplex.hpp"

namespace edgevqc {
namespace {

// Edge values of the pure pattern for class y; edges not touching y sit at 0.5.
std::vector<double> pure_pattern(const SimplexGeometry &g, std::size_t y) {
    std::vector<double> e(g.n_edges(), 0.5);
    for (std::size_t w = 0; w < g.n_edges(); ++w) {
        const auto [i, j] = g.edges()[w];
        if (i == y) e[w] = 0.0;
        if (j == y) e[w] = 1.0;
    }
    return e;
}

std::vector<double> random_edges(std::size_t n, Rng &rng, double lo = 0.05, double hi = 0.95) {
    std::vector<double> e(n);
    for (double &x : e) x = rng.uniform(lo, hi);
    return e;
}

// Closed form on a regular unit simplex: with pt = (1-e) v_i + e v_j, the slice
// normal is parallel to e v_i - (1-e) v_j. Solves the vertex system with a
// full-pivot LU, independent of the library's QR + partial-pivot path.
std::vector<double> reference_logits(const SimplexGeometry &g, const std::vector<double> &edges) {
    const std::size_t k = g.k_classes();
    const auto d = static_cast<Eigen::Index>(k - 1);
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i) {
        Eigen::MatrixXd a(d, d);
        Eigen::VectorXd b(d);
        Eigen::Index r = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            const double e = edges[g.edge_index(lo, hi)];
            const Eigen::VectorXd pt = (1 - e) * g.vertex(lo) + e * g.vertex(hi);
            const Eigen::VectorXd s = e * g.vertex(lo) - (1 - e) * g.vertex(hi);
            a.row(r) = s.transpose();
            b(r) = s.dot(pt);
            ++r;
        }
        const Eigen::VectorXd n = a.fullPivLu().solve(b);
        p[i] = 1.0 - (g.vertex(i) - n).squaredNorm();
    }
    return p;
}

// K = 3 in explicit 2-D: n_i is where the two cevians through the edge points
// of vertex i and the opposite vertices meet.
std::vector<double> planar_logits(const SimplexGeometry &g, const std::vector<double> &edges) {
    auto pt = [&](std::size_t a, std::size_t b) {
        const std::size_t lo = std::min(a, b), hi = std::max(a, b);
        const double e = edges[g.edge_index(lo, hi)];
        return std::array<double, 2>{(1 - e) * g.vertices()(lo, 0) + e * g.vertices()(hi, 0),
                                     (1 - e) * g.vertices()(lo, 1) + e * g.vertices()(hi, 1)};
    };
    auto vx = [&](std::size_t a) { return std::array<double, 2>{g.vertices()(a, 0), g.vertices()(a, 1)}; };
    std::vector<double> p(3);
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t j = (i + 1) % 3, k = (i + 2) % 3;
        // line 1: pt(i,j) -> v_k ; line 2: pt(i,k) -> v_j
        const auto p1 = pt(i, j), q1 = vx(k), p2 = pt(i, k), q2 = vx(j);
        const double d1x = q1[0] - p1[0], d1y = q1[1] - p1[1];
        const double d2x = q2[0] - p2[0], d2y = q2[1] - p2[1];
        const double den = d1x * d2y - d1y * d2x;
        const double t = ((p2[0] - p1[0]) * d2y - (p2[1] - p1[1]) * d2x) / den;
        const double nx = p1[0] + t * d1x, ny = p1[1] + t * d1y;
        const auto v = vx(i);
        p[i] = 1.0 - ((v[0] - nx) * (v[0] - nx) + (v[1] - ny) * (v[1] - ny));
    }
    return p;
}

TEST(Simplex, RegularUnitCentred) {
    for (std::size_t k = 3; k <= 10; ++k) {
        const SimplexGeometry g = build_simplex(k);
        EXPECT_EQ(g.vertices().rows(), static_cast<Eigen::Index>(k));
        EXPECT_EQ(g.vertices().cols(), static_cast<Eigen::Index>(k - 1));
        EXPECT_LT(g.vertices().colwise().sum().norm(), 1e-10);
        double dmin = 1e9, dmax = 0;
        for (std::size_t i = 0; i < k; ++i) {
            EXPECT_NEAR(g.vertex(i).norm(), 1.0, 1e-12);
            for (std::size_t j = i + 1; j < k; ++j) {
                const double d = (g.vertex(i) - g.vertex(j)).norm();
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
        }
        EXPECT_LT(dmax - dmin, 1e-10);
        // unit vertices with centroid 0 give |v_i - v_j|^2 = 2K/(K-1)
        EXPECT_NEAR(dmax * dmax, 2.0 * k / (k - 1.0), 1e-12);
    }
    EXPECT_THROW(build_simplex(2), std::invalid_argument);
}

TEST(Simplex, TriangleAngles) {
    const SimplexGeometry g = build_simplex(3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) EXPECT_NEAR(g.vertex(i).dot(g.vertex(j)), -0.5, 1e-14);
    }
}

TEST(Simplex, EdgeIndexLexicographic) {
    const SimplexGeometry g = build_simplex(5);
    for (std::size_t w = 0; w < g.n_edges(); ++w) {
        const auto [i, j] = g.edges()[w];
        EXPECT_LT(i, j);
        EXPECT_EQ(g.edge_index(i, j), w);
        EXPECT_EQ(g.edge_index(j, i), w);
    }
    EXPECT_EQ(g.edges()[0], (WirePair{0, 1}));
    EXPECT_EQ(g.edges()[4], (WirePair{1, 2}));
    EXPECT_THROW(g.edge_index(2, 2), std::out_of_range);
}

TEST(Simplex, EdgePointEndpoints) {
    const SimplexGeometry g = build_simplex(4);
    EXPECT_LT((edge_point(g, 1, 3, 0.0) - g.vertex(1)).norm(), 1e-15);
    EXPECT_LT((edge_point(g, 1, 3, 1.0) - g.vertex(3)).norm(), 1e-15);
    EXPECT_LT((edge_point(g, 1, 3, 0.5) - 0.5 * (g.vertex(1) + g.vertex(3))).norm(), 1e-15);
    EXPECT_THROW(edge_point(g, 3, 1, 0.5), std::invalid_argument);
}

TEST(Simplex, SliceNormalOrthogonalAndOriented) {
    Rng rng(3);
    for (std::size_t k = 3; k <= 7; ++k) {
        const SimplexGeometry g = build_simplex(k);
        for (const auto &[i, j] : g.edges()) {
            const double e = rng.uniform(0.0, 1.0);
            const Eigen::VectorXd pt = edge_point(g, i, j, e);
            const Eigen::VectorXd s = slice_normal(g, i, j, pt);
            EXPECT_NEAR(s.norm(), 1.0, 1e-12);
            for (std::size_t v = 0; v < k; ++v) {
                if (v != i && v != j) {
                    EXPECT_LT(std::abs(s.dot(g.vertex(v) - pt)), 1e-10);
                }
            }
            EXPECT_GT(s.dot(g.vertex(i) - pt), 0.0);
            const Eigen::VectorXd ref = (e * g.vertex(i) - (1 - e) * g.vertex(j)).normalized();
            EXPECT_NEAR(std::abs(s.dot(ref)), 1.0, 1e-10);
        }
    }
}

TEST(Simplex, SliceNormalAtVertex) {
    const SimplexGeometry g = build_simplex(5);
    const Eigen::VectorXd s = slice_normal(g, 0, 2, g.vertex(0));
    for (std::size_t v : {1U, 3U, 4U}) EXPECT_LT(std::abs(s.dot(g.vertex(v) - g.vertex(0))), 1e-10);
}

TEST(Simplex, TriangleMedianNormal) {
    // Slice through the midpoint of edge (1, 2) and vertex 0 is the median; its normal
    // is perpendicular to v_0 - midpoint.
    const SimplexGeometry g = build_simplex(3);
    const Eigen::VectorXd mid = edge_point(g, 1, 2, 0.5);
    const Eigen::VectorXd s = slice_normal(g, 1, 2, mid);
    const Eigen::Vector2d d = g.vertex(0) - mid;
    const Eigen::Vector2d rot(-d(1), d(0));
    EXPECT_NEAR(std::abs(s.dot(rot.normalized())), 1.0, 1e-12);
}

TEST(Simplex, AllHalfGivesCentroid) {
    for (std::size_t k = 3; k <= 8; ++k) {
        const SimplexGeometry g = build_simplex(k);
        const std::vector<double> half(g.n_edges(), 0.5);
        for (double p : edge_logits(g, half)) EXPECT_NEAR(p, 0.0, 1e-9);
    }
}

TEST(Simplex, PurePatternsAreFixedPoints) {
    for (std::size_t k = 3; k <= 6; ++k) {
        const SimplexGeometry g = build_simplex(k);
        for (std::size_t y = 0; y < k; ++y) {
            const std::vector<double> p = edge_logits(g, pure_pattern(g, y));
            for (std::size_t i = 0; i < k; ++i) {
                if (i == y) {
                    EXPECT_NEAR(p[i], 1.0, 1e-9);
                } else {
                    EXPECT_LT(p[i], 1.0 - 1e-6);
                }
            }
        }
    }
}

TEST(Simplex, LogitsMatchPlanarReference) {
    const SimplexGeometry g = build_simplex(3);
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
        const std::vector<double> e = random_edges(3, rng);
        const std::vector<double> p = edge_logits(g, e), ref = planar_logits(g, e);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], ref[i], 1e-10);
        EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(),
                  std::max_element(ref.begin(), ref.end()) - ref.begin());
    }
}

TEST(Simplex, LogitsMatchClosedFormNormals) {
    Rng rng(78);
    for (std::size_t k = 3; k <= 8; ++k) {
        const SimplexGeometry g = build_simplex(k);
        for (int t = 0; t < 20; ++t) {
            const std::vector<double> e = random_edges(g.n_edges(), rng);
            const std::vector<double> p = edge_logits(g, e), ref = reference_logits(g, e);
            for (std::size_t i = 0; i < k; ++i) {
                EXPECT_NEAR(p[i], ref[i], 1e-9);
                EXPECT_LE(p[i], 1.0 + 1e-9);
            }
        }
    }
}

TEST(Simplex, IntersectionResidualAndOrderInvariance) {
    Rng rng(5);
    const SimplexGeometry g = build_simplex(6);
    const std::vector<double> e = random_edges(g.n_edges(), rng);
    for (std::size_t i = 0; i < 6; ++i) {
        std::vector<Eigen::VectorXd> pts, ns;
        for (std::size_t j = 0; j < 6; ++j) {
            if (j == i) continue;
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            pts.push_back(edge_point(g, lo, hi, e[g.edge_index(lo, hi)]));
            ns.push_back(slice_normal(g, i, j, pts.back()));
        }
        const Eigen::VectorXd n = intersect_slices(g, i, pts, ns);
        for (std::size_t r = 0; r < pts.size(); ++r) EXPECT_LT(std::abs((n - pts[r]).dot(ns[r])), 1e-9);
        std::vector<std::size_t> order(pts.size());
        std::iota(order.begin(), order.end(), 0);
        for (int perm = 0; perm < 10; ++perm) {
            rng.shuffle(std::span<std::size_t>(order));
            std::vector<Eigen::VectorXd> p2, n2;
            for (std::size_t r : order) {
                p2.push_back(pts[r]);
                n2.push_back(ns[r]);
            }
            EXPECT_LT((intersect_slices(g, i, p2, n2) - n).norm(), 1e-9);
        }
    }
}

TEST(Simplex, SingularSystemDiagnosed) {
    const SimplexGeometry g = build_simplex(3);
    // Vertex 2's two slices coincide (both the line v_0 v_1).
    const std::vector<double> e = {0.5, 0.0, 0.0};
    EXPECT_THROW(edge_logits(g, e), SingularSystemError);
    EXPECT_THROW(edge_logits(g, std::vector<double>{0.5, 1.2, 0.1}), std::invalid_argument);
    EXPECT_THROW(edge_logits(g, std::vector<double>{0.5, 0.5}), std::invalid_argument);
}

TEST(Simplex, VjpMatchesFiniteDifferences) {
    Rng rng(2024);
    for (std::size_t k = 3; k <= 6; ++k) {
        const SimplexGeometry g = build_simplex(k);
        for (int t = 0; t < 10; ++t) {
            const std::vector<double> e = random_edges(g.n_edges(), rng, 0.1, 0.9);
            std::vector<double> w(k);
            for (double &x : w) x = rng.uniform(-1, 1);
            const std::vector<double> grad = edge_logits_vjp(g, e, w);
            for (std::size_t q = 0; q < e.size(); ++q) {
                const double h = 1e-6;
                std::vector<double> ep = e, em = e;
                ep[q] += h;
                em[q] -= h;
                const std::vector<double> pp = edge_logits(g, ep), pm = edge_logits(g, em);
                double fd = 0;
                for (std::size_t i = 0; i < k; ++i) fd += w[i] * (pp[i] - pm[i]) / (2 * h);
                EXPECT_NEAR(grad[q], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "K=" << k << " edge " << q;
            }
        }
    }
}

TEST(SimplexUnitEdge, GeometryAndOneHotFixedPoints) {
    for (std::size_t k = 3; k <= 8; ++k) {
        const SimplexGeometry g = build_simplex(k, SimplexScale::UnitEdge);
        EXPECT_EQ(g.scale(), SimplexScale::UnitEdge);
        EXPECT_LT(g.vertices().colwise().sum().norm(), 1e-12);
        for (std::size_t i = 0; i < k; ++i) {
            EXPECT_NEAR(g.vertex(i).squaredNorm(), (k - 1.0) / (2.0 * k), 1e-12);
            for (std::size_t j = i + 1; j < k; ++j) EXPECT_NEAR((g.vertex(i) - g.vertex(j)).norm(), 1.0, 1e-12);
        }
        if (k > 6) continue;
        for (std::size_t y = 0; y < k; ++y) {
            const std::vector<double> p = edge_logits(g, pure_pattern(g, y));
            for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(p[i], i == y ? 1.0 : 0.0, 1e-9) << k << " " << y;
        }
        const std::vector<double> centre = edge_logits(g, std::vector<double>(g.n_edges(), 0.5));
        for (double v : centre) EXPECT_NEAR(v, 1.0 - (k - 1.0) / (2.0 * k), 1e-12);
    }
}

TEST(SimplexUnitEdge, LogitsMatchClosedFormNormals) {
    Rng rng(77);
    for (std::size_t k = 3; k <= 6; ++k) {
        const SimplexGeometry g = build_simplex(k, SimplexScale::UnitEdge);
        for (int rep = 0; rep < 20; ++rep) {
            const std::vector<double> e = random_edges(g.n_edges(), rng);
            const std::vector<double> p = edge_logits(g, e), ref = reference_logits(g, e);
            for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(p[i], ref[i], 1e-10);
        }
    }
    EXPECT_EQ(parse_simplex_scale("unit_edge"), SimplexScale::UnitEdge);
    EXPECT_EQ(to_string(SimplexScale::UnitRadius), "unit_radius");
    EXPECT_THROW(parse_simplex_scale("unit"), std::invalid_argument);
}

TEST(Loss, MseExamples) {
    const std::vector<std::vector<double>> y = {{1, 0, 0}};
    EXPECT_DOUBLE_EQ(mse_loss(y, y), 0.0);
    const std::vector<std::vector<double>> p = {{0, 0, 0}};
    EXPECT_DOUBLE_EQ(mse_loss(p, y), 1.0 / 3.0);
    const std::vector<std::vector<double>> p2 = {{0.2, 0.5, -0.1}, {0.2, 0.5, -0.1}};
    const std::vector<std::vector<double>> y2 = {{0, 1, 0}, {0, 1, 0}};
    EXPECT_DOUBLE_EQ(mse_loss(p2, y2), mse_loss(std::span(p2).first(1), std::span(y2).first(1)));
    EXPECT_THROW(mse_loss(p, y2), std::invalid_argument);
    const std::vector<std::vector<double>> bad = {{0.5, 0.5, 0}};
    EXPECT_THROW(mse_loss(p, bad), std::invalid_argument);
}

TEST(Decode, TriangleExamples) {
    const SimplexGeometry g = build_simplex(3);
    // bits listed as (e01, e02, e12), wire 0 first
    EXPECT_EQ(decode_edge(g, Bitstring::from_string("000")).class_id, 0);
    EXPECT_EQ(decode_edge(g, Bitstring::from_string("010")).class_id, kInvalidClass);
    EXPECT_EQ(decode_edge(g, Bitstring::from_string("111")).class_id, 2);
    EXPECT_EQ(decode_edge(g, Bitstring::from_string("100")).class_id, 1);
    EXPECT_THROW(decode_edge(g, Bitstring::from_string("00")), std::invalid_argument);
}

TEST(Decode, VertexExamples) {
    EXPECT_EQ(decode_vertex(3, Bitstring::from_string("100")).class_id, 0);
    EXPECT_EQ(decode_vertex(3, Bitstring::from_string("001")).class_id, 2);
    EXPECT_FALSE(decode_vertex(3, Bitstring::from_string("000")).valid());
    EXPECT_FALSE(decode_vertex(3, Bitstring::from_string("110")).valid());
    EXPECT_THROW(decode_vertex(3, Bitstring::from_string("0000")), std::invalid_argument);
    // codec-level decode of a full 6-wire outcome only looks at wires 0..3
    const SimplexGeometry g = build_simplex(4);
    EXPECT_EQ(decode(Codec::Vertex, g, Bitstring::from_string("001011")).class_id, 2);
}

TEST(Decode, PurePatternRoundTrip) {
    for (std::size_t k = 3; k <= 8; ++k) {
        const SimplexGeometry g = build_simplex(k);
        for (std::size_t y = 0; y < k; ++y) {
            Bitstring b{0, g.n_edges()};
            const std::vector<double> e = pure_pattern(g, y);
            for (std::size_t w = 0; w < e.size(); ++w) {
                if (e[w] == 1.0) b.value |= std::uint64_t{1} << w;
            }
            EXPECT_EQ(decode_edge(g, b).class_id, static_cast<int>(y));
        }
    }
}

TEST(Decode, ExclusiveByEnumeration) {
    for (std::size_t k = 3; k <= 6; ++k) {
        const SimplexGeometry g = build_simplex(k);
        const std::size_t w = g.n_edges();
        std::vector<std::uint64_t> per_class(k, 0);
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << w); ++v) {
            // decode_edge throws on double assignment, so reaching here is the check
            const DecodeResult r = decode_edge(g, {v, w});
            if (r.valid()) ++per_class[static_cast<std::size_t>(r.class_id)];
        }
        // each class fixes its K-1 incident bits and leaves the rest free
        for (std::uint64_t c : per_class) EXPECT_EQ(c, std::uint64_t{1} << (w - (k - 1)));
    }
}

TEST(Validity, UniformFractions) {
    EXPECT_TRUE(valid_fraction_uniform(3, Codec::Edge).same_as({6, 8}));
    EXPECT_TRUE(valid_fraction_uniform(3, Codec::Vertex).same_as({3, 8}));
    EXPECT_TRUE(valid_fraction_uniform(4, Codec::Edge).same_as({32, 64}));
    for (std::size_t k = 3; k <= 6; ++k) {
        const Fraction e = valid_fraction_uniform(k, Codec::Edge);
        const Fraction v = valid_fraction_uniform(k, Codec::Vertex);
        EXPECT_TRUE(e.same_as({k, std::uint64_t{1} << (k - 1)}));
        EXPECT_TRUE(v.same_as({k, std::uint64_t{1} << k}));
        EXPECT_TRUE(e.same_as({2 * v.numerator, v.denominator}));
    }
    for (std::size_t k = 7; k <= 15; ++k) {
        EXPECT_TRUE(valid_fraction_uniform(k, Codec::Vertex).same_as({k, std::uint64_t{1} << k}));
    }
}

TEST(Validity, MonteCarloBeyondSix) {
    for (std::size_t k : {7U, 9U, 12U}) {
        const Fraction f = valid_fraction_uniform(k, Codec::Edge);
        const double expect = k / std::pow(2.0, k - 1.0);
        const double sigma = std::sqrt(expect * (1 - expect) / static_cast<double>(f.denominator));
        EXPECT_NEAR(f.value(), expect, 5 * sigma) << k;
        EXPECT_EQ(f.numerator, valid_fraction_uniform(k, Codec::Edge).numerator);
    }
    EXPECT_THROW(valid_fraction_uniform(16, Codec::Edge), std::invalid_argument);
}

} // namespace
} // namespace edgevqc
