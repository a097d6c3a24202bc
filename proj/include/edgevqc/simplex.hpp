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
 * Output codecs over the regular (K-1)-simplex.
 *
 * Edge codec: each of the W = K(K-1)/2 wires is an edge (i, j), i < j, in
 * lexicographic order. A tempered value e in [0, 1] places a point
 * (1 - e) v_i + e v_j on that edge. For each vertex i the K-1 hyperplanes
 * through its incident edge points and the remaining vertices meet in a single
 * point n_i, and the class score is p_i = 1 - |v_i - n_i|^2.
 *
 * Vertex codec: the first K wires are one-hot class indicators.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "edgevqc/ansatz.hpp"
#include "edgevqc/rng.hpp"
#include "edgevqc/statevec.hpp"

namespace edgevqc {

enum class Codec { Edge, Vertex };

inline std::string to_string(Codec c) { return c == Codec::Edge ? "edge" : "vertex"; }

inline Codec parse_codec(std::string_view s) {
    if (s == "edge") return Codec::Edge;
    if (s == "vertex") return Codec::Vertex;
    throw std::invalid_argument("unknown codec: " + std::string(s));
}

/**
 * Vertex scale. UnitRadius puts every vertex on the unit sphere, so the codec
 * maps all-0.5 edges to p = 0. UnitEdge makes every edge length 1, so a pure
 * class pattern maps to the exact one-hot vector.
 */
enum class SimplexScale { UnitRadius, UnitEdge };

inline std::string to_string(SimplexScale s) { return s == SimplexScale::UnitRadius ? "unit_radius" : "unit_edge"; }

inline SimplexScale parse_simplex_scale(std::string_view s) {
    if (s == "unit_radius") return SimplexScale::UnitRadius;
    if (s == "unit_edge") return SimplexScale::UnitEdge;
    throw std::invalid_argument("unknown simplex scale: " + std::string(s));
}

class SingularSystemError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SimplexGeometry {
  public:
    std::size_t k_classes() const noexcept { return k_; }
    std::size_t dimension() const noexcept { return k_ - 1; }
    std::size_t n_edges() const noexcept { return edges_.size(); }
    SimplexScale scale() const noexcept { return scale_; }

    /// Row i is vertex v_i.
    const Eigen::MatrixXd &vertices() const noexcept { return vertices_; }
    Eigen::VectorXd vertex(std::size_t i) const { return vertices_.row(static_cast<Eigen::Index>(i)).transpose(); }

    /// Wire w carries edge edges()[w] = (i, j) with i < j.
    const std::vector<WirePair> &edges() const noexcept { return edges_; }

    /// Wire index of edge {i, j}, order-insensitive.
    std::size_t edge_index(std::size_t i, std::size_t j) const {
        if (i == j || i >= k_ || j >= k_) throw std::out_of_range("not an edge of the simplex");
        if (i > j) std::swap(i, j);
        // Lexicographic rank of (i, j): edges before row i, plus offset inside row i.
        return i * (2 * k_ - i - 1) / 2 + (j - i - 1);
    }

    friend SimplexGeometry build_simplex(std::size_t k_classes, SimplexScale scale);

  private:
    std::size_t k_{0};
    SimplexScale scale_{SimplexScale::UnitRadius};
    Eigen::MatrixXd vertices_;
    std::vector<WirePair> edges_;
};

/**
 * Regular zero-centred unit simplex: centre the K standard basis vectors of R^K,
 * orthonormalize the first K-1 of them (modified Gram-Schmidt, two passes),
 * express every vertex in that basis and normalize to unit length (then to
 * unit edge length if asked; the circumradius is sqrt((K-1)/(2K)) there).
 */
inline SimplexGeometry build_simplex(std::size_t k_classes, SimplexScale scale = SimplexScale::UnitRadius) {
    if (k_classes < 3) throw std::invalid_argument("simplex codec needs K >= 3");
    const auto k = static_cast<Eigen::Index>(k_classes);
    Eigen::MatrixXd centred = Eigen::MatrixXd::Identity(k, k);
    centred.rowwise() -= Eigen::RowVectorXd::Constant(k, 1.0 / static_cast<double>(k));

    Eigen::MatrixXd basis(k, k - 1);
    for (Eigen::Index c = 0; c < k - 1; ++c) {
        Eigen::VectorXd q = centred.row(c).transpose();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index p = 0; p < c; ++p) q -= basis.col(p).dot(q) * basis.col(p);
        }
        basis.col(c) = q.normalized();
    }

    SimplexGeometry g;
    g.k_ = k_classes;
    g.scale_ = scale;
    g.vertices_ = centred * basis;
    g.vertices_.rowwise().normalize();
    if (scale == SimplexScale::UnitEdge) {
        g.vertices_ *= std::sqrt(static_cast<double>(k_classes - 1) / (2.0 * static_cast<double>(k_classes)));
    }
    for (std::size_t i = 0; i < k_classes; ++i) {
        for (std::size_t j = i + 1; j < k_classes; ++j) g.edges_.emplace_back(i, j);
    }
    return g;
}

/// (1 - e) v_i + e v_j for i < j.
inline Eigen::VectorXd edge_point(const SimplexGeometry &geom, std::size_t i, std::size_t j, double e) {
    if (!(i < j) || j >= geom.k_classes()) throw std::invalid_argument("edge_point needs i < j < K");
    return (1.0 - e) * geom.vertex(i) + e * geom.vertex(j);
}

/**
 * Unit normal of the slice through edge_pt on edge {i, j} and every vertex
 * v_k, k != i, j. Found as the orthogonal complement of the differences
 * v_k - edge_pt via a column-pivoted Householder QR.
 *
 * Sign: positive inner product with v_i - edge_pt; if that is zero, the first
 * non-negligible coordinate is positive.
 */
inline Eigen::VectorXd slice_normal(const SimplexGeometry &geom, std::size_t i, std::size_t j,
                                    const Eigen::VectorXd &edge_pt) {
    const std::size_t k = geom.k_classes();
    if (i == j || i >= k || j >= k) throw std::invalid_argument("slice_normal needs a valid edge");
    const auto dim = static_cast<Eigen::Index>(geom.dimension());
    Eigen::MatrixXd diffs(dim, dim - 1);
    Eigen::Index col = 0;
    for (std::size_t v = 0; v < k; ++v) {
        if (v == i || v == j) continue;
        diffs.col(col++) = geom.vertex(v) - edge_pt;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(diffs);
    qr.setThreshold(1e-12);
    if (qr.rank() != dim - 1) throw SingularSystemError("slice spans fewer than K-2 directions");
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd s = q.col(dim - 1).normalized();

    const double side = s.dot(geom.vertex(i) - edge_pt);
    if (std::abs(side) > 1e-12) {
        if (side < 0.0) s = -s;
    } else {
        for (Eigen::Index c = 0; c < dim; ++c) {
            if (std::abs(s(c)) > 1e-12) {
                if (s(c) < 0.0) s = -s;
                break;
            }
        }
    }
    return s;
}

/**
 * Solves (n - edge_pts[r]) . normals[r] = 0 for all r by LU with partial
 * pivoting. Throws SingularSystemError when the slices do not meet in a point.
 */
inline Eigen::VectorXd intersect_slices(const SimplexGeometry &geom, std::size_t i,
                                        std::span<const Eigen::VectorXd> edge_pts,
                                        std::span<const Eigen::VectorXd> normals) {
    const std::size_t d = geom.dimension();
    if (i >= geom.k_classes() || edge_pts.size() != d || normals.size() != d) {
        throw std::invalid_argument("intersect_slices needs one slice per incident edge");
    }
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        a.row(r) = normals[r].transpose();
        b(r) = normals[r].dot(edge_pts[r]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-13)) throw SingularSystemError("slices do not intersect in a single point");
    return lu.solve(b);
}

namespace detail {

/// The linear system of vertex `i`, kept for the backward pass.
struct VertexSystem {
    std::vector<std::size_t> neighbours; // j != i, ascending
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::VectorXd> normals;
    Eigen::VectorXd intersection;
};

inline VertexSystem vertex_system(const SimplexGeometry &geom, std::span<const double> edges, std::size_t i) {
    VertexSystem sys;
    for (std::size_t j = 0; j < geom.k_classes(); ++j) {
        if (j == i) continue;
        const std::size_t lo = std::min(i, j), hi = std::max(i, j);
        const double e = edges[geom.edge_index(lo, hi)];
        sys.neighbours.push_back(j);
        sys.points.push_back(edge_point(geom, lo, hi, e));
        sys.normals.push_back(slice_normal(geom, i, j, sys.points.back()));
    }
    sys.intersection = intersect_slices(geom, i, sys.points, sys.normals);
    return sys;
}

inline void check_edges(const SimplexGeometry &geom, std::span<const double> edges) {
    if (edges.size() != geom.n_edges()) throw std::invalid_argument("expected one value per edge");
    for (double e : edges) {
        if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("edge value outside [0, 1]");
    }
}

} // namespace detail

/// Class scores p_i = 1 - |v_i - n_i|^2 from per-edge values.
inline std::vector<double> edge_logits(const SimplexGeometry &geom, std::span<const double> edges) {
    detail::check_edges(geom, edges);
    std::vector<double> p(geom.k_classes());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto sys = detail::vertex_system(geom, edges, i);
        p[i] = 1.0 - (geom.vertex(i) - sys.intersection).squaredNorm();
    }
    return p;
}

/**
 * Vector-Jacobian product of edge_logits: returns dL/de given dL/dp.
 *
 * Each row r of vertex i's system reads s_r . (n - pt_r) = 0 and depends only
 * on its own edge value. With lambda = A^{-T} dL/dn, dL/de_r = -lambda_r *
 * d(row r)/de_r. The normal's derivative ds solves
 * ds . (v_k - pt) = s . dpt for the K-2 slice vertices and s . ds = 0.
 */
inline std::vector<double> edge_logits_vjp(const SimplexGeometry &geom, std::span<const double> edges,
                                           std::span<const double> grad_p) {
    detail::check_edges(geom, edges);
    const std::size_t k = geom.k_classes();
    if (grad_p.size() != k) throw std::invalid_argument("expected one gradient per class");
    const auto d = static_cast<Eigen::Index>(geom.dimension());
    std::vector<double> grad_e(geom.n_edges(), 0.0);

    for (std::size_t i = 0; i < k; ++i) {
        if (grad_p[i] == 0.0) continue;
        const auto sys = detail::vertex_system(geom, edges, i);
        const Eigen::VectorXd vi = geom.vertex(i);
        const Eigen::VectorXd grad_n = 2.0 * grad_p[i] * (vi - sys.intersection);

        Eigen::MatrixXd a(d, d);
        for (Eigen::Index r = 0; r < d; ++r) a.row(r) = sys.normals[r].transpose();
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        const Eigen::VectorXd lambda = lu.transpose().solve(grad_n);

        for (Eigen::Index r = 0; r < d; ++r) {
            const std::size_t j = sys.neighbours[r];
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            const Eigen::VectorXd &s = sys.normals[r];
            const Eigen::VectorXd &pt = sys.points[r];
            const Eigen::VectorXd dpt = geom.vertex(hi) - geom.vertex(lo);

            Eigen::MatrixXd m(d, d);
            Eigen::VectorXd rhs(d);
            Eigen::Index row = 0;
            for (std::size_t v = 0; v < k; ++v) {
                if (v == i || v == j) continue;
                m.row(row) = (geom.vertex(v) - pt).transpose();
                rhs(row) = s.dot(dpt);
                ++row;
            }
            m.row(row) = s.transpose();
            rhs(row) = 0.0;
            const Eigen::VectorXd ds = m.partialPivLu().solve(rhs);

            const double drow = ds.dot(sys.intersection - pt) - s.dot(dpt);
            grad_e[geom.edge_index(lo, hi)] += -lambda(r) * drow;
        }
    }
    return grad_e;
}

/// sum_b sum_i (p_i - y_i)^2 / (B K).
inline double mse_loss(std::span<const std::vector<double>> logits, std::span<const std::vector<double>> targets) {
    if (logits.empty() || logits.size() != targets.size()) throw std::invalid_argument("batch size mismatch");
    const std::size_t k = logits.front().size();
    double sum = 0.0;
    for (std::size_t b = 0; b < logits.size(); ++b) {
        if (logits[b].size() != k || targets[b].size() != k) throw std::invalid_argument("class count mismatch");
        std::size_t ones = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double y = targets[b][i];
            if (y == 1.0) ++ones;
            else if (y != 0.0) throw std::invalid_argument("targets must be one-hot");
            const double r = logits[b][i] - y;
            sum += r * r;
        }
        if (ones != 1) throw std::invalid_argument("targets must be one-hot");
    }
    return sum / static_cast<double>(logits.size() * k);
}

inline std::vector<double> one_hot(std::size_t k, std::size_t label) {
    if (label >= k) throw std::out_of_range("label out of range");
    std::vector<double> y(k, 0.0);
    y[label] = 1.0;
    return y;
}

inline constexpr int kInvalidClass = -1;

struct DecodeResult {
    int class_id{kInvalidClass};

    bool valid() const noexcept { return class_id != kInvalidClass; }
    bool operator==(const DecodeResult &) const = default;
};

/**
 * Class c iff every edge incident to c points at c: bit 0 on (c, j) with
 * c < j, bit 1 on (j, c) with j < c. Other edges are free.
 */
inline DecodeResult decode_edge(const SimplexGeometry &geom, const Bitstring &bits) {
    if (bits.width != geom.n_edges()) throw std::invalid_argument("edge decoder needs W bits");
    const std::size_t k = geom.k_classes();
    DecodeResult out;
    for (std::size_t c = 0; c < k; ++c) {
        bool agree = true;
        for (std::size_t j = 0; j < k && agree; ++j) {
            if (j == c) continue;
            const bool bit = bits[geom.edge_index(c, j)];
            agree = (c < j) ? !bit : bit;
        }
        if (!agree) continue;
        if (out.valid()) throw std::logic_error("bitstring decodes to two classes");
        out.class_id = static_cast<int>(c);
    }
    return out;
}

/// Class i iff the K measured bits are one-hot at i.
inline DecodeResult decode_vertex(std::size_t k_classes, const Bitstring &bits) {
    if (bits.width != k_classes) throw std::invalid_argument("vertex decoder needs K bits");
    const std::uint64_t v = bits.value;
    if (v != 0 && (v & (v - 1)) == 0) return {std::countr_zero(v)};
    return {};
}

/// Decodes a full W-wire outcome; the vertex codec reads wires 0..K-1.
inline DecodeResult decode(Codec codec, const SimplexGeometry &geom, const Bitstring &bits) {
    if (codec == Codec::Edge) return decode_edge(geom, bits);
    const std::size_t k = geom.k_classes();
    if (bits.width < k) throw std::invalid_argument("too few measured wires for the vertex codec");
    const std::uint64_t mask = (std::uint64_t{1} << k) - 1;
    return decode_vertex(k, Bitstring{bits.value & mask, k});
}

struct Fraction {
    std::uint64_t numerator{0};
    std::uint64_t denominator{1};

    double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }
    /// Equality as rationals.
    bool same_as(const Fraction &o) const noexcept {
        const std::uint64_t ga = std::gcd(numerator, denominator), gb = std::gcd(o.numerator, o.denominator);
        return numerator / ga == o.numerator / gb && denominator / ga == o.denominator / gb;
    }
};

/**
 * Fraction of uniformly random outcomes that decode to some class.
 *
 * Exact enumeration over all 2^W (edge) or 2^K (vertex) strings when K <= 6
 * for the edge codec and K <= 15 for the vertex codec. Larger edge cases fall
 * back to 2^20 seeded Monte Carlo draws, reported as hits / draws.
 */
inline Fraction valid_fraction_uniform(std::size_t k_classes, Codec codec) {
    if (k_classes < 3 || k_classes > 15) throw std::invalid_argument("K must be in [3, 15]");
    if (codec == Codec::Vertex) {
        const std::uint64_t n = std::uint64_t{1} << k_classes;
        std::uint64_t valid = 0;
        for (std::uint64_t v = 0; v < n; ++v) valid += decode_vertex(k_classes, {v, k_classes}).valid();
        return {valid, n};
    }
    const SimplexGeometry geom = build_simplex(k_classes);
    const std::size_t w = geom.n_edges();
    if (k_classes <= 6) {
        const std::uint64_t n = std::uint64_t{1} << w;
        std::uint64_t valid = 0;
        for (std::uint64_t v = 0; v < n; ++v) valid += decode_edge(geom, {v, w}).valid();
        return {valid, n};
    }
    constexpr std::uint64_t draws = std::uint64_t{1} << 20;
    Rng rng(derive_seed(0x5eed, k_classes));
    std::vector<std::uint8_t> bits(w);
    std::uint64_t valid = 0;
    for (std::uint64_t t = 0; t < draws; ++t) {
        for (std::size_t b = 0; b < w; b += 64) {
            std::uint64_t r = rng.next_u64();
            for (std::size_t q = b; q < std::min(w, b + 64); ++q, r >>= 1) bits[q] = r & 1U;
        }
        for (std::size_t c = 0; c < k_classes; ++c) {
            bool agree = true;
            for (std::size_t j = 0; j < k_classes && agree; ++j) {
                if (j != c) agree = (c < j) ? !bits[geom.edge_index(c, j)] : bits[geom.edge_index(c, j)];
            }
            if (agree) {
                ++valid;
                break;
            }
        }
    }
    return {valid, draws};
}

} // namespace edgevqc
