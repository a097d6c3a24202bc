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
 * IDX ingestion, seeded class subsets, PCA to 2W features and [0, pi] scaling.
 */
#pragma once

#include <zlib.h>

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgevqc/rng.hpp"
#include "edgevqc/train.hpp"

namespace edgevqc {

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RawDataset {
    std::size_t rows{28}, cols{28};
    std::vector<std::uint8_t> images; // size() * rows * cols, row-major per image
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t pixels() const noexcept { return rows * cols; }
    std::span<const std::uint8_t> image(std::size_t i) const { return {images.data() + i * pixels(), pixels()}; }
};

/// Whole file, gunzipped if it carries the gzip magic (zlib passes plain files through).
inline std::vector<std::uint8_t> read_maybe_gz(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> buf{};
    for (;;) {
        const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
        if (n < 0) {
            int errnum = 0;
            const std::string msg = gzerror(f, &errnum);
            gzclose(f);
            throw DataError("read error in " + path.string() + ": " + msg);
        }
        if (n == 0) break;
        out.insert(out.end(), buf.begin(), buf.begin() + n);
    }
    gzclose(f);
    return out;
}

namespace detail {

inline std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) | b[at + 3];
}

inline void check_header(std::span<const std::uint8_t> b, std::uint32_t magic, std::size_t header, const std::string &what) {
    if (b.size() < header) throw DataError(what + ": truncated header");
    const std::uint32_t m = be32(b, 0);
    if (m != magic) {
        std::ostringstream os;
        os << what << ": bad magic 0x" << std::hex << std::setw(8) << std::setfill('0') << m << ", expected 0x"
           << std::setw(8) << magic;
        throw DataError(os.str());
    }
}

} // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses IDX image and label buffers; 28x28 images and labels 0..9 only.
inline RawDataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
    detail::check_header(image_bytes, kIdxImageMagic, 16, "images");
    detail::check_header(label_bytes, kIdxLabelMagic, 8, "labels");
    const std::size_t n_img = detail::be32(image_bytes, 4);
    const std::size_t rows = detail::be32(image_bytes, 8), cols = detail::be32(image_bytes, 12);
    const std::size_t n_lbl = detail::be32(label_bytes, 4);
    if (rows != 28 || cols != 28) throw DataError("images: expected 28x28, got " + std::to_string(rows) + "x" + std::to_string(cols));
    if (n_img != n_lbl) throw DataError("count mismatch: " + std::to_string(n_img) + " images vs " + std::to_string(n_lbl) + " labels");
    const std::size_t want_img = 16 + n_img * rows * cols;
    if (image_bytes.size() < want_img) {
        throw DataError("images: truncated payload, " + std::to_string(image_bytes.size()) + " of " + std::to_string(want_img) + " bytes");
    }
    if (label_bytes.size() < 8 + n_lbl) {
        throw DataError("labels: truncated payload, " + std::to_string(label_bytes.size()) + " of " + std::to_string(8 + n_lbl) + " bytes");
    }
    if (image_bytes.size() != want_img || label_bytes.size() != 8 + n_lbl) throw DataError("trailing bytes after IDX payload");
    RawDataset raw;
    raw.rows = rows;
    raw.cols = cols;
    raw.images.assign(image_bytes.begin() + 16, image_bytes.end());
    raw.labels.assign(label_bytes.begin() + 8, label_bytes.end());
    for (std::uint8_t y : raw.labels) {
        if (y > 9) throw DataError("labels: value " + std::to_string(y) + " outside 0..9");
    }
    return raw;
}

inline RawDataset load_idx(const std::filesystem::path &images_path, const std::filesystem::path &labels_path) {
    const std::vector<std::uint8_t> img = read_maybe_gz(images_path);
    const std::vector<std::uint8_t> lbl = read_maybe_gz(labels_path);
    try {
        return parse_idx(img, lbl);
    } catch (const DataError &e) {
        throw DataError(images_path.filename().string() + " / " + labels_path.filename().string() + ": " + e.what());
    }
}

/**
 * Seeded ordering of the ten digit labels; the K-subset is its first K
 * entries, so the (K+1)-subset under the same seed extends the K-subset.
 */
inline std::vector<std::uint8_t> class_order(std::uint64_t seed) {
    std::vector<std::uint8_t> order(10);
    std::iota(order.begin(), order.end(), std::uint8_t{0});
    Rng rng(derive_seed(seed, 0xc1a55));
    rng.shuffle(std::span<std::uint8_t>(order));
    return order;
}

struct ClassSubset {
    std::vector<std::uint8_t> class_map; // original label of class index k
    std::vector<std::size_t> rows;       // indices into the raw dataset, file order
    std::vector<std::size_t> labels;     // class index per row
    std::size_t k_classes() const noexcept { return class_map.size(); }
};

/// Rows whose label is in class_map, capped to the first per_class_cap per class (0 = no cap).
inline ClassSubset subset_for(const RawDataset &raw, std::vector<std::uint8_t> class_map, std::size_t per_class_cap = 0) {
    ClassSubset out;
    std::array<int, 10> index{};
    index.fill(-1);
    for (std::size_t k = 0; k < class_map.size(); ++k) index.at(class_map[k]) = static_cast<int>(k);
    std::vector<std::size_t> taken(class_map.size(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const int k = index[raw.labels[i]];
        if (k < 0) continue;
        if (per_class_cap && taken[k] >= per_class_cap) continue;
        ++taken[k];
        out.rows.push_back(i);
        out.labels.push_back(static_cast<std::size_t>(k));
    }
    for (std::size_t k = 0; k < class_map.size(); ++k) {
        if (taken[k] == 0) throw DataError("class " + std::to_string(class_map[k]) + " has no samples");
    }
    out.class_map = std::move(class_map);
    return out;
}

inline ClassSubset select_classes(const RawDataset &raw, std::size_t k, std::uint64_t seed, std::size_t per_class_cap = 0) {
    std::array<bool, 10> present{};
    for (std::uint8_t y : raw.labels) present[y] = true;
    const auto available = static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
    if (k < 2 || k > available) {
        throw DataError("K = " + std::to_string(k) + " but " + std::to_string(available) + " classes are available");
    }
    std::vector<std::uint8_t> chosen;
    for (std::uint8_t c : class_order(seed)) {
        if (chosen.size() == k) break;
        if (present[c]) chosen.push_back(c);
    }
    return subset_for(raw, std::move(chosen), per_class_cap);
}

inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <class T>
std::uint64_t fnv1a_values(std::span<const T> v, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a({reinterpret_cast<const std::uint8_t *>(v.data()), v.size_bytes()}, h);
}

/**
 * PCA projection to n_components followed by per-feature min-max to [0, pi].
 * Pixels are taken as byte / 255.
 */
class PcaTransform {
  public:
    Eigen::VectorXd mean;        // per pixel
    Eigen::MatrixXd components;  // n_components x pixels, rows orthonormal
    Eigen::VectorXd eigenvalues; // descending, length n_components
    Eigen::VectorXd lo, hi;      // fit-split extrema of the projections

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }

    /// Centred projections, one row per image.
    Eigen::MatrixXd project(const Eigen::MatrixXd &pixels) const {
        return (pixels.rowwise() - mean.transpose()) * components.transpose();
    }

    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd &projected) const {
        return (projected * components).rowwise() + mean.transpose();
    }

    /// Features in [0, pi]; values beyond the fit extrema are clamped.
    std::vector<std::vector<double>> apply(const Eigen::MatrixXd &pixels) const {
        const Eigen::MatrixXd z = project(pixels);
        std::vector<std::vector<double>> out(static_cast<std::size_t>(z.rows()), std::vector<double>(n_components()));
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                const double f = std::numbers::pi * (z(i, c) - lo[c]) / (hi[c] - lo[c]);
                out[i][c] = std::clamp(f, 0.0, std::numbers::pi);
            }
        }
        return out;
    }

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a_values(std::span<const double>(mean.data(), mean.size()));
        h = fnv1a_values(std::span<const double>(components.data(), components.size()), h);
        h = fnv1a_values(std::span<const double>(lo.data(), lo.size()), h);
        return fnv1a_values(std::span<const double>(hi.data(), hi.size()), h);
    }
};

inline Eigen::MatrixXd pixel_matrix(const RawDataset &raw, std::span<const std::size_t> rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(raw.pixels()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto img = raw.image(rows[r]);
        for (std::size_t p = 0; p < img.size(); ++p) x(r, p) = img[p] / 255.0;
    }
    return x;
}

/**
 * Fits PCA on the given pixels only. Constant pixels are excluded from the
 * eigenproblem and receive zero loading; the sign of each component makes its
 * largest-magnitude loading positive (lowest pixel index on ties).
 */
inline PcaTransform fit_pca(const Eigen::MatrixXd &pixels, std::size_t n_components) {
    const auto d = static_cast<std::size_t>(pixels.cols());
    if (n_components == 0 || n_components > d) {
        throw DataError("2W = " + std::to_string(n_components) + " outside [1, " + std::to_string(d) + "]");
    }
    if (pixels.rows() < 2) throw DataError("PCA needs at least two samples");
    PcaTransform t;
    t.mean = pixels.colwise().mean().transpose();
    const Eigen::MatrixXd centred = pixels.rowwise() - t.mean.transpose();

    std::vector<Eigen::Index> live;
    for (Eigen::Index p = 0; p < centred.cols(); ++p) {
        if (centred.col(p).cwiseAbs().maxCoeff() > 0.0) live.push_back(p);
    }
    if (live.size() < n_components) throw DataError("degenerate variance: fewer varying pixels than 2W");
    Eigen::MatrixXd x(centred.rows(), static_cast<Eigen::Index>(live.size()));
    for (std::size_t j = 0; j < live.size(); ++j) x.col(j) = centred.col(live[j]);
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(pixels.rows() - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw DataError("eigendecomposition failed");

    const Eigen::Index m = cov.rows();
    const double top = es.eigenvalues()[m - 1];
    t.components = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_components), static_cast<Eigen::Index>(d));
    t.eigenvalues.resize(static_cast<Eigen::Index>(n_components));
    for (std::size_t c = 0; c < n_components; ++c) {
        const Eigen::Index src = m - 1 - static_cast<Eigen::Index>(c);
        const double lambda = es.eigenvalues()[src];
        if (!(lambda > 1e-12 * top)) throw DataError("degenerate variance: component " + std::to_string(c) + " has no spread");
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index arg = 0;
        for (Eigen::Index j = 1; j < v.size(); ++j) {
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        }
        if (v[arg] < 0) v = -v;
        for (std::size_t j = 0; j < live.size(); ++j) t.components(static_cast<Eigen::Index>(c), live[j]) = v[j];
        t.eigenvalues[static_cast<Eigen::Index>(c)] = lambda;
    }
    const Eigen::MatrixXd z = t.project(pixels);
    t.lo = z.colwise().minCoeff().transpose();
    t.hi = z.colwise().maxCoeff().transpose();
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        if (!(t.hi[c] > t.lo[c])) throw DataError("degenerate variance: feature " + std::to_string(c) + " is constant");
    }
    return t;
}

struct ReducedDataset {
    Dataset data;                        // features in [0, pi], class-index labels
    std::vector<std::uint8_t> class_map; // original label per class index

    std::vector<double> target(std::size_t i) const { return one_hot(data.k_classes, data.labels.at(i)); }
};

struct ReducedSplit {
    ReducedDataset train, test;
    PcaTransform transform;
};

/// Fits the transform on the train subset only and applies it to both splits.
inline ReducedSplit reduce_and_scale(const RawDataset &train_raw, const ClassSubset &train, const RawDataset &test_raw,
                                     const ClassSubset &test, std::size_t n_wires) {
    if (train.class_map != test.class_map) throw DataError("train and test subsets select different classes");
    ReducedSplit out;
    out.transform = fit_pca(pixel_matrix(train_raw, train.rows), 2 * n_wires);
    const auto fill = [&](ReducedDataset &r, const RawDataset &raw, const ClassSubset &s) {
        r.data.features = out.transform.apply(pixel_matrix(raw, s.rows));
        r.data.labels = s.labels;
        r.data.k_classes = s.k_classes();
        r.class_map = s.class_map;
    };
    fill(out.train, train_raw, train);
    fill(out.test, test_raw, test);
    return out;
}

// Flat binary layout, little-endian host order:
//   "EVQD" u32 version u64 n u64 dim u64 k, k class bytes, n*dim doubles, n u64 labels
inline constexpr std::uint32_t kReducedFormatVersion = 1;

inline std::vector<std::uint8_t> serialize(const ReducedDataset &r) {
    std::vector<std::uint8_t> out;
    const auto put = [&out](const void *p, std::size_t n) {
        const auto *b = static_cast<const std::uint8_t *>(p);
        out.insert(out.end(), b, b + n);
    };
    const std::uint64_t n = r.data.size();
    const std::uint64_t dim = n ? r.data.features[0].size() : 0;
    const std::uint64_t k = r.data.k_classes;
    put("EVQD", 4);
    put(&kReducedFormatVersion, 4);
    put(&n, 8);
    put(&dim, 8);
    put(&k, 8);
    put(r.class_map.data(), r.class_map.size());
    for (const auto &f : r.data.features) put(f.data(), f.size() * sizeof(double));
    for (std::size_t y : r.data.labels) {
        const std::uint64_t v = y;
        put(&v, 8);
    }
    return out;
}

inline ReducedDataset deserialize(std::span<const std::uint8_t> bytes) {
    std::size_t at = 0;
    const auto get = [&](void *p, std::size_t n) {
        if (at + n > bytes.size()) throw DataError("reduced dataset: truncated");
        std::memcpy(p, bytes.data() + at, n);
        at += n;
    };
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t n = 0, dim = 0, k = 0;
    get(magic, 4);
    if (std::memcmp(magic, "EVQD", 4) != 0) throw DataError("reduced dataset: bad magic");
    get(&version, 4);
    if (version != kReducedFormatVersion) throw DataError("reduced dataset: unsupported version " + std::to_string(version));
    get(&n, 8);
    get(&dim, 8);
    get(&k, 8);
    if (k > 10 || dim > 784 || n * (dim * 8 + 8) > bytes.size()) throw DataError("reduced dataset: bad header");
    ReducedDataset r;
    r.class_map.resize(k);
    get(r.class_map.data(), k);
    r.data.k_classes = k;
    r.data.features.assign(n, std::vector<double>(dim));
    for (auto &f : r.data.features) get(f.data(), dim * sizeof(double));
    r.data.labels.resize(n);
    for (auto &y : r.data.labels) {
        std::uint64_t v = 0;
        get(&v, 8);
        y = v;
    }
    if (at != bytes.size()) throw DataError("reduced dataset: trailing bytes");
    r.data.validate(dim / 2);
    return r;
}

/// Writes via a temporary sibling and rename so readers never see a partial file.
inline void write_atomic(const std::filesystem::path &path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CacheManifest {
    std::uint64_t seed{0};
    std::size_t k_classes{0};
    std::size_t n_wires{0};
    std::size_t per_class_cap{0};
    std::uint64_t transform_hash{0};

    std::string to_text() const {
        std::ostringstream os;
        os << "format: " << kReducedFormatVersion << "\nseed: " << seed << "\nk: " << k_classes << "\nw: " << n_wires
           << "\nper_class_cap: " << per_class_cap << "\ntransform_hash: " << std::hex << std::setw(16) << std::setfill('0')
           << transform_hash << "\n";
        return os.str();
    }
};

/// `<stem>.train.bin`, `<stem>.test.bin` and `<stem>.manifest`.
inline void save_cache(const std::filesystem::path &stem, const ReducedSplit &split, CacheManifest manifest) {
    const auto as_view = [](const std::vector<std::uint8_t> &b) {
        return std::string_view(reinterpret_cast<const char *>(b.data()), b.size());
    };
    manifest.transform_hash = split.transform.hash();
    write_atomic(stem.string() + ".train.bin", as_view(serialize(split.train)));
    write_atomic(stem.string() + ".test.bin", as_view(serialize(split.test)));
    write_atomic(stem.string() + ".manifest", manifest.to_text());
}

/// CSV with columns f0..f{2W-1}, label, original_label.
inline std::string to_csv(const ReducedDataset &r) {
    std::ostringstream os;
    os << std::setprecision(17);
    const std::size_t dim = r.data.size() ? r.data.features[0].size() : 0;
    for (std::size_t c = 0; c < dim; ++c) os << 'f' << c << ',';
    os << "label,original_label\n";
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        for (double v : r.data.features[i]) os << v << ',';
        os << r.data.labels[i] << ',' << int{r.class_map[r.data.labels[i]]} << '\n';
    }
    return os.str();
}

} // namespace edgevqc
