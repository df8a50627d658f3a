// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lma/errors.hpp"
#include "lma/rng.hpp"
#include "lma/tensor.hpp"

namespace lma {

/// Labeled vectors, row-major.
struct Dataset {
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> xs;      // [n x input_dim]
    std::vector<std::size_t> ys; // [n]

    std::size_t size() const { return ys.size(); }

    Tensor batch_x(const std::vector<std::size_t>& idx) const {
        Tensor t({idx.size(), input_dim});
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t d = 0; d < input_dim; ++d)
                t.at(i, d) = xs[idx[i] * input_dim + d];
        return t;
    }

    std::vector<std::size_t> batch_y(const std::vector<std::size_t>& idx) const {
        std::vector<std::size_t> out(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = ys[idx[i]];
        return out;
    }

    Tensor all_x() const {
        Tensor t({size(), input_dim});
        t.data() = xs;
        return t;
    }
};

struct DataSplit {
    Dataset train;
    Dataset test;
};

namespace detail {

/// Deterministic 80/20 split through one fixed permutation.
inline DataSplit split_80_20(const Dataset& full, std::uint64_t seed) {
    Rng rng(seed, 7);
    const auto perm = rng.permutation(full.size());
    const std::size_t n_test = full.size() / 5;
    const std::size_t n_train = full.size() - n_test;
    DataSplit out;
    for (Dataset* d : {&out.train, &out.test}) {
        d->input_dim = full.input_dim;
        d->num_classes = full.num_classes;
    }
    auto push = [&](Dataset& d, std::size_t src) {
        for (std::size_t k = 0; k < full.input_dim; ++k)
            d.xs.push_back(full.xs[src * full.input_dim + k]);
        d.ys.push_back(full.ys[src]);
    };
    for (std::size_t i = 0; i < n_train; ++i) push(out.train, perm[i]);
    for (std::size_t i = n_train; i < full.size(); ++i) push(out.test, perm[i]);
    return out;
}

} // namespace detail

/// Number of spiral turns used by the two-spirals task.
inline constexpr double kSpiralTurns = 1.75;

/// Synthetic 2-D tasks: "two-spirals" (two interleaved spiral arms) and
/// "grid-classes" (C classes tiled over a checkerboard of cells, C = 4
/// meaning the parity pair of the cell indices). Deterministic in seed;
/// noise jitters the coordinates after labeling; split is a fixed 80/20
/// permutation.
inline DataSplit gen_synthetic(const std::string& task, std::size_t n_samples, double noise,
                               std::uint64_t seed, std::size_t classes = 4,
                               std::size_t grid_cells = 4) {
    Dataset full;
    full.input_dim = 2;
    Rng rng(seed, 11);
    if (task == "two-spirals") {
        full.num_classes = 2;
        if (n_samples < 10 * full.num_classes)
            throw config_error("two-spirals: need at least " +
                               std::to_string(10 * full.num_classes) + " samples");
        const std::size_t per_class = (n_samples + 1) / 2;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::size_t cls = i % 2;
            const std::size_t j = i / 2;
            const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(per_class);
            const double r = 0.15 + 0.85 * t;
            const double theta = kSpiralTurns * 2.0 * 3.141592653589793 * t +
                                 static_cast<double>(cls) * 3.141592653589793;
            const double nx = rng.normal(), ny = rng.normal();
            full.xs.push_back(r * std::cos(theta) + noise * nx);
            full.xs.push_back(r * std::sin(theta) + noise * ny);
            full.ys.push_back(cls);
        }
    } else if (task == "grid-classes") {
        if (classes < 2) throw config_error("grid-classes: need at least 2 classes");
        if (n_samples < 10 * classes)
            throw config_error("grid-classes: need at least " + std::to_string(10 * classes) +
                               " samples");
        full.num_classes = classes;
        // Factor classes = a*b with a the largest divisor <= sqrt(classes);
        // the label is the cell-index pair (i mod a, j mod b).
        std::size_t a = 1;
        for (std::size_t d = 1; d * d <= classes; ++d)
            if (classes % d == 0) a = d;
        const std::size_t b = classes / a;
        const auto g = static_cast<double>(grid_cells);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double px = rng.uniform(-1.0, 1.0);
            const double py = rng.uniform(-1.0, 1.0);
            auto cell = [g](double v) {
                auto c = static_cast<long>(std::floor((v + 1.0) * 0.5 * g));
                if (c < 0) c = 0;
                if (c >= static_cast<long>(g)) c = static_cast<long>(g) - 1;
                return static_cast<std::size_t>(c);
            };
            const std::size_t label = (cell(px) % a) * b + (cell(py) % b);
            const double nx = rng.normal(), ny = rng.normal();
            full.xs.push_back(px + noise * nx);
            full.xs.push_back(py + noise * ny);
            full.ys.push_back(label);
        }
    } else {
        throw config_error("unknown synthetic task '" + task +
                           "' (expected two-spirals | grid-classes)");
    }
    return detail::split_80_20(full, seed);
}

namespace detail {

inline std::vector<unsigned char> read_all_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open '" + path + "'", 0);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be_u32(const std::vector<unsigned char>& b, std::size_t off) {
    if (b.size() < off + 4)
        throw format_error("truncated header: need 4 bytes", b.size());
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

} // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// IDX image container: big-endian magic 0x00000803, then count, rows,
/// cols, then count*rows*cols unsigned bytes. Pixels are scaled to [0,1].
inline Dataset load_idx_images(const std::string& path) {
    const auto bytes = detail::read_all_bytes(path);
    const std::uint32_t magic = detail::read_be_u32(bytes, 0);
    if (magic != kIdxImageMagic)
        throw format_error("bad image magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }() + " (want 0x00000803)", 0);
    const std::size_t count = detail::read_be_u32(bytes, 4);
    const std::size_t rows = detail::read_be_u32(bytes, 8);
    const std::size_t cols = detail::read_be_u32(bytes, 12);
    const std::size_t expected = 16 + count * rows * cols;
    if (bytes.size() < expected)
        throw format_error("truncated image payload: want " + std::to_string(expected) +
                           " bytes", bytes.size());
    if (bytes.size() > expected)
        throw format_error("trailing bytes after image payload", expected);
    Dataset d;
    d.input_dim = rows * cols;
    d.xs.resize(count * d.input_dim);
    for (std::size_t i = 0; i < count * d.input_dim; ++i)
        d.xs[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    d.ys.assign(count, 0); // labels attached separately
    return d;
}

/// IDX label container: big-endian magic 0x00000801, then count, then
/// count unsigned-byte labels.
inline std::vector<std::size_t> load_idx_labels(const std::string& path) {
    const auto bytes = detail::read_all_bytes(path);
    const std::uint32_t magic = detail::read_be_u32(bytes, 0);
    if (magic != kIdxLabelMagic)
        throw format_error("bad label magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", magic);
            return std::string(buf);
        }() + " (want 0x00000801)", 0);
    const std::size_t count = detail::read_be_u32(bytes, 4);
    const std::size_t expected = 8 + count;
    if (bytes.size() < expected)
        throw format_error("truncated label payload: want " + std::to_string(expected) +
                           " bytes", bytes.size());
    if (bytes.size() > expected)
        throw format_error("trailing bytes after label payload", expected);
    std::vector<std::size_t> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = bytes[8 + i];
    return labels;
}

/// Paired IDX loader; images flattened to vectors, labels as indices.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    Dataset d = load_idx_images(images_path);
    auto labels = load_idx_labels(labels_path);
    if (labels.size() != d.size())
        throw format_error("image/label count mismatch: " + std::to_string(d.size()) +
                           " images vs " + std::to_string(labels.size()) + " labels", 4);
    d.ys = std::move(labels);
    std::size_t max_label = 0;
    for (std::size_t y : d.ys) max_label = std::max(max_label, y);
    d.num_classes = max_label + 1;
    return d;
}

} // namespace lma
