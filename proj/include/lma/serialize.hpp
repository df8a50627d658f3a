// Copyright (C) 2026 the LMA engine authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "lma/errors.hpp"
#include "lma/model.hpp"

namespace lma {

/// Write bytes to path via a temporary file and rename, so readers never
/// observe a half-written file.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw format_error("cannot open '" + tmp + "' for writing", 0);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw format_error("short write to '" + tmp + "'", 0);
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

inline void append_f64le(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline double read_f64le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace detail

inline constexpr const char* kModelMagic = "LMA-MODEL 1";

/// Self-describing model file: text header (magic, architecture as JSON,
/// buffer manifest as JSON, metadata) followed by the raw parameter
/// payload as little-endian 64-bit floats in manifest order.
inline void save_model(Mlp& model, const std::string& path,
                       const nlohmann::json& meta = nlohmann::json::object()) {
    auto buffers = model.buffers();
    nlohmann::json manifest = nlohmann::json::array();
    std::string payload;
    for (auto& b : buffers) {
        manifest.push_back({{"name", b.name}, {"size", b.values->size()}});
        for (double v : *b.values) detail::append_f64le(payload, v);
    }
    std::string out;
    out += kModelMagic;
    out += "\n";
    out += model.arch().to_json().dump();
    out += "\n";
    out += nlohmann::json{{"buffers", manifest}, {"meta", meta}}.dump();
    out += "\nDATA\n";
    out += payload;
    write_file_atomic(path, out);
}

struct LoadedModel {
    std::shared_ptr<Mlp> net;
    nlohmann::json meta;
};

inline LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("cannot open model file '" + path + "'", 0);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    auto next_line = [&](const char* what) {
        const std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos)
            throw format_error(std::string("model file: missing ") + what, pos);
        std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        return line;
    };

    if (next_line("magic line") != kModelMagic)
        throw format_error("model file: bad magic", 0);
    nlohmann::json arch_json, header;
    try {
        arch_json = nlohmann::json::parse(next_line("architecture line"));
        header = nlohmann::json::parse(next_line("manifest line"));
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("model file: bad header json: ") + e.what(), pos);
    }
    if (next_line("DATA separator") != "DATA")
        throw format_error("model file: missing DATA separator", pos);

    LoadedModel out;
    out.net = std::make_shared<Mlp>(ArchSpec::from_json(arch_json), /*seed=*/0);
    out.meta = header.value("meta", nlohmann::json::object());

    auto buffers = out.net->buffers();
    for (const auto& entry : header.at("buffers")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::size_t size = entry.at("size").get<std::size_t>();
        NamedBuffer* target = nullptr;
        for (auto& b : buffers)
            if (b.name == name) {
                target = &b;
                break;
            }
        if (!target)
            throw format_error("model file: buffer '" + name + "' not in architecture", pos);
        if (content.size() - pos < size * 8)
            throw format_error("model file: truncated payload for '" + name + "'",
                               content.size());
        target->values->resize(size);
        const auto* p = reinterpret_cast<const unsigned char*>(content.data() + pos);
        for (std::size_t i = 0; i < size; ++i)
            (*target->values)[i] = detail::read_f64le(p + i * 8);
        pos += size * 8;
    }
    if (pos != content.size())
        throw format_error("model file: trailing bytes after payload", pos);

    // Restore derived flags that live outside the raw buffers.
    for (auto& layer : out.net->layers()) {
        if (auto* l = dynamic_cast<Lma*>(layer.get())) l->mark_ema_init();
        if (auto* bn = dynamic_cast<BatchNorm*>(layer.get())) bn->mark_loaded();
    }
    return out;
}

} // namespace lma
