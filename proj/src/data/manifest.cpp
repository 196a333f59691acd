// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/data/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "gazeforge/core/error.hpp"
#include "gazeforge/io/tensor_file.hpp"

namespace gazeforge::data {

namespace {

constexpr std::string_view kHeaderTag = "#gazeforge-manifest";

template <class T>
std::string shortest(T v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view s, const std::string& where) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DataError(where + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

void check_field(std::string_view s, const char* what) {
    if (s.empty() || s.find_first_of("\t\n\r") != std::string_view::npos) {
        throw UsageError(std::string(what) + " must be non-empty and free of tabs/newlines: '" + std::string(s) + "'");
    }
}

std::string record_line(const FrameRecord& r) {
    check_field(r.subject_id, "subject id");
    check_field(r.frame_id, "frame id");
    std::string line = r.subject_id + '\t' + r.frame_id + '\t' + std::string(to_string(r.split)) + '\t' +
                       shortest(r.gaze_x) + '\t' + shortest(r.gaze_y);
    for (float v : r.landmarks) line += '\t' + shortest(v);
    line += '\t' + (r.has_right() ? r.right_crop : std::string("-"));
    line += '\t' + (r.has_left() ? r.left_crop : std::string("-"));
    return line;
}

}  // namespace

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + std::string(s) + "' (expected train, val, test)");
}

std::array<std::size_t, 3> Manifest::counts() const {
    std::array<std::size_t, 3> c{};
    for (const auto& r : records) ++c[static_cast<std::size_t>(r.split)];
    return c;
}

std::vector<std::size_t> Manifest::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].split == s) out.push_back(i);
    return out;
}

std::vector<std::string> Manifest::subjects() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.subject_id);
    return {s.begin(), s.end()};
}

void Manifest::seal() { fingerprint = dataset_fingerprint(records); }

Digest dataset_fingerprint(const std::vector<FrameRecord>& records) {
    std::string body;
    for (const auto& r : records) body += record_line(r) + '\n';
    return sha256(body);
}

std::string format_manifest(const Manifest& m) {
    const auto c = m.counts();
    std::string out = std::string(kHeaderTag) + "\tversion=" + std::to_string(m.version) +
                      "\tfingerprint=" + to_hex(m.fingerprint) + "\tframes=" + std::to_string(m.records.size()) +
                      "\ttrain=" + std::to_string(c[0]) + "\tval=" + std::to_string(c[1]) +
                      "\ttest=" + std::to_string(c[2]) + '\n';
    for (const auto& r : m.records) out += record_line(r) + '\n';
    return out;
}

Manifest parse_manifest(std::string_view text, const std::string& origin) {
    Manifest m;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto f = split_tabs(line);
        if (!header) {
            if (f[0] != kHeaderTag) throw DataError(where + ": missing manifest header");
            for (std::size_t i = 1; i < f.size(); ++i) {
                const auto eq = f[i].find('=');
                if (eq == std::string_view::npos) continue;
                const auto key = f[i].substr(0, eq), val = f[i].substr(eq + 1);
                if (key == "version") m.version = parse_number<std::uint32_t>(val, where);
                if (key == "fingerprint") m.fingerprint = digest_from_hex(val);
            }
            if (m.version != Manifest::kVersion) {
                throw DataError(where + ": unsupported manifest version " + std::to_string(m.version));
            }
            header = true;
            continue;
        }
        if (f.size() != 15) throw DataError(where + ": expected 15 fields, got " + std::to_string(f.size()));
        FrameRecord r;
        r.subject_id = f[0];
        r.frame_id = f[1];
        try {
            r.split = parse_split(f[2]);
        } catch (const ConfigError& e) {
            throw DataError(where + ": " + e.what());
        }
        r.gaze_x = parse_number<double>(f[3], where);
        r.gaze_y = parse_number<double>(f[4], where);
        for (std::size_t k = 0; k < 8; ++k) r.landmarks[k] = parse_number<float>(f[5 + k], where);
        if (f[13] != "-") r.right_crop = f[13];
        if (f[14] != "-") r.left_crop = f[14];
        m.records.push_back(std::move(r));
    }
    if (!header) throw DataError(origin + ": empty manifest");
    if (dataset_fingerprint(m.records) != m.fingerprint) {
        throw DataError(origin + ": fingerprint does not match manifest contents");
    }
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    io::write_file_atomic(path, format_manifest(m));
}

Manifest read_manifest(const std::filesystem::path& path) {
    return parse_manifest(io::read_file(path), path.string());
}

}  // namespace gazeforge::data
