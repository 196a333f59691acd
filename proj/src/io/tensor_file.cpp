// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/io/tensor_file.hpp"

#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "gazeforge/core/error.hpp"

namespace gazeforge::io {

namespace {

template <class U>
void put(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    Reader(std::string_view bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    template <class U>
    U get() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }
    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }
    [[noreturn]] void corrupt(const std::string& what) const {
        throw DataError("tensor file " + origin_ + ": " + what + " at byte " + std::to_string(pos_));
    }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n) corrupt("truncated");
    }
    std::string_view bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

const nn::Tensor<float>& TensorFile::get(const std::string& name) const {
    for (const auto& [n, t] : entries)
        if (n == name) return t;
    throw DataError("tensor file has no entry '" + name + "'");
}

std::string encode_tensor_file(const TensorFile& file) {
    std::string out(kTensorFileMagic, 4);
    put<std::uint16_t>(out, file.version);
    out.append(reinterpret_cast<const char*>(file.fingerprint.data()), file.fingerprint.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.entries.size()));
    for (const auto& [name, t] : file.entries) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw UsageError("tensor name too long: " + name);
        if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw UsageError("tensor rank too large: " + name);
        put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(t.rank()));
        for (auto d : t.shape().dims()) {
            if (d > std::numeric_limits<std::uint32_t>::max()) throw UsageError("tensor extent too large: " + name);
            put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        }
        for (float v : t.values()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

TensorFile decode_tensor_file(std::string_view bytes, const std::string& origin) {
    Reader r(bytes, origin);
    if (r.take(4) != std::string_view(kTensorFileMagic, 4)) r.corrupt("bad magic");
    TensorFile file;
    file.version = r.get<std::uint16_t>();
    if (file.version != kTensorFileVersion) r.corrupt("unsupported version " + std::to_string(file.version));
    const auto fp = r.take(file.fingerprint.size());
    std::memcpy(file.fingerprint.data(), fp.data(), fp.size());
    const std::uint32_t count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = r.get<std::uint16_t>();
        std::string name(r.take(len));
        const std::uint8_t rank = r.get<std::uint8_t>();
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = r.get<std::uint32_t>();
        nn::Shape shape(std::move(dims));
        const std::size_t n = shape.numel();
        if (n > bytes.size() / 4) r.corrupt("entry '" + name + "' larger than file");
        std::vector<float> data(n);
        for (auto& v : data) v = std::bit_cast<float>(r.get<std::uint32_t>());
        file.entries.emplace_back(std::move(name), nn::Tensor<float>(std::move(shape), std::move(data)));
    }
    if (!r.done()) r.corrupt("trailing bytes");
    return file;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
    write_file_atomic(path, encode_tensor_file(file));
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
    return decode_tensor_file(read_file(path), path.string());
}

}  // namespace gazeforge::io
