#include "uwsr/nn/archive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include <json.hpp>

#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"

namespace uwsr::nn {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

std::string_view to_string(DType dtype) noexcept {
    switch (dtype) {
        case DType::F16: return "F16";
        case DType::BF16: return "BF16";
        case DType::F32: return "F32";
        case DType::F64: return "F64";
        case DType::I64: return "I64";
        case DType::I32: return "I32";
        case DType::U8: return "U8";
    }
    return "F32";
}

DType parse_dtype(std::string_view text) {
    for (DType d : {DType::F16, DType::BF16, DType::F32, DType::F64, DType::I64, DType::I32, DType::U8}) {
        if (to_string(d) == text) return d;
    }
    fail(ErrorCode::ParseError, "unsupported tensor dtype '" + std::string(text) + "'");
}

std::size_t dtype_size(DType dtype) noexcept {
    switch (dtype) {
        case DType::F16:
        case DType::BF16: return 2;
        case DType::F32:
        case DType::I32: return 4;
        case DType::F64:
        case DType::I64: return 8;
        case DType::U8: return 1;
    }
    return 4;
}

float half_to_float(std::uint16_t h) noexcept {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    const std::uint32_t mant = h & 0x3ffu;
    if (exp == 0) {
        const float sub = std::ldexp(static_cast<float>(mant), -24);
        return sign ? -sub : sub;
    }
    std::uint32_t bits = 0;
    if (exp == 31) {
        bits = sign | 0x7f800000u | (mant << 13);
    } else {
        bits = sign | ((exp + 112u) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
}

float bfloat16_to_float(std::uint16_t h) noexcept { return std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16); }

template <typename T>
std::vector<T> ArchiveEntry::values() const {
    const std::size_t n = numel();
    if (bytes.size() != n * dtype_size(dtype)) fail(ErrorCode::ParseError, "tensor byte count does not match its shape");
    std::vector<T> out(n);
    const unsigned char* p = bytes.data();
    auto load = [&](auto tag, std::size_t i) {
        decltype(tag) v;
        std::memcpy(&v, p + i * sizeof(v), sizeof(v));
        return v;
    };
    for (std::size_t i = 0; i < n; ++i) {
        switch (dtype) {
            case DType::F16: out[i] = static_cast<T>(half_to_float(load(std::uint16_t{}, i))); break;
            case DType::BF16: out[i] = static_cast<T>(bfloat16_to_float(load(std::uint16_t{}, i))); break;
            case DType::F32: out[i] = static_cast<T>(load(float{}, i)); break;
            case DType::F64: out[i] = static_cast<T>(load(double{}, i)); break;
            case DType::I64: out[i] = static_cast<T>(load(std::int64_t{}, i)); break;
            case DType::I32: out[i] = static_cast<T>(load(std::int32_t{}, i)); break;
            case DType::U8: out[i] = static_cast<T>(p[i]); break;
        }
    }
    return out;
}

namespace {

template <typename T>
constexpr DType dtype_of() {
    if constexpr (std::is_same_v<T, float>) return DType::F32;
    else if constexpr (std::is_same_v<T, double>) return DType::F64;
    else if constexpr (std::is_same_v<T, std::int64_t>) return DType::I64;
    else if constexpr (std::is_same_v<T, std::int32_t>) return DType::I32;
    else return DType::U8;
}

}  // namespace

template <typename T>
void TensorArchive::add(const std::string& name, const Shape& shape, const std::vector<T>& values) {
    if (numel(shape) != values.size()) fail(ErrorCode::ShapeMismatch, name + ": value count does not match shape");
    ArchiveEntry e;
    e.dtype = dtype_of<T>();
    e.shape = shape;
    e.bytes.resize(values.size() * sizeof(T));
    if (!values.empty()) std::memcpy(e.bytes.data(), values.data(), e.bytes.size());
    add_entry(name, std::move(e));
}

void TensorArchive::add_entry(const std::string& name, ArchiveEntry entry) {
    if (name.empty() || name == "__metadata__") fail(ErrorCode::InvalidConfig, "invalid tensor name '" + name + "'");
    if (entry.bytes.size() != entry.numel() * dtype_size(entry.dtype)) {
        fail(ErrorCode::ShapeMismatch, name + ": byte count does not match shape");
    }
    if (!index_.emplace(name, entries_.size()).second) fail(ErrorCode::InvalidConfig, "duplicate tensor name '" + name + "'");
    entries_.emplace_back(name, std::move(entry));
}

const ArchiveEntry& TensorArchive::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorCode::ParseError, "archive has no tensor '" + name + "'");
    return entries_[it->second].second;
}

std::vector<unsigned char> TensorArchive::serialize() const {
    nlohmann::ordered_json header = nlohmann::ordered_json::object();
    if (!metadata.empty()) header["__metadata__"] = metadata;
    std::size_t offset = 0;
    for (const auto& [name, e] : entries_) {
        header[name] = {{"dtype", to_string(e.dtype)}, {"shape", e.shape}, {"data_offsets", {offset, offset + e.bytes.size()}}};
        offset += e.bytes.size();
    }
    std::string text = header.dump();
    while (text.size() % 8 != 0) text += ' ';
    std::vector<unsigned char> out(8 + text.size() + offset);
    const std::uint64_t n = text.size();
    std::memcpy(out.data(), &n, 8);
    std::memcpy(out.data() + 8, text.data(), text.size());
    unsigned char* dst = out.data() + 8 + text.size();
    for (const auto& [name, e] : entries_) {
        if (!e.bytes.empty()) std::memcpy(dst, e.bytes.data(), e.bytes.size());
        dst += e.bytes.size();
    }
    return out;
}

TensorArchive TensorArchive::parse(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 8) fail(ErrorCode::ParseError, "archive is truncated");
    std::uint64_t n = 0;
    std::memcpy(&n, bytes.data(), 8);
    if (n > bytes.size() - 8) fail(ErrorCode::ParseError, "archive header length exceeds file size");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("archive header is not valid JSON: ") + e.what());
    }
    if (!header.is_object()) fail(ErrorCode::ParseError, "archive header must be a JSON object");
    const std::size_t data_start = 8 + n;
    const std::size_t data_size = bytes.size() - data_start;

    struct Pending {
        std::string name;
        ArchiveEntry entry;
        std::size_t begin, end;
    };
    std::vector<Pending> pending;
    TensorArchive archive;
    try {
        for (const auto& [key, value] : header.items()) {
            if (key == "__metadata__") {
                for (const auto& [mk, mv] : value.items()) archive.metadata[mk] = mv.get<std::string>();
                continue;
            }
            Pending p;
            p.name = key;
            p.entry.dtype = parse_dtype(value.at("dtype").get<std::string>());
            p.entry.shape = value.at("shape").get<Shape>();
            const auto offsets = value.at("data_offsets").get<std::vector<std::size_t>>();
            if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_size) {
                fail(ErrorCode::ParseError, key + ": data offsets out of range");
            }
            p.begin = offsets[0];
            p.end = offsets[1];
            pending.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("malformed archive header: ") + e.what());
    }
    // Keep the on-disk order so a round trip preserves it.
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) { return a.begin < b.begin; });
    for (auto& p : pending) {
        const auto* src = bytes.data() + data_start;
        p.entry.bytes.assign(src + p.begin, src + p.end);
        archive.add_entry(p.name, std::move(p.entry));
    }
    return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    write_file_atomic(path, bytes.data(), bytes.size());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) { return parse(read_file(path)); }

template std::vector<float> ArchiveEntry::values<float>() const;
template std::vector<double> ArchiveEntry::values<double>() const;
template std::vector<std::int64_t> ArchiveEntry::values<std::int64_t>() const;
template void TensorArchive::add(const std::string&, const Shape&, const std::vector<float>&);
template void TensorArchive::add(const std::string&, const Shape&, const std::vector<double>&);
template void TensorArchive::add(const std::string&, const Shape&, const std::vector<std::int64_t>&);
template void TensorArchive::add(const std::string&, const Shape&, const std::vector<unsigned char>&);

}  // namespace uwsr::nn
