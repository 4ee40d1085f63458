#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "uwsr/nn/tensor.hpp"

namespace uwsr::nn {

// Element types of the safetensors format that the toolkit reads.
enum class DType { F16, BF16, F32, F64, I64, I32, U8 };

std::string_view to_string(DType dtype) noexcept;
DType parse_dtype(std::string_view text);
std::size_t dtype_size(DType dtype) noexcept;

struct ArchiveEntry {
    DType dtype = DType::F32;
    Shape shape;
    std::vector<unsigned char> bytes;  // little-endian, row-major

    std::size_t numel() const { return nn::numel(shape); }
    template <typename T>
    std::vector<T> values() const;  // converted from the stored dtype
};

// Named tensors in insertion order plus string metadata; serialized as a
// safetensors file.
class TensorArchive {
public:
    std::map<std::string, std::string> metadata;

    template <typename T>
    void add(const std::string& name, const Shape& shape, const std::vector<T>& values);
    void add_entry(const std::string& name, ArchiveEntry entry);

    bool contains(const std::string& name) const { return index_.contains(name); }
    const ArchiveEntry& at(const std::string& name) const;
    const std::vector<std::pair<std::string, ArchiveEntry>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::vector<unsigned char> serialize() const;
    static TensorArchive parse(const std::vector<unsigned char>& bytes);

    void save(const std::filesystem::path& path) const;  // atomic
    static TensorArchive load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, ArchiveEntry>> entries_;
    std::map<std::string, std::size_t> index_;
};

float half_to_float(std::uint16_t h) noexcept;
float bfloat16_to_float(std::uint16_t h) noexcept;

}  // namespace uwsr::nn
