#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/nn/archive.hpp"
#include "uwsr/nn/checkpoint.hpp"

namespace uwsr::nn {

// Entries of a zip file (stored or deflated members only).
class ZipReader {
public:
    explicit ZipReader(std::vector<unsigned char> bytes);
    static bool looks_like_zip(const std::vector<unsigned char>& bytes);

    std::vector<std::string> names() const;
    bool contains(const std::string& name) const { return members_.contains(name); }
    std::vector<unsigned char> read(const std::string& name) const;

private:
    struct Member {
        std::uint16_t method;
        std::uint64_t compressed_size;
        std::uint64_t size;
        std::uint64_t local_offset;
    };
    std::vector<unsigned char> bytes_;
    std::map<std::string, Member> members_;
};

struct TorchImport {
    TensorArchive archive;      // tensors of the selected state dict, file order
    std::string selected_key;   // "params_ema", "params", ... or "" for a flat dict
    std::vector<std::string> top_level_keys;
};

// Reads a PyTorch checkpoint (zip container or the legacy single-stream
// format) without Python. `key` picks a nested state dict; "auto" prefers
// params_ema, then params, then state_dict, then the top-level dict.
TorchImport read_torch_checkpoint(const std::filesystem::path& path, const std::string& key = "auto");

// Recognizes the architecture from tensor names and infers its config.
CheckpointMeta infer_checkpoint_meta(const TensorArchive& archive);

struct ConversionResult {
    CheckpointMeta meta;
    LoadReport report;  // strict load of the converted tensors into a fresh model
    std::string selected_key;
    std::filesystem::path output;
};

// One-time import of an upstream .pth (or any archive this library reads)
// into the named-tensor format. The tensors are checked by a strict load
// into the inferred architecture before anything is written; VGG archives
// drop the classifier head.
ConversionResult convert_checkpoint(const std::filesystem::path& input, const std::filesystem::path& output,
                                    const std::string& key = "auto");

// Reads either a named-tensor archive or a PyTorch checkpoint.
TensorArchive read_any_checkpoint(const std::filesystem::path& path, const std::string& key = "auto");

}  // namespace uwsr::nn
