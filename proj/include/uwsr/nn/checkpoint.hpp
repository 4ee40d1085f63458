#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/nn/archive.hpp"
#include "uwsr/nn/network.hpp"

namespace uwsr::nn {

struct CheckpointMeta {
    std::string architecture;  // rrdbnet, unet_discriminator_sn, vgg19_features
    nlohmann::json config = nlohmann::json::object();
    int scale = 4;
    std::int64_t iteration = 0;
    bool is_ema = false;
    std::string source;  // free text, e.g. the archive a conversion started from
};

struct ShapeIssue {
    std::string name;
    Shape expected;
    Shape found;
};

struct LoadReport {
    std::vector<std::string> matched;
    std::vector<std::string> missing;     // in the model, not in the file
    std::vector<std::string> unexpected;  // in the file, not in the model
    std::vector<ShapeIssue> shape_mismatches;

    bool clean() const { return missing.empty() && unexpected.empty() && shape_mismatches.empty(); }
    std::string summary() const;
    nlohmann::json to_json() const;
};

// Sidecar next to an archive: "g.safetensors" -> "g.json".
std::filesystem::path sidecar_path(const std::filesystem::path& archive);

template <typename T>
TensorArchive to_archive(const Network<T>& net, const CheckpointMeta& meta);

// Writes the archive and its JSON sidecar (metadata, hash, key manifest).
void save_archive(TensorArchive archive, const CheckpointMeta& meta, const std::filesystem::path& path);
template <typename T>
void save_checkpoint(const Network<T>& net, const CheckpointMeta& meta, const std::filesystem::path& path);

// Strict mode throws StrictMismatch, leaving the network untouched, unless
// names and shapes agree exactly. Non-strict copies the matching intersection.
template <typename T>
LoadReport load_archive(const TensorArchive& archive, Network<T>& net, bool strict);

template <typename T>
LoadReport load_checkpoint(const std::filesystem::path& path, Network<T>& net, bool strict);

// Reads the metadata stored inside an archive written by save_checkpoint.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);
CheckpointMeta meta_from_archive(const TensorArchive& archive);
void write_meta(const CheckpointMeta& meta, TensorArchive& archive);

template <typename T>
nlohmann::json key_manifest(const Network<T>& net);

}  // namespace uwsr::nn
