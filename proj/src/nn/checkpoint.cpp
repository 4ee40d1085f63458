#include "uwsr/nn/checkpoint.hpp"

#include <cmath>
#include <map>

#include "uwsr/error.hpp"
#include "uwsr/fileio.hpp"

namespace uwsr::nn {
namespace fs = std::filesystem;

std::string LoadReport::summary() const {
    std::string s = std::to_string(matched.size()) + " matched, " + std::to_string(missing.size()) + " missing, " +
                    std::to_string(unexpected.size()) + " unexpected, " + std::to_string(shape_mismatches.size()) +
                    " shape mismatches";
    auto list = [&s](const char* label, const std::vector<std::string>& names) {
        if (names.empty()) return;
        s += std::string("; ") + label + ":";
        for (std::size_t i = 0; i < names.size() && i < 5; ++i) s += " " + names[i];
        if (names.size() > 5) s += " ...";
    };
    list("missing", missing);
    list("unexpected", unexpected);
    for (std::size_t i = 0; i < shape_mismatches.size() && i < 5; ++i) {
        const auto& m = shape_mismatches[i];
        s += "; " + m.name + " expects " + shape_string(m.expected) + " found " + shape_string(m.found);
    }
    return s;
}

nlohmann::json LoadReport::to_json() const {
    nlohmann::json mismatches = nlohmann::json::array();
    for (const auto& m : shape_mismatches) {
        mismatches.push_back({{"name", m.name}, {"expected", m.expected}, {"found", m.found}});
    }
    return {{"matched", matched.size()},
            {"missing", missing},
            {"unexpected", unexpected},
            {"shape_mismatches", mismatches}};
}

fs::path sidecar_path(const fs::path& archive) {
    fs::path p = archive;
    p.replace_extension(".json");
    return p;
}

void write_meta(const CheckpointMeta& meta, TensorArchive& archive) {
    archive.metadata["format"] = "uwsr-checkpoint";
    archive.metadata["architecture"] = meta.architecture;
    archive.metadata["config"] = meta.config.dump();
    archive.metadata["scale"] = std::to_string(meta.scale);
    archive.metadata["iteration"] = std::to_string(meta.iteration);
    archive.metadata["is_ema"] = meta.is_ema ? "true" : "false";
    if (!meta.source.empty()) archive.metadata["source"] = meta.source;
}

CheckpointMeta meta_from_archive(const TensorArchive& archive) {
    CheckpointMeta meta;
    const auto& m = archive.metadata;
    auto get = [&m](const char* key) -> const std::string* {
        auto it = m.find(key);
        return it == m.end() ? nullptr : &it->second;
    };
    try {
        if (auto v = get("architecture")) meta.architecture = *v;
        if (auto v = get("config")) meta.config = nlohmann::json::parse(*v);
        if (auto v = get("scale")) meta.scale = std::stoi(*v);
        if (auto v = get("iteration")) meta.iteration = std::stoll(*v);
        if (auto v = get("is_ema")) meta.is_ema = *v == "true";
        if (auto v = get("source")) meta.source = *v;
    } catch (const std::exception& e) {
        fail(ErrorCode::ParseError, std::string("malformed checkpoint metadata: ") + e.what());
    }
    return meta;
}

CheckpointMeta read_checkpoint_meta(const fs::path& path) { return meta_from_archive(TensorArchive::load(path)); }

template <typename T>
TensorArchive to_archive(const Network<T>& net, const CheckpointMeta& meta) {
    TensorArchive archive;
    write_meta(meta, archive);
    for (const auto& e : net.state()) archive.add(e.name, e.tensor.shape(), e.tensor.values());
    return archive;
}

template <typename T>
nlohmann::json key_manifest(const Network<T>& net) {
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& e : net.state()) {
        keys.push_back({{"name", e.name}, {"shape", e.tensor.shape()}, {"kind", e.buffer ? "buffer" : "parameter"}});
    }
    return keys;
}

void save_archive(TensorArchive archive, const CheckpointMeta& meta, const fs::path& path) {
    write_meta(meta, archive);
    archive.save(path);
    nlohmann::ordered_json side;
    side["architecture"] = meta.architecture;
    side["config"] = meta.config;
    side["scale"] = meta.scale;
    side["iteration"] = meta.iteration;
    side["is_ema"] = meta.is_ema;
    if (!meta.source.empty()) side["source"] = meta.source;
    side["archive"] = path.filename().string();
    side["sha256"] = sha256_file(path);
    nlohmann::json keys = nlohmann::json::array();
    std::size_t count = 0;
    for (const auto& [name, e] : archive.entries()) {
        keys.push_back({{"name", name}, {"shape", e.shape}, {"dtype", to_string(e.dtype)}});
        count += e.numel();
    }
    side["element_count"] = count;
    side["tensors"] = std::move(keys);
    write_text_atomic(sidecar_path(path), side.dump(2) + "\n");
}

template <typename T>
void save_checkpoint(const Network<T>& net, const CheckpointMeta& meta, const fs::path& path) {
    save_archive(to_archive(net, meta), meta, path);
}

template <typename T>
LoadReport load_archive(const TensorArchive& archive, Network<T>& net, bool strict) {
    LoadReport report;
    std::map<std::string, bool> seen;
    for (const auto& e : net.state()) {
        seen[e.name] = false;
        if (!archive.contains(e.name)) {
            report.missing.push_back(e.name);
            continue;
        }
        seen[e.name] = true;
        const auto& entry = archive.at(e.name);
        if (entry.shape != e.tensor.shape()) {
            report.shape_mismatches.push_back({e.name, e.tensor.shape(), entry.shape});
            continue;
        }
        report.matched.push_back(e.name);
    }
    for (const auto& [name, entry] : archive.entries()) {
        if (!seen.contains(name)) report.unexpected.push_back(name);
    }
    if (strict && !report.clean()) {
        fail(ErrorCode::StrictMismatch, "strict load into " + net.architecture() + " failed: " + report.summary());
    }

    // Convert everything before touching the network so a bad value leaves it intact.
    std::vector<std::pair<Tensor<T>, std::vector<T>>> staged;
    for (const auto& name : report.matched) {
        auto values = archive.at(name).template values<T>();
        for (T v : values) {
            if (!std::isfinite(static_cast<double>(v))) fail(ErrorCode::ParseError, name + " holds non-finite values");
        }
        staged.emplace_back(net.find(name), std::move(values));
    }
    for (auto& [tensor, values] : staged) {
        Tensor<T> t = tensor;
        t.values() = std::move(values);
    }
    return report;
}

template <typename T>
LoadReport load_checkpoint(const fs::path& path, Network<T>& net, bool strict) {
    if (!fs::exists(path)) fail(ErrorCode::CheckpointMissing, "checkpoint not found: " + path.string());
    return load_archive(TensorArchive::load(path), net, strict);
}

#define UWSR_INSTANTIATE_CKPT(T)                                                          \
    template TensorArchive to_archive(const Network<T>&, const CheckpointMeta&);         \
    template nlohmann::json key_manifest(const Network<T>&);                              \
    template void save_checkpoint(const Network<T>&, const CheckpointMeta&, const fs::path&); \
    template LoadReport load_archive(const TensorArchive&, Network<T>&, bool);            \
    template LoadReport load_checkpoint(const fs::path&, Network<T>&, bool);

UWSR_INSTANTIATE_CKPT(float)
UWSR_INSTANTIATE_CKPT(double)

}  // namespace uwsr::nn
