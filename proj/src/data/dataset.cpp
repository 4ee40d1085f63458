#include "uwsr/data/dataset.hpp"

#include <algorithm>
#include <map>

#include "uwsr/error.hpp"
#include "uwsr/image_io.hpp"

namespace uwsr::data {
namespace fs = std::filesystem;

std::string_view to_string(Split split) noexcept { return split == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    fail(ErrorCode::InvalidConfig, "split must be 'train' or 'test', got '" + std::string(text) + "'");
}

bool DatasetIndex::has_lr() const noexcept {
    return !pairs.empty() && std::all_of(pairs.begin(), pairs.end(), [](const ImagePair& p) { return p.lr_path.has_value(); });
}

std::optional<Size> DatasetIndex::uniform_hr_size() const {
    if (pairs.empty()) return std::nullopt;
    const Size first = pairs.front().hr_size;
    for (const auto& p : pairs) {
        if (!(p.hr_size == first)) return std::nullopt;
    }
    return first;
}

namespace {

std::optional<fs::path> first_existing_dir(const fs::path& parent, std::initializer_list<const char*> names) {
    for (const char* name : names) {
        fs::path candidate = parent / name;
        if (fs::is_directory(candidate)) return candidate;
    }
    return std::nullopt;
}

std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
        const std::string stem = entry.path().stem().string();
        if (!out.emplace(stem, entry.path()).second) {
            fail(ErrorCode::UnpairedImage, "duplicate stem '" + stem + "' in " + dir.string());
        }
    }
    return out;
}

}  // namespace

DatasetIndex scan_dataset(const fs::path& root, Split split, int scale, const ScanOptions& options) {
    if (scale <= 0) fail(ErrorCode::InvalidRange, "scale must be positive");
    if (!fs::is_directory(root)) fail(ErrorCode::MissingFolder, "dataset root not found: " + root.string());

    const auto split_dir = split == Split::Train ? first_existing_dir(root, {"train", "train_val", "TRAIN"})
                                                 : first_existing_dir(root, {"test", "TEST"});
    if (!split_dir) {
        fail(ErrorCode::MissingFolder, "no " + std::string(to_string(split)) + " folder under " + root.string());
    }
    const auto hr_dir = first_existing_dir(*split_dir, {"hr", "HR"});
    if (!hr_dir) fail(ErrorCode::MissingFolder, "no hr folder under " + split_dir->string());

    const std::string lr_name = "lr_" + std::to_string(scale) + "x";
    const std::string lr_name_upper = "LR_" + std::to_string(scale) + "x";
    const auto lr_dir = first_existing_dir(*split_dir, {lr_name.c_str(), lr_name_upper.c_str()});
    if (options.require_lr && !lr_dir) {
        fail(ErrorCode::MissingFolder, "no " + lr_name + " folder under " + split_dir->string());
    }

    const auto hr_files = images_by_stem(*hr_dir);
    if (hr_files.empty()) fail(ErrorCode::MissingFolder, "hr folder is empty: " + hr_dir->string());
    std::map<std::string, fs::path> lr_files;
    if (lr_dir) lr_files = images_by_stem(*lr_dir);

    if (lr_dir) {
        for (const auto& [stem, path] : lr_files) {
            if (!hr_files.contains(stem) && options.strict) {
                fail(ErrorCode::UnpairedImage, "LR image without HR partner: " + path.string());
            }
        }
    }

    DatasetIndex index;
    index.root = root;
    index.split = split;
    index.scale = scale;
    index.pairs.reserve(hr_files.size());
    for (const auto& [stem, hr_path] : hr_files) {
        ImagePair pair;
        pair.stem = stem;
        pair.hr_path = hr_path;
        const ImageInfo hr_info = probe_image(hr_path);
        pair.hr_size = {hr_info.width, hr_info.height};
        if (lr_dir) {
            auto it = lr_files.find(stem);
            if (it == lr_files.end()) {
                if (options.strict) fail(ErrorCode::UnpairedImage, "HR image without LR partner: " + hr_path.string());
            } else {
                const ImageInfo lr_info = probe_image(it->second);
                if (lr_info.width * scale != hr_info.width || lr_info.height * scale != hr_info.height) {
                    fail(ErrorCode::DimensionMismatch,
                         stem + ": lr " + std::to_string(lr_info.width) + "x" + std::to_string(lr_info.height) +
                             " times " + std::to_string(scale) + " != hr " + std::to_string(hr_info.width) + "x" +
                             std::to_string(hr_info.height));
                }
                pair.lr_path = it->second;
                pair.lr_size = Size{lr_info.width, lr_info.height};
            }
        }
        index.pairs.push_back(std::move(pair));
    }
    // std::map iteration already yields stems in sorted order.
    return index;
}

nlohmann::json dataset_manifest(const DatasetIndex& index) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : index.pairs) {
        nlohmann::json row{{"stem", p.stem},
                           {"hr", p.hr_path.string()},
                           {"hr_width", p.hr_size.width},
                           {"hr_height", p.hr_size.height}};
        if (p.lr_path) {
            row["lr"] = p.lr_path->string();
            row["lr_width"] = p.lr_size->width;
            row["lr_height"] = p.lr_size->height;
        } else {
            row["lr"] = nullptr;
        }
        pairs.push_back(std::move(row));
    }
    nlohmann::json manifest{{"root", index.root.string()},
                            {"split", to_string(index.split)},
                            {"scale", index.scale},
                            {"count", index.size()},
                            {"has_lr", index.has_lr()},
                            {"pairs", std::move(pairs)}};
    if (auto size = index.uniform_hr_size()) {
        manifest["hr_size"] = {{"width", size->width}, {"height", size->height}};
    } else {
        manifest["hr_size"] = nullptr;
    }
    return manifest;
}

ImageF random_crop(const ImageF& hr, int crop_size, Rng& rng) {
    if (crop_size <= 0 || crop_size % 4 != 0) {
        fail(ErrorCode::InvalidRange, "crop size must be a positive multiple of 4");
    }
    if (crop_size > hr.height() || crop_size > hr.width()) {
        fail(ErrorCode::CropTooLarge, "crop " + std::to_string(crop_size) + " exceeds image " +
                                          std::to_string(hr.width()) + "x" + std::to_string(hr.height()));
    }
    const int top = uniform_int(rng, 0, hr.height() - crop_size);
    const int left = uniform_int(rng, 0, hr.width() - crop_size);
    return crop(hr, top, left, crop_size, crop_size);
}

ImageF apply_dihedral(const ImageF& patch, DihedralDraw draw) {
    if (patch.height() != patch.width()) fail(ErrorCode::InvalidRange, "augmentation expects a square patch");
    const int n = patch.width();
    const int turns = ((draw.quarter_turns % 4) + 4) % 4;
    ImageF out(patch.channels(), n, n);
    for (int c = 0; c < patch.channels(); ++c) {
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                // Inverse map: output (y, x) pulls from the flipped source rotated back.
                int sy = y, sx = x;
                for (int t = 0; t < turns; ++t) {
                    const int ty = sx, tx = n - 1 - sy;  // undo one counter-clockwise turn
                    sy = ty;
                    sx = tx;
                }
                if (draw.flip) sx = n - 1 - sx;
                out.at(c, y, x) = patch.at(c, sy, sx);
            }
        }
    }
    return out;
}

DihedralDraw draw_augmentation(Rng& rng) {
    DihedralDraw draw;
    draw.flip = bernoulli(rng, 0.5);
    draw.quarter_turns = uniform_int(rng, 0, 3);
    return draw;
}

ImageF augment(const ImageF& patch, Rng& rng) { return apply_dihedral(patch, draw_augmentation(rng)); }

}  // namespace uwsr::data
