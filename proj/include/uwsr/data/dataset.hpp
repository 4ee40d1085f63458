#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/image.hpp"
#include "uwsr/random.hpp"

namespace uwsr::data {

enum class Split { Train, Test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct Size {
    int width = 0;
    int height = 0;
    friend bool operator==(const Size&, const Size&) = default;
};

struct ImagePair {
    std::string stem;
    std::filesystem::path hr_path;
    std::optional<std::filesystem::path> lr_path;
    Size hr_size;
    std::optional<Size> lr_size;
};

// USR-248 reference geometry.
inline constexpr Size kUsrHrSize{640, 480};
inline constexpr int kUsrTrainCount = 1060;
inline constexpr int kUsrTestCount = 248;

struct DatasetIndex {
    std::filesystem::path root;
    Split split = Split::Train;
    int scale = 4;
    std::vector<ImagePair> pairs;

    std::size_t size() const noexcept { return pairs.size(); }
    bool has_lr() const noexcept;
    std::optional<Size> uniform_hr_size() const;
};

struct ScanOptions {
    bool strict = true;      // unpaired files are an error instead of being skipped
    bool require_lr = false; // fail when the LR folder is absent
};

// Layout: <root>/<split>/hr plus optional <root>/<split>/lr_<scale>x. The
// split folder may also be spelled train_val / TEST as in the USR-248 release.
DatasetIndex scan_dataset(const std::filesystem::path& root, Split split, int scale,
                          const ScanOptions& options = {});

nlohmann::json dataset_manifest(const DatasetIndex& index);

ImageF random_crop(const ImageF& hr, int crop_size, Rng& rng);

struct DihedralDraw {
    bool flip = false;  // horizontal mirror, applied before rotation
    int quarter_turns = 0;  // counter-clockwise, 0..3
};

ImageF apply_dihedral(const ImageF& patch, DihedralDraw draw);
DihedralDraw draw_augmentation(Rng& rng);
ImageF augment(const ImageF& patch, Rng& rng);

}  // namespace uwsr::data
