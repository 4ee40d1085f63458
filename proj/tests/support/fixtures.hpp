#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "uwsr/image.hpp"

namespace uwsr::testing {

// Procedural underwater-looking scene: depth gradient, caustics, textured
// rocks and striped fish. Values lie on the 8-bit grid so PNG is lossless.
ImageF underwater_scene(int height, int width, std::uint64_t seed);

// i.i.d. uniform values in [lo, hi].
ImageF random_image(int channels, int height, int width, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f);

ImageF constant_image(int channels, int height, int width, float value);

class TempDir {
public:
    explicit TempDir(const std::string& prefix = "uwsr");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct UsrTreeOptions {
    int train_count = 8;
    int test_count = 4;
    int hr_width = 64;
    int hr_height = 48;
    int scale = 4;
    bool with_train_lr = false;
    bool with_test_lr = true;
    int distinct_scenes = 4;  // files beyond this count are byte copies
};

// Writes a USR-248 style tree: <root>/train/hr, <root>/test/hr, <root>/test/lr_4x.
void write_usr_tree(const std::filesystem::path& root, const UsrTreeOptions& options);

}  // namespace uwsr::testing
