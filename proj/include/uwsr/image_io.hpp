#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uwsr/image.hpp"

namespace uwsr {

struct ImageInfo {
    int width = 0;
    int height = 0;
    int channels = 0;   // as stored in the file, before any conversion
    int bit_depth = 8;
};

// Reads only the file header (PNG IHDR or JPEG SOFn).
ImageInfo probe_image(const std::filesystem::path& path);

// Decodes PNG or JPEG into a 3-channel image in [0, 1]. Grayscale is
// replicated, alpha is dropped, 16-bit samples are divided by 65535.
ImageF load_image(const std::filesystem::path& path);
ImageF decode_image(std::span<const std::uint8_t> bytes);

// 8-bit RGB PNG; values are clipped to [0, 1] and rounded half away from zero.
void save_png(const ImageF& img, const std::filesystem::path& path);

enum class ChromaSubsampling { k444, k420 };

std::vector<std::uint8_t> encode_jpeg(const ImageF& img, int quality,
                                      ChromaSubsampling subsampling = ChromaSubsampling::k420);
ImageF decode_jpeg(std::span<const std::uint8_t> bytes);

bool is_image_file(const std::filesystem::path& path);

}  // namespace uwsr
