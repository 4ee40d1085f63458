#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsr/image.hpp"
#include "uwsr/nn/checkpoint.hpp"
#include "uwsr/nn/generator.hpp"

namespace uwsr::infer {

struct TileConfig {
    int tile_size = 0;  // 0 processes the whole image at once
    int tile_pad = 16;  // overlap around each tile, in input pixels
    int pre_pad = 0;    // reflected rows/columns appended bottom/right, cropped after upscaling
};

void validate(const TileConfig& tiles);
nlohmann::json to_json(const TileConfig& tiles);

enum class WeightsChoice { Ema, Raw };
std::string_view to_string(WeightsChoice weights) noexcept;
WeightsChoice parse_weights_choice(std::string_view text);

struct LoadedGenerator {
    std::unique_ptr<nn::Generator<float>> net;
    std::filesystem::path path;  // the file the weights came from
    std::string sha256;
    nn::CheckpointMeta meta;
};

// Accepts a converted archive, an upstream .pth (params_ema or params by
// `weights`) or a training output directory (net_g_ema or net_g).
LoadedGenerator load_generator(const std::filesystem::path& checkpoint, WeightsChoice weights = WeightsChoice::Ema);

// 3 x H x W -> 3 x 4H x 4W, clipped to [0, 1].
ImageF upscale(const ImageF& img, const nn::Generator<float>& generator, const TileConfig& tiles = {});

struct FileResult {
    std::filesystem::path input;
    std::filesystem::path output;  // empty on failure
    std::string error;
    double seconds = 0.0;
    int width = 0, height = 0;          // input
    int out_width = 0, out_height = 0;  // output
    bool ok() const { return error.empty(); }
};

struct UpscaleRun {
    std::vector<FileResult> files;
    nlohmann::json manifest;
    std::size_t failures() const;
    std::vector<std::filesystem::path> written() const;
};

// `input` is an image or a directory of images (not recursive, sorted by
// name). Writes <stem>_x4.png per input plus manifest.json; per-file errors
// are recorded and the run continues.
UpscaleRun upscale_path(const std::filesystem::path& input, const std::filesystem::path& output_dir,
                        const LoadedGenerator& generator, const TileConfig& tiles = {});

}  // namespace uwsr::infer
