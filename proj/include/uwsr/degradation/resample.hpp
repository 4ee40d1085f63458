#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "uwsr/degradation/kernels.hpp"
#include "uwsr/image.hpp"
#include "uwsr/random.hpp"

namespace uwsr::degradation {

// Per-channel 2-D correlation with reflect (mirror, edge not repeated)
// padding. Results are clipped to [0, 1] when the kernel has negative lobes.
ImageF apply_blur(const ImageF& img, const Kernel& kernel);

// Interpolation modes follow half-pixel-centre sampling without antialiasing.
// Area is adaptive average pooling; bicubic uses a = -0.75 with clamped taps.
enum class InterpMode { Area, Bilinear, Bicubic, Nearest };

inline constexpr std::array<InterpMode, 3> kRandomInterpModes = {InterpMode::Area, InterpMode::Bilinear,
                                                                   InterpMode::Bicubic};

std::string_view to_string(InterpMode mode) noexcept;
InterpMode parse_interp_mode(std::string_view text);

ImageF resize(const ImageF& img, int out_height, int out_width, InterpMode mode);

enum class ResizeDirection { Up, Down, Keep };

std::string_view to_string(ResizeDirection direction) noexcept;
ResizeDirection parse_resize_direction(std::string_view text);

struct ResizeStageConfig {
    std::array<double, 3> direction_weights{0.2, 0.7, 0.1};  // up, down, keep
    Range scale{0.15, 1.5};                                   // down draws [lo, 1), up draws (1, hi]
    std::array<double, 3> interp_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};  // area, bilinear, bicubic
};

struct ResizeRecord {
    ResizeDirection direction = ResizeDirection::Keep;
    double scale = 1.0;
    InterpMode mode = InterpMode::Bilinear;
    int out_height = 0;
    int out_width = 0;
    friend bool operator==(const ResizeRecord&, const ResizeRecord&) = default;
};

void validate(const ResizeStageConfig& config);

// Draws direction, factor and interpolation. Output dims are
// round(scale * base) with a floor of 1, where base defaults to the input dims.
ResizeRecord sample_resize(Rng& rng, const ResizeStageConfig& config, int base_height, int base_width);
ImageF apply_resize(const ImageF& img, const ResizeRecord& record);
ImageF random_resize(const ImageF& img, Rng& rng, const ResizeStageConfig& config,
                     ResizeRecord* record = nullptr);

}  // namespace uwsr::degradation
