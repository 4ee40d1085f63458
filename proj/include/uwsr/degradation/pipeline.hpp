#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <json.hpp>

#include "uwsr/degradation/jpeg.hpp"
#include "uwsr/degradation/kernels.hpp"
#include "uwsr/degradation/noise.hpp"
#include "uwsr/degradation/resample.hpp"
#include "uwsr/image.hpp"
#include "uwsr/random.hpp"

namespace uwsr::degradation {

struct JpegStageConfig {
    Range quality{30.0, 95.0};  // integer qualities drawn uniformly from [lo, hi]
    ChromaSubsampling subsampling = ChromaSubsampling::k420;
};

// Stage-2 resizes are taken relative to the final LR size rather than the
// stage input, so stage-2 blur and noise act near the LR resolution.
enum class ResizeBase { Input, Target };

struct StageConfig {
    BlurStageConfig blur;
    ResizeStageConfig resize;
    ResizeBase resize_base = ResizeBase::Input;
    NoiseStageConfig noise;
    bool jpeg_enabled = true;
    JpegStageConfig jpeg;
};

struct FinalStageConfig {
    double sinc_prob = 0.8;
    int min_kernel_size = 7;
    int max_kernel_size = 21;
    Range omega{1.0471975511965976, 3.141592653589793};  // [pi/3, pi]
    std::array<double, 3> interp_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};  // area, bilinear, bicubic
    bool randomize_order = true;
    double sinc_first_prob = 0.5;  // resize+sinc before JPEG; only used when randomize_order
    JpegStageConfig jpeg;
};

struct DegradationConfig {
    int scale = 4;
    int kernel_size = 21;  // every sampled kernel is zero-padded to this size
    StageConfig stage1;
    StageConfig stage2;
    FinalStageConfig final_stage;

    // The second-order recipe with the toolkit defaults.
    static DegradationConfig defaults();
    // Delta kernels, keep-resize, zero noise, quality-100 4:4:4 JPEG, no sinc
    // and bicubic resampling: a bicubic x4 downsample up to codec rounding.
    static DegradationConfig identity();
};

void validate(const DegradationConfig& config);

struct BlurRecord {
    bool applied = false;
    KernelSpec spec;
    Kernel kernel;
    friend bool operator==(const BlurRecord&, const BlurRecord&) = default;
};

struct StagePlan {
    BlurRecord blur;
    ResizeRecord resize;
    NoiseRecord noise;
    std::optional<int> jpeg_quality;
    ChromaSubsampling jpeg_subsampling = ChromaSubsampling::k420;
    friend bool operator==(const StagePlan&, const StagePlan&) = default;
};

struct FinalPlan {
    bool sinc_first = true;  // resize + sinc, then JPEG; otherwise JPEG first
    InterpMode mode = InterpMode::Bicubic;
    BlurRecord sinc;
    int jpeg_quality = 95;
    ChromaSubsampling jpeg_subsampling = ChromaSubsampling::k420;
    friend bool operator==(const FinalPlan&, const FinalPlan&) = default;
};

// Every random choice for one image; apply_plan(hr, plan) is a pure function.
struct DegradationPlan {
    std::uint64_t seed = 0;
    int scale = 4;
    int hr_height = 0;
    int hr_width = 0;
    StagePlan stage1;
    StagePlan stage2;
    FinalPlan final_stage;
    friend bool operator==(const DegradationPlan&, const DegradationPlan&) = default;
};

DegradationPlan sample_plan(std::uint64_t seed, const DegradationConfig& config, int hr_height, int hr_width);
ImageF apply_plan(const ImageF& hr, const DegradationPlan& plan);

struct DegradeResult {
    ImageF lr;
    DegradationPlan plan;
};

// Draws one seed from `rng`, samples a plan from it and applies it.
DegradeResult degrade(const ImageF& hr, Rng& rng, const DegradationConfig& config);

nlohmann::json to_json(const DegradationConfig& config);
DegradationConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DegradationPlan& plan);
DegradationPlan plan_from_json(const nlohmann::json& j);

}  // namespace uwsr::degradation
