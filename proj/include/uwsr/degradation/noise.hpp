#pragma once

#include <cstdint>
#include <string_view>

#include "uwsr/degradation/kernels.hpp"
#include "uwsr/image.hpp"
#include "uwsr/random.hpp"

namespace uwsr::degradation {

enum class NoiseKind { Gaussian, Poisson };

std::string_view to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(std::string_view text);

struct NoiseStageConfig {
    double gaussian_prob = 0.5;           // otherwise Poisson
    Range gaussian_sigma{1.0 / 255.0, 30.0 / 255.0};  // on the [0, 1] scale
    Range poisson_scale{0.05, 3.0};
    double gray_prob = 0.4;
};

struct NoiseRecord {
    NoiseKind kind = NoiseKind::Gaussian;
    double strength = 0.0;  // sigma for Gaussian, scale for Poisson
    bool gray = false;
    std::uint64_t seed = 0;
    friend bool operator==(const NoiseRecord&, const NoiseRecord&) = default;
};

void validate(const NoiseStageConfig& config);

// Additive noise field (not yet added, not clipped). Gray noise shares one
// plane across channels. Poisson noise is zero-mean shot noise of the 8-bit
// quantized image, multiplied by the scale.
ImageF make_gaussian_noise(const ImageF& img, double sigma, bool gray, std::uint64_t seed);
ImageF make_poisson_noise(const ImageF& img, double scale, bool gray, std::uint64_t seed);
ImageF make_noise(const ImageF& img, const NoiseRecord& record);

NoiseRecord sample_noise(Rng& rng, const NoiseStageConfig& config);
// img + noise, clipped to [0, 1].
ImageF apply_noise(const ImageF& img, const NoiseRecord& record);
ImageF add_noise(const ImageF& img, Rng& rng, const NoiseStageConfig& config, NoiseRecord* record = nullptr);

}  // namespace uwsr::degradation
