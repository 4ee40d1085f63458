#include "uwsr/degradation/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "uwsr/error.hpp"

namespace uwsr::degradation {

std::string_view to_string(NoiseKind kind) noexcept { return kind == NoiseKind::Gaussian ? "gaussian" : "poisson"; }

NoiseKind parse_noise_kind(std::string_view text) {
    if (text == "gaussian") return NoiseKind::Gaussian;
    if (text == "poisson") return NoiseKind::Poisson;
    fail(ErrorCode::ParseError, "unknown noise kind '" + std::string(text) + "'");
}

void validate(const NoiseStageConfig& config) {
    if (!config.gaussian_sigma.valid() || config.gaussian_sigma.lo < 0.0) {
        fail(ErrorCode::InvalidRange, "gaussian sigma range must satisfy 0 <= lo <= hi");
    }
    if (!config.poisson_scale.valid() || config.poisson_scale.lo < 0.0) {
        fail(ErrorCode::InvalidRange, "poisson scale range must satisfy 0 <= lo <= hi");
    }
    for (double p : {config.gaussian_prob, config.gray_prob}) {
        if (p < 0.0 || p > 1.0) fail(ErrorCode::InvalidRange, "noise probabilities must lie in [0, 1]");
    }
}

ImageF make_gaussian_noise(const ImageF& img, double sigma, bool gray, std::uint64_t seed) {
    ImageF noise(img.channels(), img.height(), img.width());
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int planes = gray ? 1 : img.channels();
    for (int c = 0; c < planes; ++c) {
        for (float& v : noise.plane(c)) v = static_cast<float>(sigma * normal(rng));
    }
    if (gray) {
        for (int c = 1; c < img.channels(); ++c) {
            std::copy(noise.plane(0).begin(), noise.plane(0).end(), noise.plane(c).begin());
        }
    }
    return noise;
}

namespace {

// Shot noise of one plane of 8-bit quantized values, before scaling.
void poisson_plane(std::span<const float> src, std::span<float> dst, Rng& rng) {
    std::array<bool, 256> seen{};
    int distinct = 0;
    std::vector<float> quantized(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto level = to_u8(src[i]);
        quantized[i] = static_cast<float>(level) / 255.0f;
        if (!seen[level]) {
            seen[level] = true;
            ++distinct;
        }
    }
    const double levels = std::exp2(std::ceil(std::log2(static_cast<double>(distinct))));
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double mean = quantized[i] * levels;
        double sample = 0.0;
        if (mean > 0.0) sample = static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
        dst[i] = static_cast<float>(sample / levels - quantized[i]);
    }
}

}  // namespace

ImageF make_poisson_noise(const ImageF& img, double scale, bool gray, std::uint64_t seed) {
    ImageF noise(img.channels(), img.height(), img.width());
    Rng rng(seed);
    if (gray && img.channels() == 3) {
        const ImageF luma = luminance(img);
        poisson_plane(luma.plane(0), noise.plane(0), rng);
        for (int c = 1; c < 3; ++c) std::copy(noise.plane(0).begin(), noise.plane(0).end(), noise.plane(c).begin());
    } else {
        // Level counting spans all channels of the image, as one tensor.
        std::vector<float> flat(img.values().begin(), img.values().end());
        poisson_plane(flat, noise.values(), rng);
    }
    for (float& v : noise.values()) v = static_cast<float>(v * scale);
    return noise;
}

ImageF make_noise(const ImageF& img, const NoiseRecord& record) {
    return record.kind == NoiseKind::Gaussian ? make_gaussian_noise(img, record.strength, record.gray, record.seed)
                                              : make_poisson_noise(img, record.strength, record.gray, record.seed);
}

NoiseRecord sample_noise(Rng& rng, const NoiseStageConfig& config) {
    validate(config);
    NoiseRecord record;
    if (bernoulli(rng, config.gaussian_prob)) {
        record.kind = NoiseKind::Gaussian;
        record.strength = uniform(rng, config.gaussian_sigma.lo, config.gaussian_sigma.hi);
    } else {
        record.kind = NoiseKind::Poisson;
        record.strength = uniform(rng, config.poisson_scale.lo, config.poisson_scale.hi);
    }
    record.gray = bernoulli(rng, config.gray_prob);
    record.seed = draw_seed(rng);
    return record;
}

ImageF apply_noise(const ImageF& img, const NoiseRecord& record) {
    if (record.strength == 0.0) {
        ImageF out = img;
        clamp01(out);
        return out;
    }
    ImageF out = make_noise(img, record);
    auto dst = out.values();
    auto src = img.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp(src[i] + dst[i], 0.0f, 1.0f);
    return out;
}

ImageF add_noise(const ImageF& img, Rng& rng, const NoiseStageConfig& config, NoiseRecord* record) {
    const NoiseRecord drawn = sample_noise(rng, config);
    if (record != nullptr) *record = drawn;
    return apply_noise(img, drawn);
}

}  // namespace uwsr::degradation
