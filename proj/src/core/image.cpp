#include "uwsr/image.hpp"

#include <algorithm>
#include <cmath>

#include "uwsr/error.hpp"

namespace uwsr {

ImageF::ImageF(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
    if (channels <= 0 || height <= 0 || width <= 0) {
        fail(ErrorCode::InvalidRange, "image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

bool all_finite(const ImageF& img) noexcept {
    return std::all_of(img.values().begin(), img.values().end(), [](float v) { return std::isfinite(v); });
}

void clamp01(ImageF& img) noexcept {
    for (float& v : img.values()) v = std::clamp(v, 0.0f, 1.0f);
}

void quantize8(ImageF& img) noexcept {
    for (float& v : img.values()) v = static_cast<float>(to_u8(v)) / 255.0f;
}

std::uint8_t to_u8(float v) noexcept {
    if (!(v > 0.0f)) return 0;  // also catches NaN
    if (v >= 1.0f) return 255;
    return static_cast<std::uint8_t>(std::lround(static_cast<double>(v) * 255.0));
}

ImageF crop(const ImageF& img, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || height <= 0 || width <= 0 || y0 + height > img.height() ||
        x0 + width > img.width()) {
        fail(ErrorCode::OutOfBounds, "crop window outside image");
    }
    ImageF out(img.channels(), height, width);
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < height; ++y) {
            const float* src = &img.plane(c)[static_cast<std::size_t>(y0 + y) * img.width() + x0];
            std::copy(src, src + width, &out.at(c, y, 0));
        }
    }
    return out;
}

ImageF luminance(const ImageF& rgb) {
    if (rgb.channels() == 1) return rgb;
    if (rgb.channels() != 3) fail(ErrorCode::UnsupportedChannelCount, "luminance expects 3 channels");
    ImageF y(1, rgb.height(), rgb.width());
    auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto out = y.plane(0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
    }
    return y;
}

}  // namespace uwsr
