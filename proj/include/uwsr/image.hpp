#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uwsr {

// Planar float image, channels x height x width, nominally in [0, 1].
class ImageF {
public:
    ImageF() = default;
    ImageF(int channels, int height, int width, float fill = 0.0f);

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    float& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    float at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    std::span<float> plane(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const noexcept { return {data_.data() + c * plane_size(), plane_size()}; }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    float* data() noexcept { return data_.data(); }
    const float* data() const noexcept { return data_.data(); }

    bool same_shape(const ImageF& other) const noexcept {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const ImageF&, const ImageF&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

bool all_finite(const ImageF& img) noexcept;
void clamp01(ImageF& img) noexcept;

// round(v * 255) / 255 after clamping, the 8-bit grid every codec stage works on.
void quantize8(ImageF& img) noexcept;

// Round-half-away-from-zero of clamp(v, 0, 1) * 255.
std::uint8_t to_u8(float v) noexcept;

ImageF crop(const ImageF& img, int y0, int x0, int height, int width);

// BT.601 luma (0.299 R + 0.587 G + 0.114 B), returned as a single-channel image.
ImageF luminance(const ImageF& rgb);

}  // namespace uwsr
