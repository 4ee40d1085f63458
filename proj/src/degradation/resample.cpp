#include "uwsr/degradation/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uwsr/error.hpp"

namespace uwsr::degradation {
namespace {

int mirror(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

struct Tap {
    int index;
    double weight;
};

using AxisTaps = std::vector<std::vector<Tap>>;

double cubic_weight(double x) {
    constexpr double a = -0.75;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

AxisTaps axis_taps(int in, int out, InterpMode mode) {
    AxisTaps taps(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        auto& t = taps[static_cast<std::size_t>(i)];
        switch (mode) {
            case InterpMode::Area: {
                const long long start = static_cast<long long>(i) * in / out;
                const long long end = (static_cast<long long>(i + 1) * in + out - 1) / out;
                const double w = 1.0 / static_cast<double>(end - start);
                for (long long s = start; s < end; ++s) t.push_back({static_cast<int>(s), w});
                break;
            }
            case InterpMode::Bilinear: {
                const double src = std::max((i + 0.5) * ratio - 0.5, 0.0);
                const int i0 = std::min(static_cast<int>(src), in - 1);
                const int i1 = i0 < in - 1 ? i0 + 1 : i0;
                const double l1 = src - i0;
                t.push_back({i0, 1.0 - l1});
                t.push_back({i1, l1});
                break;
            }
            case InterpMode::Bicubic: {
                const double src = (i + 0.5) * ratio - 0.5;
                const int i0 = static_cast<int>(std::floor(src));
                const double frac = src - i0;
                for (int k = -1; k <= 2; ++k) {
                    t.push_back({std::clamp(i0 + k, 0, in - 1), cubic_weight(frac - k)});
                }
                break;
            }
            case InterpMode::Nearest: {
                const int s = std::min(static_cast<int>(std::floor(i * ratio)), in - 1);
                t.push_back({s, 1.0});
                break;
            }
        }
    }
    return taps;
}

}  // namespace

std::string_view to_string(InterpMode mode) noexcept {
    switch (mode) {
        case InterpMode::Area: return "area";
        case InterpMode::Bilinear: return "bilinear";
        case InterpMode::Bicubic: return "bicubic";
        case InterpMode::Nearest: return "nearest";
    }
    return "bilinear";
}

InterpMode parse_interp_mode(std::string_view text) {
    for (InterpMode m : {InterpMode::Area, InterpMode::Bilinear, InterpMode::Bicubic, InterpMode::Nearest}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorCode::ParseError, "unknown interpolation mode '" + std::string(text) + "'");
}

std::string_view to_string(ResizeDirection direction) noexcept {
    switch (direction) {
        case ResizeDirection::Up: return "up";
        case ResizeDirection::Down: return "down";
        case ResizeDirection::Keep: return "keep";
    }
    return "keep";
}

ResizeDirection parse_resize_direction(std::string_view text) {
    for (ResizeDirection d : {ResizeDirection::Up, ResizeDirection::Down, ResizeDirection::Keep}) {
        if (to_string(d) == text) return d;
    }
    fail(ErrorCode::ParseError, "unknown resize direction '" + std::string(text) + "'");
}

ImageF apply_blur(const ImageF& img, const Kernel& kernel) {
    if (kernel.size < 1 || kernel.size % 2 == 0) fail(ErrorCode::InvalidRange, "blur kernel must be odd-sized");
    const int k = kernel.size, half = k / 2;
    const int h = img.height(), w = img.width();

    // Only the bounding box of non-zero taps contributes.
    int y_lo = k, y_hi = -1, x_lo = k, x_hi = -1;
    for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
            if (kernel.at(ky, kx) != 0.0) {
                y_lo = std::min(y_lo, ky);
                y_hi = std::max(y_hi, ky);
                x_lo = std::min(x_lo, kx);
                x_hi = std::max(x_hi, kx);
            }
        }
    }
    ImageF out(img.channels(), h, w);
    if (y_hi < 0) return out;

    std::vector<int> rows(static_cast<std::size_t>(h + k)), cols(static_cast<std::size_t>(w + k));
    for (int i = 0; i < h + k; ++i) rows[static_cast<std::size_t>(i)] = mirror(i - half, h);
    for (int i = 0; i < w + k; ++i) cols[static_cast<std::size_t>(i)] = mirror(i - half, w);

    const bool clip = kernel.has_negative();
    for (int c = 0; c < img.channels(); ++c) {
        const auto src = img.plane(c);
        auto dst = out.plane(c);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int ky = y_lo; ky <= y_hi; ++ky) {
                    const float* row = &src[static_cast<std::size_t>(rows[static_cast<std::size_t>(y + ky)]) * w];
                    const double* kr = &kernel.weights[static_cast<std::size_t>(ky) * k];
                    for (int kx = x_lo; kx <= x_hi; ++kx) {
                        acc += kr[kx] * row[cols[static_cast<std::size_t>(x + kx)]];
                    }
                }
                float v = static_cast<float>(acc);
                if (clip) v = std::clamp(v, 0.0f, 1.0f);
                dst[static_cast<std::size_t>(y) * w + x] = v;
            }
        }
    }
    return out;
}

ImageF resize(const ImageF& img, int out_height, int out_width, InterpMode mode) {
    if (out_height < 1 || out_width < 1) fail(ErrorCode::InvalidRange, "resize target must be at least 1x1");
    const int h = img.height(), w = img.width();
    if (out_height == h && out_width == w) return img;  // every mode is the identity at unit scale
    const AxisTaps xt = axis_taps(w, out_width, mode);
    const AxisTaps yt = axis_taps(h, out_height, mode);

    ImageF out(img.channels(), out_height, out_width);
    std::vector<double> tmp(static_cast<std::size_t>(h) * out_width);
    for (int c = 0; c < img.channels(); ++c) {
        const auto src = img.plane(c);
        for (int y = 0; y < h; ++y) {
            const float* row = &src[static_cast<std::size_t>(y) * w];
            for (int x = 0; x < out_width; ++x) {
                double acc = 0.0;
                for (const Tap& t : xt[static_cast<std::size_t>(x)]) acc += t.weight * row[t.index];
                tmp[static_cast<std::size_t>(y) * out_width + x] = acc;
            }
        }
        auto dst = out.plane(c);
        for (int y = 0; y < out_height; ++y) {
            for (int x = 0; x < out_width; ++x) {
                double acc = 0.0;
                for (const Tap& t : yt[static_cast<std::size_t>(y)]) {
                    acc += t.weight * tmp[static_cast<std::size_t>(t.index) * out_width + x];
                }
                dst[static_cast<std::size_t>(y) * out_width + x] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void validate(const ResizeStageConfig& config) {
    auto check_weights = [](const std::array<double, 3>& weights, const char* what) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) fail(ErrorCode::InvalidRange, std::string(what) + " weights must be non-negative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-6) fail(ErrorCode::InvalidRange, std::string(what) + " weights must sum to 1");
    };
    check_weights(config.direction_weights, "resize direction");
    check_weights(config.interp_weights, "interpolation");
    if (!config.scale.valid() || !(config.scale.lo > 0.0) || config.scale.lo > 1.0 || config.scale.hi < 1.0) {
        fail(ErrorCode::InvalidRange, "resize scale range must satisfy 0 < lo <= 1 <= hi");
    }
}

ResizeRecord sample_resize(Rng& rng, const ResizeStageConfig& config, int base_height, int base_width) {
    validate(config);
    ResizeRecord record;
    record.direction = static_cast<ResizeDirection>(choose_index(rng, config.direction_weights));
    switch (record.direction) {
        case ResizeDirection::Up: record.scale = uniform(rng, 1.0, config.scale.hi); break;
        case ResizeDirection::Down: record.scale = uniform(rng, config.scale.lo, 1.0); break;
        case ResizeDirection::Keep: record.scale = 1.0; break;
    }
    record.mode = kRandomInterpModes[choose_index(rng, config.interp_weights)];
    record.out_height = std::max(1, static_cast<int>(std::lround(record.scale * base_height)));
    record.out_width = std::max(1, static_cast<int>(std::lround(record.scale * base_width)));
    return record;
}

ImageF apply_resize(const ImageF& img, const ResizeRecord& record) {
    return resize(img, record.out_height, record.out_width, record.mode);
}

ImageF random_resize(const ImageF& img, Rng& rng, const ResizeStageConfig& config, ResizeRecord* record) {
    const ResizeRecord drawn = sample_resize(rng, config, img.height(), img.width());
    if (record != nullptr) *record = drawn;
    return apply_resize(img, drawn);
}

}  // namespace uwsr::degradation
