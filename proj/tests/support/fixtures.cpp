#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "uwsr/degradation/resample.hpp"
#include "uwsr/image_io.hpp"

namespace uwsr::testing {
namespace fs = std::filesystem;

namespace {

// Smooth value noise on a coarse lattice, bilinearly interpolated.
struct ValueNoise {
    int cells;
    std::vector<double> lattice;

    ValueNoise(int cells_, std::mt19937_64& rng) : cells(cells_), lattice(static_cast<std::size_t>((cells_ + 1) * (cells_ + 1))) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : lattice) v = u(rng);
    }

    double operator()(double fy, double fx) const {
        const double gy = fy * cells, gx = fx * cells;
        const int y0 = std::min(static_cast<int>(gy), cells - 1), x0 = std::min(static_cast<int>(gx), cells - 1);
        const double ty = gy - y0, tx = gx - x0;
        const double sy = ty * ty * (3 - 2 * ty), sx = tx * tx * (3 - 2 * tx);
        auto at = [&](int y, int x) { return lattice[static_cast<std::size_t>(y * (cells + 1) + x)]; };
        const double top = at(y0, x0) * (1 - sx) + at(y0, x0 + 1) * sx;
        const double bottom = at(y0 + 1, x0) * (1 - sx) + at(y0 + 1, x0 + 1) * sx;
        return top * (1 - sy) + bottom * sy;
    }
};

}  // namespace

ImageF underwater_scene(int height, int width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ValueNoise coarse(4, rng), mid(12, rng), fine(40, rng);

    const double base_r = 0.05 + 0.15 * u(rng), base_g = 0.35 + 0.25 * u(rng), base_b = 0.5 + 0.3 * u(rng);
    const double caustic_phase = u(rng) * 6.28, caustic_freq = 18.0 + 14.0 * u(rng);

    struct Blob {
        double cy, cx, ry, rx, angle, r, g, b, stripes;
    };
    std::vector<Blob> blobs;
    const int count = 3 + static_cast<int>(u(rng) * 4);
    for (int i = 0; i < count; ++i) {
        blobs.push_back({0.2 + 0.7 * u(rng), u(rng), 0.04 + 0.12 * u(rng), 0.06 + 0.2 * u(rng), u(rng) * 3.14,
                         0.3 + 0.7 * u(rng), 0.2 + 0.6 * u(rng), 0.1 + 0.4 * u(rng), u(rng) < 0.5 ? 0.0 : 20 + 40 * u(rng)});
    }

    ImageF img(3, height, width);
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) / height;
        for (int x = 0; x < width; ++x) {
            const double fx = (x + 0.5) / width;
            const double depth = 1.0 - 0.55 * fy;
            const double haze = 0.6 * coarse(fy, fx) + 0.3 * mid(fy, fx) + 0.1 * fine(fy, fx);
            const double caustic =
                std::pow(std::max(0.0, std::sin(caustic_freq * fx + 3 * haze + caustic_phase) *
                                           std::sin(caustic_freq * 0.8 * fy + 2 * haze)), 4.0) *
                (1.0 - fy);
            double r = base_r * depth + 0.08 * haze + 0.15 * caustic;
            double g = base_g * depth + 0.12 * haze + 0.25 * caustic;
            double b = base_b * depth + 0.10 * haze + 0.25 * caustic;
            // seabed rocks
            const double floor_line = 0.78 + 0.1 * coarse(0.1, fx) - 0.05 * mid(0.5, fx);
            if (fy > floor_line) {
                const double tex = 0.5 * mid(fy, fx) + 0.5 * fine(fy, fx);
                r = 0.25 + 0.35 * tex;
                g = 0.25 + 0.3 * tex;
                b = 0.22 + 0.25 * tex;
            }
            for (const Blob& blob : blobs) {
                const double dy = fy - blob.cy, dx = fx - blob.cx;
                const double ca = std::cos(blob.angle), sa = std::sin(blob.angle);
                const double py = (ca * dy - sa * dx) / blob.ry, px = (sa * dy + ca * dx) / blob.rx;
                const double d = py * py + px * px;
                if (d < 1.0) {
                    const double shade = 0.75 + 0.25 * (1.0 - d);
                    const double stripe = blob.stripes > 0 ? 0.7 + 0.3 * std::sin(blob.stripes * px) : 1.0;
                    r = blob.r * shade * stripe;
                    g = blob.g * shade * stripe;
                    b = blob.b * shade * stripe;
                }
            }
            img.at(0, y, x) = static_cast<float>(r);
            img.at(1, y, x) = static_cast<float>(g);
            img.at(2, y, x) = static_cast<float>(b);
        }
    }
    quantize8(img);
    return img;
}

ImageF random_image(int channels, int height, int width, std::uint64_t seed, float lo, float hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    ImageF img(channels, height, width);
    for (float& v : img.values()) v = u(rng);
    return img;
}

ImageF constant_image(int channels, int height, int width, float value) { return ImageF(channels, height, width, value); }

TempDir::TempDir(const std::string& prefix) {
    static std::mt19937_64 rng(std::random_device{}());
    for (;;) {
        path_ = fs::temp_directory_path() / (prefix + "-" + std::to_string(rng() % 100000000));
        if (fs::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_usr_tree(const fs::path& root, const UsrTreeOptions& options) {
    auto write_split = [&](const std::string& split, int count, bool with_lr, std::uint64_t seed_base) {
        const fs::path hr_dir = root / split / "hr";
        const fs::path lr_dir = root / split / ("lr_" + std::to_string(options.scale) + "x");
        fs::create_directories(hr_dir);
        if (with_lr) fs::create_directories(lr_dir);
        for (int i = 0; i < count; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "im_%05d.png", i + 1);
            const int source = i % std::max(1, options.distinct_scenes);
            char source_name[32];
            std::snprintf(source_name, sizeof(source_name), "im_%05d.png", source + 1);
            if (i != source) {
                fs::copy_file(hr_dir / source_name, hr_dir / name);
                if (with_lr) fs::copy_file(lr_dir / source_name, lr_dir / name);
                continue;
            }
            const ImageF hr = underwater_scene(options.hr_height, options.hr_width, seed_base + static_cast<std::uint64_t>(i));
            save_png(hr, hr_dir / name);
            if (with_lr) {
                const ImageF lr = degradation::resize(hr, options.hr_height / options.scale,
                                                      options.hr_width / options.scale, degradation::InterpMode::Bicubic);
                save_png(lr, lr_dir / name);
            }
        }
    };
    write_split("train", options.train_count, options.with_train_lr, 1000);
    write_split("test", options.test_count, options.with_test_lr, 5000);
}

}  // namespace uwsr::testing
