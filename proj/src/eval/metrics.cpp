#include "uwsr/eval/metrics.hpp"

#include <cmath>
#include <vector>

#include "uwsr/error.hpp"

namespace uwsr::eval {

namespace {

void check_shapes(const ImageF& a, const ImageF& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::ShapeMismatch, std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                           std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                           std::to_string(b.height()));
    }
}

std::vector<double> luma(const ImageF& img) {
    const ImageF y = img.channels() == 1 ? img : luminance(img);
    return {y.values().begin(), y.values().end()};
}

// Separable 'valid' correlation with a normalized 1-D Gaussian.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow), out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const ImageF& a, const ImageF& b) {
    check_shapes(a, b, "psnr");
    if (a.empty()) fail(ErrorCode::TooSmall, "psnr of empty images");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageF& a, const ImageF& b, const SsimOptions& o) {
    check_shapes(a, b, "ssim");
    if (a.height() < o.window || a.width() < o.window) {
        fail(ErrorCode::TooSmall, "ssim needs images of at least " + std::to_string(o.window) + " pixels per side");
    }
    const int h = a.height(), w = a.width(), r = o.window / 2;
    std::vector<double> k(static_cast<std::size_t>(o.window));
    double ksum = 0;
    for (int i = 0; i < o.window; ++i) ksum += k[i] = std::exp(-0.5 * (i - r) * (i - r) / (o.sigma * o.sigma));
    for (double& v : k) v /= ksum;

    const auto x = luma(a), y = luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k), syy = filter_valid(yy, h, w, k), sxy = filter_valid(xy, h, w, k);
    const double c1 = std::pow(o.k1 * o.data_range, 2), c2 = std::pow(o.k2 * o.data_range, 2);
    double total = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mx.size());
}

}  // namespace uwsr::eval
