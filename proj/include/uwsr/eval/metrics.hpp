#pragma once

#include "uwsr/image.hpp"

namespace uwsr::eval {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(1 / MSE) over every channel of [0, 1] images; zero MSE reports the cap.
double psnr(const ImageF& a, const ImageF& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

// Mean SSIM over every fully contained Gaussian window of the BT.601 luma
// (single-channel inputs are used as they are).
double ssim(const ImageF& a, const ImageF& b, const SsimOptions& options = {});

}  // namespace uwsr::eval
