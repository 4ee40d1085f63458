#include "uwsr/degradation/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "uwsr/error.hpp"

namespace uwsr::degradation {

std::string_view to_string(KernelKind kind) noexcept {
    switch (kind) {
        case KernelKind::Isotropic: return "iso";
        case KernelKind::Anisotropic: return "aniso";
        case KernelKind::GeneralizedIsotropic: return "generalized_iso";
        case KernelKind::GeneralizedAnisotropic: return "generalized_aniso";
        case KernelKind::PlateauIsotropic: return "plateau_iso";
        case KernelKind::PlateauAnisotropic: return "plateau_aniso";
        case KernelKind::Sinc: return "sinc";
        case KernelKind::Delta: return "delta";
    }
    return "delta";
}

KernelKind parse_kernel_kind(std::string_view text) {
    for (KernelKind kind : {KernelKind::Isotropic, KernelKind::Anisotropic, KernelKind::GeneralizedIsotropic,
                            KernelKind::GeneralizedAnisotropic, KernelKind::PlateauIsotropic,
                            KernelKind::PlateauAnisotropic, KernelKind::Sinc, KernelKind::Delta}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::ParseError, "unknown kernel kind '" + std::string(text) + "'");
}

double Kernel::sum() const noexcept { return std::accumulate(weights.begin(), weights.end(), 0.0); }

bool Kernel::has_negative() const noexcept {
    for (double w : weights) {
        if (w < 0.0) return true;
    }
    return false;
}

Kernel delta_kernel(int size) {
    if (size < 1 || size % 2 == 0) fail(ErrorCode::InvalidRange, "kernel size must be odd");
    Kernel k;
    k.size = size;
    k.weights.assign(static_cast<std::size_t>(size) * size, 0.0);
    k.weights[static_cast<std::size_t>(size / 2) * size + size / 2] = 1.0;
    return k;
}

namespace {

void check_size(int size) {
    if (size < 1 || size % 2 == 0) fail(ErrorCode::InvalidRange, "kernel size must be odd, got " + std::to_string(size));
}

void normalize(Kernel& k) {
    const double total = k.sum();
    for (double& w : k.weights) w /= total;
}

// Quadratic form [x y] S^-1 [x y]^T with S = R diag(sx^2, sy^2) R^T.
template <typename Profile>
Kernel rasterize_bivariate(int size, double sigma_x, double sigma_y, double rotation, Profile profile) {
    check_size(size);
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) fail(ErrorCode::InvalidRange, "kernel sigma must be positive");
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double vx = sigma_x * sigma_x, vy = sigma_y * sigma_y;
    const double s00 = c * c * vx + s * s * vy;
    const double s01 = c * s * (vx - vy);
    const double s11 = s * s * vx + c * c * vy;
    const double det = s00 * s11 - s01 * s01;
    const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;

    Kernel k;
    k.size = size;
    k.weights.resize(static_cast<std::size_t>(size) * size);
    const int half = size / 2;
    for (int row = 0; row < size; ++row) {
        const double y = row - half;
        for (int col = 0; col < size; ++col) {
            const double x = col - half;
            const double q = i00 * x * x + 2.0 * i01 * x * y + i11 * y * y;
            k.weights[static_cast<std::size_t>(row) * size + col] = profile(q);
        }
    }
    normalize(k);
    return k;
}

Kernel pad_to(const Kernel& k, int padded_size) {
    if (padded_size < k.size) return k;
    if ((padded_size - k.size) % 2 != 0) fail(ErrorCode::InvalidRange, "padded kernel size must be odd");
    const int offset = (padded_size - k.size) / 2;
    Kernel out;
    out.size = padded_size;
    out.weights.assign(static_cast<std::size_t>(padded_size) * padded_size, 0.0);
    for (int y = 0; y < k.size; ++y) {
        for (int x = 0; x < k.size; ++x) {
            out.weights[static_cast<std::size_t>(y + offset) * padded_size + x + offset] = k.at(y, x);
        }
    }
    return out;
}

}  // namespace

Kernel gaussian_kernel(int size, double sigma_x, double sigma_y, double rotation) {
    return rasterize_bivariate(size, sigma_x, sigma_y, rotation, [](double q) { return std::exp(-0.5 * q); });
}

Kernel generalized_gaussian_kernel(int size, double sigma_x, double sigma_y, double rotation, double beta) {
    return rasterize_bivariate(size, sigma_x, sigma_y, rotation,
                               [beta](double q) { return std::exp(-0.5 * std::pow(q, beta)); });
}

Kernel plateau_kernel(int size, double sigma_x, double sigma_y, double rotation, double beta) {
    return rasterize_bivariate(size, sigma_x, sigma_y, rotation,
                               [beta](double q) { return 1.0 / (std::pow(q, beta) + 1.0); });
}

Kernel sinc_kernel(int size, double omega) {
    check_size(size);
    if (!(omega > 0.0)) fail(ErrorCode::InvalidRange, "sinc cutoff must be positive");
    Kernel k;
    k.size = size;
    k.weights.resize(static_cast<std::size_t>(size) * size);
    const double center = (size - 1) / 2.0;
    for (int row = 0; row < size; ++row) {
        for (int col = 0; col < size; ++col) {
            const double r = std::hypot(row - center, col - center);
            k.weights[static_cast<std::size_t>(row) * size + col] =
                r == 0.0 ? omega * omega / (4.0 * std::numbers::pi)
                         : omega * std::cyl_bessel_j(1.0, omega * r) / (2.0 * std::numbers::pi * r);
        }
    }
    normalize(k);
    return k;
}

Kernel build_kernel(const KernelSpec& spec, int padded_size) {
    Kernel k;
    switch (spec.kind) {
        case KernelKind::Isotropic:
        case KernelKind::Anisotropic:
            k = gaussian_kernel(spec.size, spec.sigma_x, spec.sigma_y, spec.rotation);
            break;
        case KernelKind::GeneralizedIsotropic:
        case KernelKind::GeneralizedAnisotropic:
            k = generalized_gaussian_kernel(spec.size, spec.sigma_x, spec.sigma_y, spec.rotation, spec.beta);
            break;
        case KernelKind::PlateauIsotropic:
        case KernelKind::PlateauAnisotropic:
            k = plateau_kernel(spec.size, spec.sigma_x, spec.sigma_y, spec.rotation, spec.beta);
            break;
        case KernelKind::Sinc:
            k = sinc_kernel(spec.size, spec.omega);
            break;
        case KernelKind::Delta:
            k = delta_kernel(spec.size);
            break;
    }
    return pad_to(k, padded_size);
}

void validate(const BlurStageConfig& config, int padded_size) {
    auto positive_range = [](const Range& r, const char* what) {
        if (!r.valid() || !(r.lo > 0.0)) fail(ErrorCode::InvalidRange, std::string(what) + " range must satisfy 0 < lo <= hi");
    };
    positive_range(config.sigma, "blur sigma");
    positive_range(config.beta_generalized, "generalized beta");
    positive_range(config.beta_plateau, "plateau beta");
    if (config.min_kernel_size % 2 == 0 || config.max_kernel_size % 2 == 0 || config.min_kernel_size < 1 ||
        config.min_kernel_size > config.max_kernel_size || config.max_kernel_size > padded_size) {
        fail(ErrorCode::InvalidRange, "kernel sizes must be odd with min <= max <= padded size");
    }
    double total = 0.0;
    for (double w : config.family_weights) {
        if (w < 0.0) fail(ErrorCode::InvalidRange, "kernel family weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) fail(ErrorCode::InvalidRange, "kernel family weights must sum to 1");
    for (double p : {config.sinc_prob, config.skip_prob}) {
        if (p < 0.0 || p > 1.0) fail(ErrorCode::InvalidRange, "probabilities must lie in [0, 1]");
    }
}

namespace {

// Shape exponents below and above 1 are equally likely.
double draw_beta(Rng& rng, const Range& range) {
    if (bernoulli(rng, 0.5)) return uniform(rng, range.lo, std::max(range.lo, std::min(1.0, range.hi)));
    return uniform(rng, std::min(range.hi, std::max(1.0, range.lo)), range.hi);
}

}  // namespace

SampledKernel sample_kernel(Rng& rng, const BlurStageConfig& config, int padded_size) {
    validate(config, padded_size);
    KernelSpec spec;
    const int size_steps = (config.max_kernel_size - config.min_kernel_size) / 2;
    spec.size = config.min_kernel_size + 2 * uniform_int(rng, 0, size_steps);

    if (bernoulli(rng, config.sinc_prob)) {
        spec.kind = KernelKind::Sinc;
        const double lo = spec.size < 13 ? std::numbers::pi / 3.0 : std::numbers::pi / 5.0;
        spec.omega = uniform(rng, lo, std::numbers::pi);
    } else {
        spec.kind = kGaussianFamilies[choose_index(rng, config.family_weights)];
        const bool isotropic = spec.kind == KernelKind::Isotropic || spec.kind == KernelKind::GeneralizedIsotropic ||
                               spec.kind == KernelKind::PlateauIsotropic;
        spec.sigma_x = uniform(rng, config.sigma.lo, config.sigma.hi);
        if (isotropic) {
            spec.sigma_y = spec.sigma_x;
            spec.rotation = 0.0;
        } else {
            spec.sigma_y = uniform(rng, config.sigma.lo, config.sigma.hi);
            spec.rotation = uniform(rng, -std::numbers::pi, std::numbers::pi);
        }
        if (spec.kind == KernelKind::GeneralizedIsotropic || spec.kind == KernelKind::GeneralizedAnisotropic) {
            spec.beta = draw_beta(rng, config.beta_generalized);
        } else if (spec.kind == KernelKind::PlateauIsotropic || spec.kind == KernelKind::PlateauAnisotropic) {
            spec.beta = draw_beta(rng, config.beta_plateau);
        }
    }
    return {spec, build_kernel(spec, padded_size)};
}

}  // namespace uwsr::degradation
