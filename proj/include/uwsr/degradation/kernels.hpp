#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "uwsr/random.hpp"

namespace uwsr::degradation {

enum class KernelKind {
    Isotropic,
    Anisotropic,
    GeneralizedIsotropic,
    GeneralizedAnisotropic,
    PlateauIsotropic,
    PlateauAnisotropic,
    Sinc,
    Delta,
};

inline constexpr std::array<KernelKind, 6> kGaussianFamilies = {
    KernelKind::Isotropic,          KernelKind::Anisotropic,      KernelKind::GeneralizedIsotropic,
    KernelKind::GeneralizedAnisotropic, KernelKind::PlateauIsotropic, KernelKind::PlateauAnisotropic,
};

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel_kind(std::string_view text);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool valid() const noexcept { return lo <= hi; }
    friend bool operator==(const Range&, const Range&) = default;
};

// Parameters of one kernel before it is rasterized.
struct KernelSpec {
    KernelKind kind = KernelKind::Delta;
    int size = 21;          // support before zero-padding, odd
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double rotation = 0.0;  // radians
    double beta = 1.0;      // generalized / plateau shape
    double omega = 0.0;     // sinc cutoff, radians
    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// Square odd-sized filter stored row-major; row index is y, column index is x.
struct Kernel {
    int size = 1;
    std::vector<double> weights{1.0};

    double at(int y, int x) const noexcept { return weights[static_cast<std::size_t>(y) * size + x]; }
    double sum() const noexcept;
    bool has_negative() const noexcept;
    friend bool operator==(const Kernel&, const Kernel&) = default;
};

Kernel delta_kernel(int size);

// Rasterizes `spec` and zero-pads the result to `padded_size`.
Kernel build_kernel(const KernelSpec& spec, int padded_size);

Kernel gaussian_kernel(int size, double sigma_x, double sigma_y, double rotation);
Kernel generalized_gaussian_kernel(int size, double sigma_x, double sigma_y, double rotation, double beta);
Kernel plateau_kernel(int size, double sigma_x, double sigma_y, double rotation, double beta);
// Circularly symmetric low-pass (2-D sinc / Airy) kernel with cutoff omega.
Kernel sinc_kernel(int size, double omega);

struct BlurStageConfig {
    // iso, aniso, generalized iso, generalized aniso, plateau iso, plateau aniso
    std::array<double, 6> family_weights{0.45, 0.25, 0.12, 0.03, 0.12, 0.03};
    double sinc_prob = 0.1;
    Range sigma{0.2, 3.0};
    Range beta_generalized{0.5, 4.0};
    Range beta_plateau{1.0, 2.0};
    int min_kernel_size = 7;
    int max_kernel_size = 21;
    double skip_prob = 0.0;
};

struct SampledKernel {
    KernelSpec spec;
    Kernel kernel;
};

// Draws a kernel family and its parameters, rasterized and padded to `padded_size`.
SampledKernel sample_kernel(Rng& rng, const BlurStageConfig& config, int padded_size);

void validate(const BlurStageConfig& config, int padded_size);

}  // namespace uwsr::degradation
