#pragma once

#include <vector>

namespace uwsr::nn {

template <typename T>
struct SpectralEstimate {
    T sigma = 0;
    std::vector<T> u;  // left singular vector estimate, length rows
    std::vector<T> v;  // right singular vector estimate, length cols
};

// Power iteration on a row-major rows x cols matrix, matching the usual
// deep-learning convention: v = normalize(W^T u), u = normalize(W v), repeated
// `iterations` times, then sigma = u^T W v. With zero iterations the given u
// and v are used as they are; otherwise v may be empty. Throws ZeroMatrix when sigma < 1e-12.
template <typename T>
SpectralEstimate<T> power_iteration(const T* w, int rows, int cols, std::vector<T> u, std::vector<T> v,
                                    int iterations);

template <typename T>
struct SpectralNormalized {
    std::vector<T> weight;  // W / sigma
    SpectralEstimate<T> estimate;
};

template <typename T>
SpectralNormalized<T> spectral_normalize(const std::vector<T>& w, int rows, int cols, std::vector<T> u,
                                         int iterations = 1);

// x / max(|x|, 1e-12)
template <typename T>
void normalize_vector(std::vector<T>& x);

}  // namespace uwsr::nn
