#include "uwsr/nn/spectral.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "uwsr/error.hpp"

namespace uwsr::nn {

template <typename T>
void normalize_vector(std::vector<T>& x) {
    T norm = 0;
    for (T v : x) norm += v * v;
    norm = std::max(std::sqrt(norm), T(1e-12));
    for (T& v : x) v /= norm;
}

template <typename T>
SpectralEstimate<T> power_iteration(const T* w, int rows, int cols, std::vector<T> u, std::vector<T> v,
                                    int iterations) {
    if (v.empty() && iterations > 0) v.assign(static_cast<std::size_t>(cols), T(0));  // overwritten by the first step
    if (static_cast<int>(u.size()) != rows || static_cast<int>(v.size()) != cols) {
        fail(ErrorCode::ShapeMismatch, "power iteration vectors do not match a " + std::to_string(rows) + "x" +
                                           std::to_string(cols) + " matrix");
    }
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    Eigen::Map<const Mat> wm(w, rows, cols);
    Eigen::Map<Vec> um(u.data(), rows), vm(v.data(), cols);
    for (int it = 0; it < iterations; ++it) {
        vm = wm.transpose() * um;
        normalize_vector(v);
        um = wm * vm;
        normalize_vector(u);
    }
    SpectralEstimate<T> out;
    out.sigma = um.dot(wm * vm);
    if (!(std::abs(out.sigma) >= T(1e-12))) fail(ErrorCode::ZeroMatrix, "spectral norm estimate is zero");
    out.u = std::move(u);
    out.v = std::move(v);
    return out;
}

template <typename T>
SpectralNormalized<T> spectral_normalize(const std::vector<T>& w, int rows, int cols, std::vector<T> u,
                                         int iterations) {
    if (w.size() != static_cast<std::size_t>(rows) * cols) fail(ErrorCode::ShapeMismatch, "matrix size mismatch");
    if (iterations < 1) fail(ErrorCode::InvalidRange, "spectral normalization needs at least one iteration");
    SpectralNormalized<T> out;
    out.estimate = power_iteration(w.data(), rows, cols, std::move(u), std::vector<T>(static_cast<std::size_t>(cols)),
                                   iterations);
    out.weight.resize(w.size());
    std::transform(w.begin(), w.end(), out.weight.begin(), [&](T x) { return x / out.estimate.sigma; });
    return out;
}

template void normalize_vector(std::vector<float>&);
template void normalize_vector(std::vector<double>&);
template SpectralEstimate<float> power_iteration(const float*, int, int, std::vector<float>, std::vector<float>, int);
template SpectralEstimate<double> power_iteration(const double*, int, int, std::vector<double>, std::vector<double>,
                                                  int);
template SpectralNormalized<float> spectral_normalize(const std::vector<float>&, int, int, std::vector<float>, int);
template SpectralNormalized<double> spectral_normalize(const std::vector<double>&, int, int, std::vector<double>, int);

}  // namespace uwsr::nn
