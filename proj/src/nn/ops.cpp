#include "uwsr/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "uwsr/error.hpp"

namespace uwsr::nn {
namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::OuterStride<>;

void require_rank4(const Shape& s, const char* op) {
    if (s.size() != 4) fail(ErrorCode::ShapeMismatch, std::string(op) + " expects an NCHW tensor, got " + shape_string(s));
}

void require_same(const Shape& a, const Shape& b, const char* op) {
    if (a != b) fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

struct ConvGeom {
    int n, c, h, w, o, k, stride, pad, oh, ow;
    int ck() const { return c * k * k; }
    int pixels() const { return oh * ow; }
};

// Columns [p0, p0 + len) of the (C*k*k) x (OH*OW) patch matrix of one image.
template <typename T>
void im2col(const T* x, const ConvGeom& g, int p0, int len, T* col) {
    for (int c = 0; c < g.c; ++c) {
        const T* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                T* dst = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * len;
                int oy = p0 / g.ow, ox = p0 % g.ow;
                for (int i = 0; i < len; ++i) {
                    const int iy = oy * g.stride - g.pad + ky;
                    const int ix = ox * g.stride - g.pad + kx;
                    dst[i] = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) ? plane[iy * g.w + ix] : T(0);
                    if (++ox == g.ow) {
                        ox = 0;
                        ++oy;
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, int p0, int len, T* dx) {
    for (int c = 0; c < g.c; ++c) {
        T* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                const T* src = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * len;
                int oy = p0 / g.ow, ox = p0 % g.ow;
                for (int i = 0; i < len; ++i) {
                    const int iy = oy * g.stride - g.pad + ky;
                    const int ix = ox * g.stride - g.pad + kx;
                    if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) plane[iy * g.w + ix] += src[i];
                    if (++ox == g.ow) {
                        ox = 0;
                        ++oy;
                    }
                }
            }
        }
    }
}

int chunk_length(const ConvGeom& g) {
    constexpr int kBudget = 1 << 21;  // elements in one patch buffer
    return std::clamp(kBudget / std::max(1, g.ck()), 1, g.pixels());
}

template <typename T>
Tensor<T> unary(const Tensor<T>& x, auto f, auto df) {
    std::vector<T> out(x.size());
    const T* src = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(src[i]);
    return make_result<T>(x.shape(), std::move(out), {x}, [df](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        for (std::size_t i = 0; i < res.grad.size(); ++i) g[i] += res.grad[i] * df(in.data[i]);
    });
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride, int padding) {
    require_rank4(x.shape(), "conv2d");
    require_rank4(weight.shape(), "conv2d weight");
    ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), stride, padding, 0, 0};
    if (weight.dim(1) != g.c || weight.dim(3) != g.k) {
        fail(ErrorCode::ShapeMismatch, "conv2d weight " + shape_string(weight.shape()) + " does not fit input " +
                                           shape_string(x.shape()));
    }
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.o)) {
        fail(ErrorCode::ShapeMismatch, "conv2d bias must have " + std::to_string(g.o) + " entries");
    }
    if (stride < 1 || padding < 0) fail(ErrorCode::InvalidRange, "conv2d needs stride >= 1 and padding >= 0");
    g.oh = (g.h + 2 * padding - g.k) / stride + 1;
    g.ow = (g.w + 2 * padding - g.k) / stride + 1;
    if (g.oh < 1 || g.ow < 1) fail(ErrorCode::ShapeMismatch, "conv2d input smaller than kernel");

    const int P = g.pixels(), CK = g.ck(), chunk = chunk_length(g);
    std::vector<T> out(static_cast<std::size_t>(g.n) * g.o * P);
    std::vector<T> col(static_cast<std::size_t>(CK) * chunk);
    Eigen::Map<const MatR<T>> wm(weight.data(), g.o, CK);
    const std::size_t in_stride = static_cast<std::size_t>(g.c) * g.h * g.w;
    for (int n = 0; n < g.n; ++n) {
        for (int p0 = 0; p0 < P; p0 += chunk) {
            const int len = std::min(chunk, P - p0);
            im2col(x.data() + n * in_stride, g, p0, len, col.data());
            Eigen::Map<const MatR<T>> cm(col.data(), CK, len);
            Eigen::Map<MatR<T>, 0, Strided> om(out.data() + static_cast<std::size_t>(n) * g.o * P + p0, g.o, len,
                                               Strided(P));
            om.noalias() = wm * cm;
        }
        if (bias.defined()) {
            for (int o = 0; o < g.o; ++o) {
                T* dst = out.data() + (static_cast<std::size_t>(n) * g.o + o) * P;
                const T b = bias.data()[o];
                for (int p = 0; p < P; ++p) dst[p] += b;
            }
        }
    }

    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    return make_result<T>({g.n, g.o, g.oh, g.ow}, std::move(out), std::move(inputs),
                          [g](Node<T>& node, TensorImpl<T>& res) {
        auto& xi = *node.inputs[0];
        auto& wi = *node.inputs[1];
        const int P = g.pixels(), CK = g.ck(), chunk = chunk_length(g);
        const std::size_t in_stride = static_cast<std::size_t>(g.c) * g.h * g.w;
        if (node.inputs.size() > 2 && node.inputs[2]->requires_grad) {
            T* gb = node.inputs[2]->grad_buffer();
            for (int n = 0; n < g.n; ++n) {
                for (int o = 0; o < g.o; ++o) {
                    const T* src = res.grad.data() + (static_cast<std::size_t>(n) * g.o + o) * P;
                    T acc = 0;
                    for (int p = 0; p < P; ++p) acc += src[p];
                    gb[o] += acc;
                }
            }
        }
        if (!xi.requires_grad && !wi.requires_grad) return;
        std::vector<T> col(static_cast<std::size_t>(CK) * chunk);
        Eigen::Map<const MatR<T>> wm(wi.data.data(), g.o, CK);
        T* gw = wi.requires_grad ? wi.grad_buffer() : nullptr;
        T* gx = xi.requires_grad ? xi.grad_buffer() : nullptr;
        for (int n = 0; n < g.n; ++n) {
            for (int p0 = 0; p0 < P; p0 += chunk) {
                const int len = std::min(chunk, P - p0);
                Eigen::Map<const MatR<T>, 0, Strided> gm(res.grad.data() + static_cast<std::size_t>(n) * g.o * P + p0,
                                                         g.o, len, Strided(P));
                Eigen::Map<MatR<T>> cm(col.data(), CK, len);
                if (gw) {
                    im2col(xi.data.data() + n * in_stride, g, p0, len, col.data());
                    Eigen::Map<MatR<T>> gwm(gw, g.o, CK);
                    gwm.noalias() += gm * cm.transpose();
                }
                if (gx) {
                    cm.noalias() = wm.transpose() * gm;
                    col2im_add(col.data(), g, p0, len, gx + n * in_stride);
                }
            }
        }
    });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
    return unary(x, [slope](T v) { return v >= T(0) ? v : v * slope; },
                 [slope](T v) { return v >= T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return unary(x, [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> add_scaled(const Tensor<T>& a, const Tensor<T>& b, T scale) {
    require_same(a.shape(), b.shape(), "add");
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + scale * b.data()[i];
    return make_result<T>(a.shape(), std::move(out), {a, b}, [scale](Node<T>& node, TensorImpl<T>& res) {
        if (node.inputs[0]->requires_grad) node.inputs[0]->accumulate(res.grad.data());
        if (node.inputs[1]->requires_grad) {
            T* g = node.inputs[1]->grad_buffer();
            for (std::size_t i = 0; i < res.grad.size(); ++i) g[i] += scale * res.grad[i];
        }
    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return add_scaled(a, b, T(1));
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T scale) {
    return unary(a, [scale](T v) { return v * scale; }, [scale](T) { return scale; });
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat of nothing");
    for (const auto& p : parts) require_rank4(p.shape(), "concat_channels");
    const int n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
    int channels = 0;
    for (const auto& p : parts) {
        if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w) {
            fail(ErrorCode::ShapeMismatch, "concat_channels: " + shape_string(parts[0].shape()) + " vs " +
                                               shape_string(p.shape()));
        }
        channels += p.dim(1);
    }
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    std::vector<T> out(static_cast<std::size_t>(n) * channels * hw);
    for (int b = 0; b < n; ++b) {
        T* dst = out.data() + static_cast<std::size_t>(b) * channels * hw;
        for (const auto& p : parts) {
            const std::size_t block = static_cast<std::size_t>(p.dim(1)) * hw;
            std::copy_n(p.data() + b * block, block, dst);
            dst += block;
        }
    }
    return make_result<T>({n, channels, h, w}, std::move(out), parts, [n, channels, hw](Node<T>& node, TensorImpl<T>& res) {
        std::size_t offset = 0;
        for (auto& in : node.inputs) {
            const std::size_t block = static_cast<std::size_t>(in->shape[1]) * hw;
            if (in->requires_grad) {
                T* g = in->grad_buffer();
                for (int b = 0; b < n; ++b) {
                    const T* src = res.grad.data() + static_cast<std::size_t>(b) * channels * hw + offset;
                    for (std::size_t i = 0; i < block; ++i) g[b * block + i] += src[i];
                }
            }
            offset += block;
        }
    });
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
    require_rank4(x.shape(), "upsample_nearest");
    if (factor < 1) fail(ErrorCode::InvalidRange, "upsample factor must be positive");
    const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h * factor, ow = w * factor;
    std::vector<T> out(static_cast<std::size_t>(planes) * oh * ow);
    for (int p = 0; p < planes; ++p) {
        const T* src = x.data() + static_cast<std::size_t>(p) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(p) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const T* row = src + (y / factor) * w;
            for (int xx = 0; xx < ow; ++xx) dst[y * ow + xx] = row[xx / factor];
        }
    }
    return make_result<T>({x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                          [planes, h, w, factor](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        const int oh = h * factor, ow = w * factor;
        for (int p = 0; p < planes; ++p) {
            const T* src = res.grad.data() + static_cast<std::size_t>(p) * oh * ow;
            T* dst = g + static_cast<std::size_t>(p) * h * w;
            for (int y = 0; y < oh; ++y) {
                for (int xx = 0; xx < ow; ++xx) dst[(y / factor) * w + xx / factor] += src[y * ow + xx];
            }
        }
    });
}

namespace {

struct LinearTap {
    int i0, i1;
    double l0, l1;
};

std::vector<LinearTap> bilinear2x_taps(int in) {
    std::vector<LinearTap> taps(static_cast<std::size_t>(in) * 2);
    for (int o = 0; o < in * 2; ++o) {
        const double src = std::max((o + 0.5) * 0.5 - 0.5, 0.0);
        const int i0 = std::min(static_cast<int>(src), in - 1);
        const int i1 = i0 < in - 1 ? i0 + 1 : i0;
        const double l1 = src - i0;
        taps[static_cast<std::size_t>(o)] = {i0, i1, 1.0 - l1, l1};
    }
    return taps;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear2x(const Tensor<T>& x) {
    require_rank4(x.shape(), "upsample_bilinear2x");
    const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = 2 * h, ow = 2 * w;
    const auto ty = bilinear2x_taps(h), tx = bilinear2x_taps(w);
    std::vector<T> out(static_cast<std::size_t>(planes) * oh * ow);
    for (int p = 0; p < planes; ++p) {
        const T* src = x.data() + static_cast<std::size_t>(p) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(p) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const auto& a = ty[static_cast<std::size_t>(y)];
            const T* r0 = src + a.i0 * w;
            const T* r1 = src + a.i1 * w;
            for (int xx = 0; xx < ow; ++xx) {
                const auto& b = tx[static_cast<std::size_t>(xx)];
                dst[y * ow + xx] = static_cast<T>(a.l0 * (b.l0 * r0[b.i0] + b.l1 * r0[b.i1]) +
                                                  a.l1 * (b.l0 * r1[b.i0] + b.l1 * r1[b.i1]));
            }
        }
    }
    return make_result<T>({x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                          [planes, h, w, ty, tx](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        const int oh = 2 * h, ow = 2 * w;
        for (int p = 0; p < planes; ++p) {
            const T* src = res.grad.data() + static_cast<std::size_t>(p) * oh * ow;
            T* dst = g + static_cast<std::size_t>(p) * h * w;
            for (int y = 0; y < oh; ++y) {
                const auto& a = ty[static_cast<std::size_t>(y)];
                for (int xx = 0; xx < ow; ++xx) {
                    const auto& b = tx[static_cast<std::size_t>(xx)];
                    const double v = src[y * ow + xx];
                    dst[a.i0 * w + b.i0] += static_cast<T>(a.l0 * b.l0 * v);
                    dst[a.i0 * w + b.i1] += static_cast<T>(a.l0 * b.l1 * v);
                    dst[a.i1 * w + b.i0] += static_cast<T>(a.l1 * b.l0 * v);
                    dst[a.i1 * w + b.i1] += static_cast<T>(a.l1 * b.l1 * v);
                }
            }
        }
    });
}

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x) {
    require_rank4(x.shape(), "max_pool2x2");
    const int planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = h / 2, ow = w / 2;
    if (oh < 1 || ow < 1) fail(ErrorCode::ShapeMismatch, "max_pool2x2 input smaller than 2x2");
    std::vector<T> out(static_cast<std::size_t>(planes) * oh * ow);
    std::vector<std::size_t> argmax(out.size());
    for (int p = 0; p < planes; ++p) {
        const std::size_t base = static_cast<std::size_t>(p) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int xx = 0; xx < ow; ++xx) {
                std::size_t best = base + static_cast<std::size_t>(2 * y) * w + 2 * xx;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = base + static_cast<std::size_t>(2 * y + dy) * w + 2 * xx + dx;
                        if (x.data()[idx] > x.data()[best]) best = idx;
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(p) * oh + y) * ow + xx;
                out[o] = x.data()[best];
                argmax[o] = best;
            }
        }
    }
    return make_result<T>({x.dim(0), x.dim(1), oh, ow}, std::move(out), {x},
                          [argmax = std::move(argmax)](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += res.grad[o];
    });
}

template <typename T>
Tensor<T> normalize_channels(const Tensor<T>& x, const std::array<T, 3>& mean, const std::array<T, 3>& std) {
    require_rank4(x.shape(), "normalize_channels");
    if (x.dim(1) != 3) fail(ErrorCode::ShapeMismatch, "normalize_channels expects 3 channels");
    const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t c = (i / hw) % 3;
        out[i] = (x.data()[i] - mean[c]) / std[c];
    }
    return make_result<T>(x.shape(), std::move(out), {x}, [hw, std](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        for (std::size_t i = 0; i < res.grad.size(); ++i) g[i] += res.grad[i] / std[(i / hw) % 3];
    });
}

template <typename T>
Tensor<T> spectral_scale(const Tensor<T>& weight, const std::vector<T>& u, const std::vector<T>& v) {
    const int rows = weight.dim(0);
    const int cols = static_cast<int>(weight.size() / static_cast<std::size_t>(rows));
    if (static_cast<int>(u.size()) != rows || static_cast<int>(v.size()) != cols) {
        fail(ErrorCode::ShapeMismatch, "spectral vectors do not match weight " + shape_string(weight.shape()));
    }
    Eigen::Map<const MatR<T>> wm(weight.data(), rows, cols);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> um(u.data(), rows), vm(v.data(), cols);
    const T sigma = um.dot(wm * vm);
    if (!(std::abs(sigma) >= T(1e-12))) fail(ErrorCode::ZeroMatrix, "spectral norm estimate is zero");
    std::vector<T> out(weight.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight.data()[i] / sigma;
    return make_result<T>(weight.shape(), std::move(out), {weight},
                          [u, v, sigma, rows, cols](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T inner = 0;
        for (std::size_t i = 0; i < res.grad.size(); ++i) inner += res.grad[i] * in.data[i];
        T* g = in.grad_buffer();
        const T coef = inner / (sigma * sigma);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * cols + c;
                g[i] += res.grad[i] / sigma - coef * u[static_cast<std::size_t>(r)] * v[static_cast<std::size_t>(c)];
            }
        }
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
    double acc = 0.0;
    for (T v : x.values()) acc += v;
    const double n = static_cast<double>(x.size());
    return make_result<T>({}, {static_cast<T>(acc / n)}, {x}, [n](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        const T step = static_cast<T>(res.grad[0] / n);
        for (std::size_t i = 0; i < in.data.size(); ++i) g[i] += step;
    });
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same(pred.shape(), target.shape(), "l1_mean");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(static_cast<double>(pred.data()[i]) - target.data()[i]);
    const double n = static_cast<double>(pred.size());
    return make_result<T>({}, {static_cast<T>(acc / n)}, {pred, target}, [n](Node<T>& node, TensorImpl<T>& res) {
        auto& p = *node.inputs[0];
        auto& t = *node.inputs[1];
        const T step = static_cast<T>(res.grad[0] / n);
        T* gp = p.requires_grad ? p.grad_buffer() : nullptr;
        T* gt = t.requires_grad ? t.grad_buffer() : nullptr;
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const T d = p.data[i] - t.data[i];
            const T s = d > T(0) ? step : (d < T(0) ? -step : T(0));
            if (gp) gp[i] += s;
            if (gt) gt[i] -= s;
        }
    });
}

template <typename T>
Tensor<T> bce_with_logits_mean(const Tensor<T>& logits, T label) {
    double acc = 0.0;
    for (T zt : logits.values()) {
        const double z = zt;
        if (!std::isfinite(z)) fail(ErrorCode::NonFiniteLogits, "discriminator produced a non-finite logit");
        acc += std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
    }
    const double n = static_cast<double>(logits.size());
    return make_result<T>({}, {static_cast<T>(acc / n)}, {logits}, [n, label](Node<T>& node, TensorImpl<T>& res) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        T* g = in.grad_buffer();
        const double step = res.grad[0] / n;
        for (std::size_t i = 0; i < in.data.size(); ++i) {
            const double z = in.data[i];
            const double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            g[i] += static_cast<T>((sig - label) * step);
        }
    });
}

template <typename T>
Tensor<T> weighted_sum(const std::vector<std::pair<Tensor<T>, T>>& terms) {
    double acc = 0.0;
    std::vector<Tensor<T>> inputs;
    std::vector<T> weights;
    for (const auto& [t, w] : terms) {
        acc += static_cast<double>(w) * t.item();
        inputs.push_back(t);
        weights.push_back(w);
    }
    return make_result<T>({}, {static_cast<T>(acc)}, std::move(inputs), [weights](Node<T>& node, TensorImpl<T>& res) {
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
            auto& in = *node.inputs[i];
            if (in.requires_grad) in.grad_buffer()[0] += weights[i] * res.grad[0];
        }
    });
}

#define UWSR_INSTANTIATE_OPS(T)                                                                           \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);            \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                   \
    template Tensor<T> relu(const Tensor<T>&);                                                            \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                           \
    template Tensor<T> add_scaled(const Tensor<T>&, const Tensor<T>&, T);                                 \
    template Tensor<T> mul_scalar(const Tensor<T>&, T);                                                   \
    template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                                    \
    template Tensor<T> upsample_nearest(const Tensor<T>&, int);                                           \
    template Tensor<T> upsample_bilinear2x(const Tensor<T>&);                                             \
    template Tensor<T> max_pool2x2(const Tensor<T>&);                                                     \
    template Tensor<T> normalize_channels(const Tensor<T>&, const std::array<T, 3>&, const std::array<T, 3>&); \
    template Tensor<T> spectral_scale(const Tensor<T>&, const std::vector<T>&, const std::vector<T>&);     \
    template Tensor<T> mean(const Tensor<T>&);                                                            \
    template Tensor<T> l1_mean(const Tensor<T>&, const Tensor<T>&);                                       \
    template Tensor<T> bce_with_logits_mean(const Tensor<T>&, T);                                         \
    template Tensor<T> weighted_sum(const std::vector<std::pair<Tensor<T>, T>>&);

UWSR_INSTANTIATE_OPS(float)
UWSR_INSTANTIATE_OPS(double)

}  // namespace uwsr::nn
