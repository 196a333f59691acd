// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/nn/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

#include "gazeforge/simd/kernels.hpp"

namespace gazeforge::nn {

std::size_t window_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad_begin, std::size_t pad_end, const std::string& what) {
    if (stride == 0) throw ConfigError(what + ": stride must be >= 1");
    if (kernel == 0) throw ConfigError(what + ": kernel/window size must be >= 1");
    const std::size_t padded = in + pad_begin + pad_end;
    if (padded < kernel) {
        throw ConfigError(what + ": window " + std::to_string(kernel) + " does not fit input extent " +
                          std::to_string(in) + " (padding " + std::to_string(pad_begin) + "+" +
                          std::to_string(pad_end) + ")");
    }
    return (padded - kernel) / stride + 1;
}

Padding2d same_padding(std::size_t in_h, std::size_t in_w, std::size_t kernel, std::size_t stride) {
    auto split = [&](std::size_t in) -> std::pair<std::size_t, std::size_t> {
        const std::size_t out = (in + stride - 1) / stride;
        const std::size_t needed = (out - 1) * stride + kernel;
        const std::size_t total = needed > in ? needed - in : 0;
        return {total / 2, total - total / 2};
    };
    const auto [t, b] = split(in_h);
    const auto [l, r] = split(in_w);
    return {t, b, l, r};
}

namespace {

std::string layer_prefix(const std::string& label) { return "layer '" + label + "'"; }

struct ConvGeometry {
    std::size_t n, c, h, w;
    std::size_t oc, kh, kw;
    std::size_t stride;
    Padding2d pad;
    std::size_t oh, ow;

    std::size_t patch() const { return c * kh * kw; }
    std::size_t out_plane() const { return oh * ow; }
    std::size_t in_image() const { return c * h * w; }
    bool pointwise() const {
        return kh == 1 && kw == 1 && stride == 1 && pad == Padding2d{};
    }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& wt, const Shape& b, std::size_t stride,
                           Padding2d pad, const std::string& label) {
    const std::string who = layer_prefix(label);
    if (x.rank() != 4) throw ConfigError(who + ": conv2d input must be NCHW, got " + x.str());
    if (wt.rank() != 4) throw ConfigError(who + ": conv2d weight must be OutC x InC x Kh x Kw, got " + wt.str());
    if (wt[1] != x[1]) {
        throw ConfigError(who + ": conv2d weight expects " + std::to_string(wt[1]) +
                          " input channels, input has " + std::to_string(x[1]));
    }
    if (b.numel() != wt[0]) {
        throw ConfigError(who + ": conv2d bias has " + std::to_string(b.numel()) + " entries, expected " +
                          std::to_string(wt[0]));
    }
    ConvGeometry g{x[0], x[1], x[2], x[3], wt[0], wt[2], wt[3], stride, pad, 0, 0};
    g.oh = window_out_extent(g.h, g.kh, stride, pad.top, pad.bottom, who);
    g.ow = window_out_extent(g.w, g.kw, stride, pad.left, pad.right, who);
    return g;
}

// Output column range [lo, hi) whose input column (ow*s + k - pad) lies inside [0, extent).
inline void valid_range(std::size_t k, std::size_t pad, std::size_t stride, std::size_t extent,
                        std::size_t out, std::size_t& lo, std::size_t& hi) {
    lo = k >= pad ? 0 : (pad - k + stride - 1) / stride;
    const std::size_t limit = extent + pad;  // need ow*s + k < limit
    hi = limit > k ? (limit - k + stride - 1) / stride : 0;
    lo = std::min(lo, out);
    hi = std::min(std::max(hi, lo), out);
}

template <class T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
    const std::size_t plane = g.out_plane();
    for (std::size_t c = 0; c < g.c; ++c) {
        const T* xc = x + c * g.h * g.w;
        for (std::size_t ki = 0; ki < g.kh; ++ki) {
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                T* row = col + ((c * g.kh + ki) * g.kw + kj) * plane;
                std::size_t lo, hi;
                valid_range(kj, g.pad.left, g.stride, g.w, g.ow, lo, hi);
                for (std::size_t oi = 0; oi < g.oh; ++oi) {
                    T* out = row + oi * g.ow;
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oi * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad.top);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) {
                        std::fill(out, out + g.ow, T(0));
                        continue;
                    }
                    const T* xrow = xc + static_cast<std::size_t>(ih) * g.w;
                    std::fill(out, out + lo, T(0));
                    if (g.stride == 1) {
                        if (hi > lo) std::memcpy(out + lo, xrow + lo + kj - g.pad.left, (hi - lo) * sizeof(T));
                    } else {
                        for (std::size_t oj = lo; oj < hi; ++oj) out[oj] = xrow[oj * g.stride + kj - g.pad.left];
                    }
                    std::fill(out + hi, out + g.ow, T(0));
                }
            }
        }
    }
}

template <class T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
    const std::size_t plane = g.out_plane();
    for (std::size_t c = 0; c < g.c; ++c) {
        T* dxc = dx + c * g.h * g.w;
        for (std::size_t ki = 0; ki < g.kh; ++ki) {
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                const T* row = col + ((c * g.kh + ki) * g.kw + kj) * plane;
                std::size_t lo, hi;
                valid_range(kj, g.pad.left, g.stride, g.w, g.ow, lo, hi);
                for (std::size_t oi = 0; oi < g.oh; ++oi) {
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oi * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad.top);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    T* dxrow = dxc + static_cast<std::size_t>(ih) * g.w;
                    const T* in = row + oi * g.ow;
                    for (std::size_t oj = lo; oj < hi; ++oj) dxrow[oj * g.stride + kj - g.pad.left] += in[oj];
                }
            }
        }
    }
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const std::string& what) {
    if (a.shape() != b.shape()) {
        throw ConfigError(what + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

}  // namespace

namespace ops {

template <class T>
NodeId conv2d(Graph<T>& g, NodeId x, NodeId weight, NodeId bias, std::size_t stride,
              Padding2d padding, const std::string& label) {
    const auto& xv = g.value(x);
    const auto& wv = g.value(weight);
    const auto& bv = g.value(bias);
    const ConvGeometry geo = conv_geometry(xv.shape(), wv.shape(), bv.shape(), stride, padding, label);
    const auto& k = simd::kernels<T>();

    Tensor<T> y(Shape{geo.n, geo.oc, geo.oh, geo.ow});
    const std::size_t plane = geo.out_plane();
    std::vector<T> col(geo.pointwise() ? 0 : geo.patch() * plane);
    for (std::size_t n = 0; n < geo.n; ++n) {
        const T* xn = xv.data() + n * geo.in_image();
        const T* src = xn;
        if (!geo.pointwise()) {
            im2col(xn, geo, col.data());
            src = col.data();
        }
        T* yn = y.data() + n * geo.oc * plane;
        k.gemm(false, false, geo.oc, plane, geo.patch(), T(1), wv.data(), geo.patch(), src, plane, T(0),
               yn, plane);
        for (std::size_t o = 0; o < geo.oc; ++o) {
            T* row = yn + o * plane;
            const T bo = bv[o];
            for (std::size_t i = 0; i < plane; ++i) row[i] += bo;
        }
    }

    return g.record("conv2d", label, std::move(y), {x, weight, bias}, [=](Graph<T>& gr, NodeId self) {
        const auto& kk = simd::kernels<T>();
        const Tensor<T>& dy = gr.grad(self);
        const Tensor<T>& xval = gr.value(x);
        const Tensor<T>& wval = gr.value(weight);
        const bool need_x = gr.requires_grad(x);
        const bool need_w = gr.requires_grad(weight);
        const bool need_b = gr.requires_grad(bias);
        T* dw = need_w ? gr.grad(weight).data() : nullptr;
        T* db = need_b ? gr.grad(bias).data() : nullptr;
        T* dx = need_x ? gr.grad(x).data() : nullptr;
        const std::size_t pl = geo.out_plane();
        std::vector<T> colbuf(geo.pointwise() ? 0 : geo.patch() * pl);
        for (std::size_t n = 0; n < geo.n; ++n) {
            const T* dyn = dy.data() + n * geo.oc * pl;
            if (db) {
                for (std::size_t o = 0; o < geo.oc; ++o) db[o] += kk.sum(pl, dyn + o * pl);
            }
            if (dw) {
                const T* xn = xval.data() + n * geo.in_image();
                const T* src = xn;
                if (!geo.pointwise()) {
                    im2col(xn, geo, colbuf.data());
                    src = colbuf.data();
                }
                kk.gemm(false, true, geo.oc, geo.patch(), pl, T(1), dyn, pl, src, pl, T(1), dw,
                        geo.patch());
            }
            if (dx) {
                T* dxn = dx + n * geo.in_image();
                if (geo.pointwise()) {
                    kk.gemm(true, false, geo.patch(), pl, geo.oc, T(1), wval.data(), geo.patch(), dyn, pl,
                            T(1), dxn, pl);
                } else {
                    kk.gemm(true, false, geo.patch(), pl, geo.oc, T(1), wval.data(), geo.patch(), dyn, pl,
                            T(0), colbuf.data(), pl);
                    col2im_add(colbuf.data(), geo, dxn);
                }
            }
        }
    });
}

template <class T>
NodeId pool2d(Graph<T>& g, NodeId x, PoolMode mode, std::size_t size, std::size_t stride,
              std::size_t padding, const std::string& label) {
    const std::string who = layer_prefix(label);
    const auto& xv = g.value(x);
    if (xv.rank() != 4) throw ConfigError(who + ": pool2d input must be NCHW, got " + xv.shape().str());
    if (stride == 0) stride = size;
    if (size > 0 && padding >= size) throw ConfigError(who + ": pool padding must be smaller than the window");
    const std::size_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
    const std::size_t oh = window_out_extent(h, size, stride, padding, padding, who);
    const std::size_t ow = window_out_extent(w, size, stride, padding, padding, who);

    Tensor<T> y(Shape{n, c, oh, ow});
    // avg: number of in-bounds taps per output cell; max: flat argmax within the input plane.
    auto aux = std::make_shared<std::vector<std::uint32_t>>(mode == PoolMode::max ? y.size() : oh * ow);
    auto window = [&](std::size_t oi, std::size_t oj, std::size_t& h0, std::size_t& h1, std::size_t& w0,
                      std::size_t& w1) {
        const std::ptrdiff_t hs = static_cast<std::ptrdiff_t>(oi * stride) - static_cast<std::ptrdiff_t>(padding);
        const std::ptrdiff_t ws = static_cast<std::ptrdiff_t>(oj * stride) - static_cast<std::ptrdiff_t>(padding);
        h0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(hs, 0));
        w0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(ws, 0));
        h1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(hs + static_cast<std::ptrdiff_t>(size), h));
        w1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(ws + static_cast<std::ptrdiff_t>(size), w));
    };
    if (mode == PoolMode::avg) {
        for (std::size_t oi = 0; oi < oh; ++oi) {
            for (std::size_t oj = 0; oj < ow; ++oj) {
                std::size_t h0, h1, w0, w1;
                window(oi, oj, h0, h1, w0, w1);
                (*aux)[oi * ow + oj] = static_cast<std::uint32_t>((h1 - h0) * (w1 - w0));
            }
        }
    }
    for (std::size_t p = 0; p < n * c; ++p) {
        const T* in = xv.data() + p * h * w;
        T* out = y.data() + p * oh * ow;
        for (std::size_t oi = 0; oi < oh; ++oi) {
            for (std::size_t oj = 0; oj < ow; ++oj) {
                std::size_t h0, h1, w0, w1;
                window(oi, oj, h0, h1, w0, w1);
                if (mode == PoolMode::avg) {
                    T s = 0;
                    for (std::size_t i = h0; i < h1; ++i)
                        for (std::size_t j = w0; j < w1; ++j) s += in[i * w + j];
                    out[oi * ow + oj] = s / static_cast<T>((*aux)[oi * ow + oj]);
                } else {
                    T best = -std::numeric_limits<T>::infinity();
                    std::size_t arg = h0 * w + w0;
                    for (std::size_t i = h0; i < h1; ++i)
                        for (std::size_t j = w0; j < w1; ++j)
                            if (in[i * w + j] > best) {
                                best = in[i * w + j];
                                arg = i * w + j;
                            }
                    out[oi * ow + oj] = best;
                    (*aux)[p * oh * ow + oi * ow + oj] = static_cast<std::uint32_t>(arg);
                }
            }
        }
    }

    const std::string op = mode == PoolMode::avg ? "avg_pool2d" : "max_pool2d";
    return g.record(op, label, std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        Tensor<T>& dx = gr.grad(x);
        for (std::size_t p = 0; p < n * c; ++p) {
            const T* gin = dy.data() + p * oh * ow;
            T* gout = dx.data() + p * h * w;
            for (std::size_t oi = 0; oi < oh; ++oi) {
                for (std::size_t oj = 0; oj < ow; ++oj) {
                    const T gv = gin[oi * ow + oj];
                    if (mode == PoolMode::max) {
                        gout[(*aux)[p * oh * ow + oi * ow + oj]] += gv;
                        continue;
                    }
                    const std::ptrdiff_t hs =
                        static_cast<std::ptrdiff_t>(oi * stride) - static_cast<std::ptrdiff_t>(padding);
                    const std::ptrdiff_t ws =
                        static_cast<std::ptrdiff_t>(oj * stride) - static_cast<std::ptrdiff_t>(padding);
                    const std::size_t h0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(hs, 0));
                    const std::size_t w0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(ws, 0));
                    const std::size_t h1 = static_cast<std::size_t>(
                        std::min<std::ptrdiff_t>(hs + static_cast<std::ptrdiff_t>(size), h));
                    const std::size_t w1 = static_cast<std::size_t>(
                        std::min<std::ptrdiff_t>(ws + static_cast<std::ptrdiff_t>(size), w));
                    const T share = gv / static_cast<T>((*aux)[oi * ow + oj]);
                    for (std::size_t i = h0; i < h1; ++i)
                        for (std::size_t j = w0; j < w1; ++j) gout[i * w + j] += share;
                }
            }
        }
    });
}

template <class T>
NodeId batch_norm(Graph<T>& g, NodeId x, NodeId gamma, NodeId beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, Mode mode, const std::string& label) {
    const std::string who = layer_prefix(label);
    const auto& xv = g.value(x);
    if (xv.rank() != 2 && xv.rank() != 4) {
        throw ConfigError(who + ": batch_norm expects N x C or N x C x H x W, got " + xv.shape().str());
    }
    const std::size_t n = xv.dim(0), c = xv.dim(1);
    const std::size_t inner = xv.rank() == 4 ? xv.dim(2) * xv.dim(3) : 1;
    const auto& gv = g.value(gamma);
    const auto& bv = g.value(beta);
    for (const Tensor<T>* t : {&gv, &bv, static_cast<const Tensor<T>*>(&running_mean),
                               static_cast<const Tensor<T>*>(&running_var)}) {
        if (t->size() != c) {
            throw ConfigError(who + ": batch_norm parameters have " + std::to_string(t->size()) +
                              " channels, input has " + std::to_string(c));
        }
    }
    const auto& k = simd::kernels<T>();
    const T eps = static_cast<T>(kBatchNormEps);
    const T momentum = static_cast<T>(kBatchNormMomentum);
    const std::size_t m = n * inner;

    auto xhat = std::make_shared<Tensor<T>>(xv.shape());
    auto inv_std = std::make_shared<std::vector<T>>(c);
    Tensor<T> y(xv.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        T mean, var;
        if (mode == Mode::train) {
            T s = 0;
            for (std::size_t b = 0; b < n; ++b) s += k.sum(inner, xv.data() + (b * c + ch) * inner);
            mean = s / static_cast<T>(m);
            T ss = 0;
            for (std::size_t b = 0; b < n; ++b) {
                const T* p = xv.data() + (b * c + ch) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    const T d = p[i] - mean;
                    ss += d * d;
                }
            }
            var = ss / static_cast<T>(m);
            running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * mean;
            running_var[ch] = (T(1) - momentum) * running_var[ch] + momentum * var;
        } else {
            mean = running_mean[ch];
            var = running_var[ch];
        }
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)[ch] = is;
        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t off = (b * c + ch) * inner;
            k.scale_shift(inner, is, -mean * is, xv.data() + off, xhat->data() + off);
            k.scale_shift(inner, gv[ch], bv[ch], xhat->data() + off, y.data() + off);
        }
    }

    return g.record("batch_norm", label, std::move(y), {x, gamma, beta}, [=](Graph<T>& gr, NodeId self) {
        const auto& kk = simd::kernels<T>();
        const Tensor<T>& dy = gr.grad(self);
        const Tensor<T>& gam = gr.value(gamma);
        T* dg = gr.requires_grad(gamma) ? gr.grad(gamma).data() : nullptr;
        T* dbeta = gr.requires_grad(beta) ? gr.grad(beta).data() : nullptr;
        T* dx = gr.requires_grad(x) ? gr.grad(x).data() : nullptr;
        for (std::size_t ch = 0; ch < c; ++ch) {
            T sum_dy = 0, sum_dy_xhat = 0;
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t off = (b * c + ch) * inner;
                sum_dy += kk.sum(inner, dy.data() + off);
                sum_dy_xhat += kk.dot(inner, dy.data() + off, xhat->data() + off);
            }
            if (dg) dg[ch] += sum_dy_xhat;
            if (dbeta) dbeta[ch] += sum_dy;
            if (!dx) continue;
            const T scale = gam[ch] * (*inv_std)[ch];
            if (mode == Mode::eval) {
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t off = (b * c + ch) * inner;
                    kk.axpy(inner, scale, dy.data() + off, dx + off);
                }
                continue;
            }
            const T mean_dy = sum_dy / static_cast<T>(m);
            const T mean_dy_xhat = sum_dy_xhat / static_cast<T>(m);
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t off = (b * c + ch) * inner;
                const T* gy = dy.data() + off;
                const T* xh = xhat->data() + off;
                T* gx = dx + off;
                for (std::size_t i = 0; i < inner; ++i) {
                    gx[i] += scale * (gy[i] - mean_dy - xh[i] * mean_dy_xhat);
                }
            }
        }
    });
}

template <class T>
NodeId activation(Graph<T>& g, NodeId x, ActivationKind kind, double slope, const std::string& label) {
    const auto& xv = g.value(x);
    const T s = kind == ActivationKind::relu ? T(0) : static_cast<T>(slope);
    Tensor<T> y(xv.shape());
    simd::kernels<T>().leaky_relu(xv.size(), s, xv.data(), y.data());
    const std::string op = kind == ActivationKind::relu ? "relu" : "leaky_relu";
    return g.record(op, label, std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        simd::kernels<T>().leaky_relu_backward(dy.size(), s, gr.value(x).data(), dy.data(),
                                               gr.grad(x).data());
    });
}

template <class T>
NodeId dense(Graph<T>& g, NodeId x, NodeId weight, NodeId bias, const std::string& label) {
    const std::string who = layer_prefix(label);
    const auto& xv = g.value(x);
    const auto& wv = g.value(weight);
    const auto& bv = g.value(bias);
    if (xv.rank() != 2) throw ConfigError(who + ": dense input must be N x D, got " + xv.shape().str());
    if (wv.rank() != 2 || wv.dim(0) != xv.dim(1)) {
        throw ConfigError(who + ": dense weight " + wv.shape().str() + " does not accept input " +
                          xv.shape().str());
    }
    const std::size_t n = xv.dim(0), d = xv.dim(1), u = wv.dim(1);
    if (bv.size() != u) {
        throw ConfigError(who + ": dense bias has " + std::to_string(bv.size()) + " entries, expected " +
                          std::to_string(u));
    }
    Tensor<T> y(Shape{n, u});
    const auto& k = simd::kernels<T>();
    k.gemm(false, false, n, u, d, T(1), xv.data(), d, wv.data(), u, T(0), y.data(), u);
    for (std::size_t r = 0; r < n; ++r) k.axpy(u, T(1), bv.data(), y.data() + r * u);

    return g.record("dense", label, std::move(y), {x, weight, bias}, [=](Graph<T>& gr, NodeId self) {
        const auto& kk = simd::kernels<T>();
        const Tensor<T>& dy = gr.grad(self);
        if (gr.requires_grad(weight)) {
            kk.gemm(true, false, d, u, n, T(1), gr.value(x).data(), d, dy.data(), u, T(1),
                    gr.grad(weight).data(), u);
        }
        if (gr.requires_grad(bias)) {
            T* db = gr.grad(bias).data();
            for (std::size_t r = 0; r < n; ++r) kk.axpy(u, T(1), dy.data() + r * u, db);
        }
        if (gr.requires_grad(x)) {
            kk.gemm(false, true, n, d, u, T(1), dy.data(), u, gr.value(weight).data(), u, T(1),
                    gr.grad(x).data(), d);
        }
    });
}

template <class T>
NodeId dropout(Graph<T>& g, NodeId x, double rate, Rng& rng, Mode mode, const std::string& label) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError(layer_prefix(label) + ": dropout rate must lie in [0, 1)");
    }
    if (mode == Mode::eval || rate == 0.0) return x;
    const auto& xv = g.value(x);
    auto mask = std::make_shared<Tensor<T>>(xv.shape());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < mask->size(); ++i) (*mask)[i] = rng.uniform() < rate ? T(0) : keep_scale;
    Tensor<T> y(xv.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * (*mask)[i];
    return g.record("dropout", label, std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        Tensor<T>& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (*mask)[i];
    });
}

template <class T>
NodeId concat(Graph<T>& g, const std::vector<NodeId>& xs, const std::string& label) {
    const std::string who = layer_prefix(label);
    if (xs.empty()) throw ConfigError(who + ": concat needs at least one input");
    if (xs.size() == 1) return xs.front();
    const Shape& first = g.value(xs.front()).shape();
    if (first.rank() < 2) throw ConfigError(who + ": concat inputs need rank >= 2");
    std::vector<std::size_t> channels;
    std::size_t total = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Shape& s = g.value(xs[i]).shape();
        bool ok = s.rank() == first.rank() && s[0] == first[0];
        for (std::size_t d = 2; ok && d < s.rank(); ++d) ok = s[d] == first[d];
        if (!ok) {
            throw ConfigError(who + ": concat input " + std::to_string(i) + " has shape " + s.str() +
                              ", incompatible with " + first.str() + " (batch and spatial extents must match)");
        }
        channels.push_back(s[1]);
        total += s[1];
    }
    std::vector<std::size_t> dims = first.dims();
    dims[1] = total;
    const std::size_t n = first[0];
    const std::size_t inner = Shape(dims).numel() / (n * total);
    Tensor<T> y{Shape(dims)};
    for (std::size_t b = 0; b < n; ++b) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::size_t block = channels[i] * inner;
            const T* src = g.value(xs[i]).data() + b * block;
            std::copy(src, src + block, y.data() + (b * total + offset) * inner);
            offset += channels[i];
        }
    }
    return g.record("concat", label, std::move(y), xs, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        std::size_t offset = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::size_t block = channels[i] * inner;
            if (gr.requires_grad(xs[i])) {
                T* dst = gr.grad(xs[i]).data();
                for (std::size_t b = 0; b < n; ++b) {
                    const T* src = dy.data() + (b * total + offset) * inner;
                    for (std::size_t j = 0; j < block; ++j) dst[b * block + j] += src[j];
                }
            }
            offset += channels[i];
        }
    });
}

template <class T>
NodeId add(Graph<T>& g, NodeId a, NodeId b, const std::string& label) {
    const auto& av = g.value(a);
    const auto& bv = g.value(b);
    require_same_shape(av, bv, layer_prefix(label) + ": residual add");
    Tensor<T> y = av;
    simd::kernels<T>().axpy(y.size(), T(1), bv.data(), y.data());
    return g.record("add", label, std::move(y), {a, b}, [=](Graph<T>& gr, NodeId self) {
        const auto& kk = simd::kernels<T>();
        const Tensor<T>& dy = gr.grad(self);
        if (gr.requires_grad(a)) kk.axpy(dy.size(), T(1), dy.data(), gr.grad(a).data());
        if (gr.requires_grad(b)) kk.axpy(dy.size(), T(1), dy.data(), gr.grad(b).data());
    });
}

template <class T>
NodeId flatten(Graph<T>& g, NodeId x, const std::string& label) {
    const auto& xv = g.value(x);
    if (xv.rank() == 2) return x;
    const std::size_t n = xv.dim(0);
    Tensor<T> y = xv.reshaped(Shape{n, xv.size() / std::max<std::size_t>(n, 1)});
    return g.record("flatten", label, std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        simd::kernels<T>().axpy(dy.size(), T(1), dy.data(), gr.grad(x).data());
    });
}

template <class T>
NodeId flip_horizontal(Graph<T>& g, NodeId x, const std::string& label) {
    Tensor<T> y = nn::flip_horizontal(g.value(x));
    const std::size_t w = y.dim(3);
    const std::size_t rows = y.size() / w;
    return g.record("flip_horizontal", label, std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const Tensor<T>& dy = gr.grad(self);
        Tensor<T>& dx = gr.grad(x);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j) dx[r * w + j] += dy[r * w + (w - 1 - j)];
    });
}

template <class T>
NodeId mse_loss(Graph<T>& g, NodeId pred, NodeId target) {
    const auto& p = g.value(pred);
    const auto& t = g.value(target);
    if (p.shape() != t.shape()) {
        throw UsageError("mse_loss: prediction " + p.shape().str() + " vs target " + t.shape().str());
    }
    T s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const T d = p[i] - t[i];
        s += d * d;
    }
    const T count = static_cast<T>(p.size());
    Tensor<T> y(Shape{1}, s / count);
    return g.record("mse_loss", "loss", std::move(y), {pred, target}, [=](Graph<T>& gr, NodeId self) {
        const T seed = gr.grad(self)[0];
        const Tensor<T>& pv = gr.value(pred);
        const Tensor<T>& tv = gr.value(target);
        const T c = T(2) * seed / count;
        if (gr.requires_grad(pred)) {
            Tensor<T>& dp = gr.grad(pred);
            for (std::size_t i = 0; i < pv.size(); ++i) dp[i] += c * (pv[i] - tv[i]);
        }
        if (gr.requires_grad(target)) {
            Tensor<T>& dt = gr.grad(target);
            for (std::size_t i = 0; i < pv.size(); ++i) dt[i] -= c * (pv[i] - tv[i]);
        }
    });
}

template <class T>
NodeId sum(Graph<T>& g, NodeId x) {
    const auto& xv = g.value(x);
    Tensor<T> y(Shape{1}, simd::kernels<T>().sum(xv.size(), xv.data()));
    return g.record("sum", "sum", std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const T seed = gr.grad(self)[0];
        Tensor<T>& dx = gr.grad(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += seed;
    });
}

template <class T>
NodeId weighted_sum(Graph<T>& g, NodeId x, const Tensor<T>& weights) {
    const auto& xv = g.value(x);
    if (weights.size() != xv.size()) {
        throw UsageError("weighted_sum: weight count " + std::to_string(weights.size()) + " vs input " +
                         xv.shape().str());
    }
    Tensor<T> y(Shape{1}, simd::kernels<T>().dot(xv.size(), xv.data(), weights.data()));
    auto w = std::make_shared<Tensor<T>>(weights);
    return g.record("weighted_sum", "weighted_sum", std::move(y), {x}, [=](Graph<T>& gr, NodeId self) {
        const T seed = gr.grad(self)[0];
        simd::kernels<T>().axpy(w->size(), seed, w->data(), gr.grad(x).data());
    });
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Tensor-level wrappers run the graph op on constant leaves.

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, Padding2d padding) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    const NodeId w = g.constant(weight);
    const NodeId b = g.constant(bias);
    return g.value(ops::conv2d(g, x, w, b, stride, padding, "conv2d"));
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
    return conv2d(input, weight, bias, stride, Padding2d::uniform(padding));
}

template <class T>
Tensor<T> pool2d(const Tensor<T>& input, PoolMode mode, std::size_t size, std::size_t stride,
                 std::size_t padding) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    return g.value(ops::pool2d(g, x, mode, size, stride, padding, "pool2d"));
}

template <class T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    const NodeId ga = g.constant(gamma);
    const NodeId be = g.constant(beta);
    return g.value(ops::batch_norm(g, x, ga, be, running_mean, running_var, mode, "batch_norm"));
}

template <class T>
Tensor<T> activation(const Tensor<T>& input, ActivationKind kind, double slope) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    return g.value(ops::activation(g, x, kind, slope, "activation"));
}

template <class T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    const NodeId w = g.constant(weight);
    const NodeId b = g.constant(bias);
    return g.value(ops::dense(g, x, w, b, "dense"));
}

template <class T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Rng& rng, Mode mode) {
    Graph<T> g;
    const NodeId x = g.constant(input);
    return g.value(ops::dropout(g, x, rate, rng, mode, "dropout"));
}

template <class T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& inputs) {
    Graph<T> g;
    std::vector<NodeId> ids;
    for (const auto* t : inputs) ids.push_back(g.constant(*t));
    return g.value(ops::concat(g, ids, "concat"));
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& input, std::size_t begin, std::size_t end) {
    if (input.rank() < 2 || begin > end || end > input.dim(1)) {
        throw ConfigError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                          ") invalid for " + input.shape().str());
    }
    const std::size_t n = input.dim(0), c = input.dim(1);
    const std::size_t inner = input.size() / std::max<std::size_t>(n * c, 1);
    std::vector<std::size_t> dims = input.shape().dims();
    dims[1] = end - begin;
    Tensor<T> out{Shape(dims)};
    for (std::size_t b = 0; b < n; ++b) {
        const T* src = input.data() + (b * c + begin) * inner;
        std::copy(src, src + (end - begin) * inner, out.data() + b * (end - begin) * inner);
    }
    return out;
}

template <class T>
Tensor<T> add_residual(const Tensor<T>& a, const Tensor<T>& b) {
    Graph<T> g;
    const NodeId x = g.constant(a);
    const NodeId y = g.constant(b);
    return g.value(ops::add(g, x, y, "add_residual"));
}

template <class T>
Tensor<T> flip_horizontal(const Tensor<T>& input) {
    if (input.rank() != 4) throw ConfigError("flip_horizontal expects NCHW, got " + input.shape().str());
    Tensor<T> out(input.shape());
    const std::size_t w = input.dim(3);
    const std::size_t rows = input.size() / w;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] = input[r * w + (w - 1 - j)];
    return out;
}

#define GAZEFORGE_INSTANTIATE_OPS(T)                                                                   \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                              std::size_t);                                                            \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,       \
                              Padding2d);                                                              \
    template Tensor<T> pool2d(const Tensor<T>&, PoolMode, std::size_t, std::size_t, std::size_t);      \
    template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&,    \
                                  Tensor<T>&, Mode);                                                   \
    template Tensor<T> activation(const Tensor<T>&, ActivationKind, double);                          \
    template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                    \
    template Tensor<T> dropout(const Tensor<T>&, double, Rng&, Mode);                                  \
    template Tensor<T> concat_channels(const std::vector<const Tensor<T>*>&);                         \
    template Tensor<T> slice_channels(const Tensor<T>&, std::size_t, std::size_t);                    \
    template Tensor<T> add_residual(const Tensor<T>&, const Tensor<T>&);                               \
    template Tensor<T> flip_horizontal(const Tensor<T>&);                                              \
    template NodeId ops::conv2d(Graph<T>&, NodeId, NodeId, NodeId, std::size_t, Padding2d,             \
                                const std::string&);                                                   \
    template NodeId ops::pool2d(Graph<T>&, NodeId, PoolMode, std::size_t, std::size_t, std::size_t,    \
                                const std::string&);                                                   \
    template NodeId ops::batch_norm(Graph<T>&, NodeId, NodeId, NodeId, Tensor<T>&, Tensor<T>&, Mode,   \
                                    const std::string&);                                               \
    template NodeId ops::activation(Graph<T>&, NodeId, ActivationKind, double, const std::string&);    \
    template NodeId ops::dense(Graph<T>&, NodeId, NodeId, NodeId, const std::string&);                 \
    template NodeId ops::dropout(Graph<T>&, NodeId, double, Rng&, Mode, const std::string&);           \
    template NodeId ops::concat(Graph<T>&, const std::vector<NodeId>&, const std::string&);            \
    template NodeId ops::add(Graph<T>&, NodeId, NodeId, const std::string&);                           \
    template NodeId ops::flatten(Graph<T>&, NodeId, const std::string&);                               \
    template NodeId ops::flip_horizontal(Graph<T>&, NodeId, const std::string&);                       \
    template NodeId ops::mse_loss(Graph<T>&, NodeId, NodeId);                                          \
    template NodeId ops::sum(Graph<T>&, NodeId);                                                       \
    template NodeId ops::weighted_sum(Graph<T>&, NodeId, const Tensor<T>&);

GAZEFORGE_INSTANTIATE_OPS(float)
GAZEFORGE_INSTANTIATE_OPS(double)

}  // namespace gazeforge::nn
