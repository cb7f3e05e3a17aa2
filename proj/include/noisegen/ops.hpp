#pragma once

// Fixed op set the denoiser network is built from. Each op has a forward
// kernel and a backward kernel that accumulates (+=) into the input grads.
// Reductions accumulate in double regardless of the storage type.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "noisegen/tensor.hpp"

namespace ng {

enum class Pad { same, valid };
enum class Act { relu, silu };
enum class Resample { down2_avg, up2_nearest };

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

inline int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// column layout: row = (ic, ky, kx), col = (oy, ox); one batch item at a time.
template <typename T>
void im2col(const Tensor<T>& x, int b, int k, int stride, int pad,
            int out_h, int out_w, std::vector<T>& col) {
    const int in_c = x.shape.c, in_h = x.shape.h, in_w = x.shape.w;
    col.assign(static_cast<std::size_t>(in_c) * k * k * out_h * out_w, T(0));
    T* dst = col.data();
    for (int ic = 0; ic < in_c; ++ic) {
        const T* src = x.ptr() + x.index(b, ic, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= in_h) {
                        dst += out_w;
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        *dst++ = (ix >= 0 && ix < in_w) ? src[iy * in_w + ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const std::vector<T>& col, int b, int k, int stride, int pad,
                int out_h, int out_w, Tensor<T>& dx) {
    const int in_c = dx.shape.c, in_h = dx.shape.h, in_w = dx.shape.w;
    const T* src = col.data();
    for (int ic = 0; ic < in_c; ++ic) {
        T* dst = dx.ptr() + dx.index(b, ic, 0, 0);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= in_h) {
                        src += out_w;
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < in_w) dst[iy * in_w + ix] += *src;
                        ++src;
                    }
                }
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: weight (outC, inC, k, k), bias (outC,1,1,1), stride 1 or 2.

template <typename T>
void conv2d_check(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                  int stride) {
    if (w.shape.h != w.shape.w || w.shape.h % 2 == 0) {
        throw ShapeError("conv2d: kernel must be square with odd extent, got " +
                         w.shape.str());
    }
    if (x.shape.c != w.shape.c) {
        throw ShapeError("conv2d: input channel axis (" + std::to_string(x.shape.c) +
                         ") does not match weight inC axis (" + std::to_string(w.shape.c) + ")");
    }
    if (bias.shape.n != w.shape.n || bias.size() != w.shape.n) {
        throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) +
                         " does not match outC axis (" + std::to_string(w.shape.n) + ")");
    }
    if (stride != 1 && stride != 2) {
        throw ShapeError("conv2d: stride must be 1 or 2");
    }
}

template <typename T>
Tensor<T> conv2d_fwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                     int stride, Pad pad) {
    conv2d_check(x, w, bias, stride);
    const int k = w.shape.h;
    const int p = (pad == Pad::same) ? k / 2 : 0;
    const int out_h = detail::conv_out_extent(x.shape.h, k, stride, p);
    const int out_w = detail::conv_out_extent(x.shape.w, k, stride, p);
    if (out_h <= 0 || out_w <= 0) {
        throw ShapeError("conv2d: kernel " + std::to_string(k) + " exceeds input " +
                         x.shape.str() + " with valid padding");
    }
    const int out_c = w.shape.n;
    const int kk = x.shape.c * k * k;
    Tensor<T> out(Shape{x.shape.n, out_c, out_h, out_w});

    std::vector<T> col;
    ConstMatMap<T> wm(w.ptr(), out_c, kk);
    for (int b = 0; b < x.shape.n; ++b) {
        detail::im2col(x, b, k, stride, p, out_h, out_w, col);
        ConstMatMap<T> cm(col.data(), kk, out_h * out_w);
        MatMap<T> om(out.ptr() + out.index(b, 0, 0, 0), out_c, out_h * out_w);
        om.noalias() = wm * cm;
        for (int oc = 0; oc < out_c; ++oc) {
            om.row(oc).array() += bias.data[oc];
        }
    }
    return out;
}

template <typename T>
void conv2d_bwd(const Tensor<T>& x, const Tensor<T>& w, int stride, Pad pad,
                const Tensor<T>& dout, Tensor<T>* dx, Tensor<T>* dw, Tensor<T>* db) {
    const int k = w.shape.h;
    const int p = (pad == Pad::same) ? k / 2 : 0;
    const int out_c = w.shape.n;
    const int out_h = dout.shape.h, out_w = dout.shape.w;
    const int kk = x.shape.c * k * k;

    std::vector<T> col, dcol(static_cast<std::size_t>(kk) * out_h * out_w);
    ConstMatMap<T> wm(w.ptr(), out_c, kk);
    for (int b = 0; b < x.shape.n; ++b) {
        ConstMatMap<T> dom(dout.ptr() + dout.index(b, 0, 0, 0), out_c, out_h * out_w);
        if (dw) {
            detail::im2col(x, b, k, stride, p, out_h, out_w, col);
            ConstMatMap<T> cm(col.data(), kk, out_h * out_w);
            MatMap<T> dwm(dw->ptr(), out_c, kk);
            dwm.noalias() += dom * cm.transpose();
        }
        if (dx) {
            MatMap<T> dcm(dcol.data(), kk, out_h * out_w);
            dcm.noalias() = wm.transpose() * dom;
            detail::col2im_add(dcol, b, k, stride, p, out_h, out_w, *dx);
        }
        if (db) {
            for (int oc = 0; oc < out_c; ++oc) {
                double s = 0.0;
                const T* row = dout.ptr() + dout.index(b, oc, 0, 0);
                for (int i = 0; i < out_h * out_w; ++i) s += row[i];
                db->data[oc] += static_cast<T>(s);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// linear: input flattened per item to (B, inF); weight (outF, inF, 1, 1),
// bias (outF,1,1,1); output (B, outF, 1, 1).

template <typename T>
void linear_check(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
    const std::int64_t in_f = static_cast<std::int64_t>(x.shape.c) * x.shape.h * x.shape.w;
    if (in_f != w.shape.c || w.shape.h != 1 || w.shape.w != 1) {
        throw ShapeError("linear: inner axis mismatch, input flattens to " +
                         std::to_string(in_f) + " but weight is " + w.shape.str());
    }
    if (bias.size() != w.shape.n) {
        throw ShapeError("linear: bias length " + std::to_string(bias.size()) +
                         " does not match out axis (" + std::to_string(w.shape.n) + ")");
    }
}

template <typename T>
Tensor<T> linear_fwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
    linear_check(x, w, bias);
    const int bsz = x.shape.n;
    const int in_f = x.shape.c * x.shape.h * x.shape.w;
    const int out_f = w.shape.n;
    Tensor<T> out(Shape{bsz, out_f, 1, 1});
    ConstMatMap<T> xm(x.ptr(), bsz, in_f);
    ConstMatMap<T> wm(w.ptr(), out_f, in_f);
    MatMap<T> om(out.ptr(), bsz, out_f);
    om.noalias() = xm * wm.transpose();
    for (int b = 0; b < bsz; ++b) {
        for (int o = 0; o < out_f; ++o) out.data[static_cast<std::size_t>(b) * out_f + o] += bias.data[o];
    }
    return out;
}

template <typename T>
void linear_bwd(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dout,
                Tensor<T>* dx, Tensor<T>* dw, Tensor<T>* db) {
    const int bsz = x.shape.n;
    const int in_f = x.shape.c * x.shape.h * x.shape.w;
    const int out_f = w.shape.n;
    ConstMatMap<T> xm(x.ptr(), bsz, in_f);
    ConstMatMap<T> wm(w.ptr(), out_f, in_f);
    ConstMatMap<T> dom(dout.ptr(), bsz, out_f);
    if (dx) {
        MatMap<T> dxm(dx->ptr(), bsz, in_f);
        dxm.noalias() += dom * wm;
    }
    if (dw) {
        MatMap<T> dwm(dw->ptr(), out_f, in_f);
        dwm.noalias() += dom.transpose() * xm;
    }
    if (db) {
        for (int o = 0; o < out_f; ++o) {
            double s = 0.0;
            for (int b = 0; b < bsz; ++b) s += dom(b, o);
            db->data[o] += static_cast<T>(s);
        }
    }
}

// ---------------------------------------------------------------------------
// activations (elementwise; relu grad at 0 is 0)

template <typename T>
Tensor<T> activation_fwd(const Tensor<T>& x, Act kind) {
    Tensor<T> out(x.shape);
    if (kind == Act::relu) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
        }
    } else {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double v = static_cast<double>(x.data[i]);
            out.data[i] = static_cast<T>(v / (1.0 + std::exp(-v)));
        }
    }
    return out;
}

template <typename T>
void activation_bwd(const Tensor<T>& x, Act kind, const Tensor<T>& dout, Tensor<T>& dx) {
    if (kind == Act::relu) {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            if (x.data[i] > T(0)) dx.data[i] += dout.data[i];
        }
    } else {
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double v = static_cast<double>(x.data[i]);
            const double s = 1.0 / (1.0 + std::exp(-v));
            dx.data[i] += static_cast<T>(static_cast<double>(dout.data[i]) * s * (1.0 + v * (1.0 - s)));
        }
    }
}

// ---------------------------------------------------------------------------
// resample

template <typename T>
Tensor<T> resample_fwd(const Tensor<T>& x, Resample mode) {
    if (mode == Resample::down2_avg) {
        if (x.shape.h % 2 != 0 || x.shape.w % 2 != 0) {
            throw ShapeError("resample down2-avg: spatial extents must be even, got " +
                             x.shape.str());
        }
        Tensor<T> out(Shape{x.shape.n, x.shape.c, x.shape.h / 2, x.shape.w / 2});
        for (int b = 0; b < x.shape.n; ++b)
            for (int c = 0; c < x.shape.c; ++c)
                for (int y = 0; y < out.shape.h; ++y)
                    for (int xx = 0; xx < out.shape.w; ++xx) {
                        const double s = static_cast<double>(x.at(b, c, 2 * y, 2 * xx)) +
                                         x.at(b, c, 2 * y, 2 * xx + 1) +
                                         x.at(b, c, 2 * y + 1, 2 * xx) +
                                         x.at(b, c, 2 * y + 1, 2 * xx + 1);
                        out.at(b, c, y, xx) = static_cast<T>(s * 0.25);
                    }
        return out;
    }
    Tensor<T> out(Shape{x.shape.n, x.shape.c, x.shape.h * 2, x.shape.w * 2});
    for (int b = 0; b < x.shape.n; ++b)
        for (int c = 0; c < x.shape.c; ++c)
            for (int y = 0; y < out.shape.h; ++y)
                for (int xx = 0; xx < out.shape.w; ++xx)
                    out.at(b, c, y, xx) = x.at(b, c, y / 2, xx / 2);
    return out;
}

template <typename T>
void resample_bwd(const Tensor<T>& x, Resample mode, const Tensor<T>& dout, Tensor<T>& dx) {
    if (mode == Resample::down2_avg) {
        for (int b = 0; b < dout.shape.n; ++b)
            for (int c = 0; c < dout.shape.c; ++c)
                for (int y = 0; y < dout.shape.h; ++y)
                    for (int xx = 0; xx < dout.shape.w; ++xx) {
                        const T g = static_cast<T>(dout.at(b, c, y, xx) * T(0.25));
                        dx.at(b, c, 2 * y, 2 * xx) += g;
                        dx.at(b, c, 2 * y, 2 * xx + 1) += g;
                        dx.at(b, c, 2 * y + 1, 2 * xx) += g;
                        dx.at(b, c, 2 * y + 1, 2 * xx + 1) += g;
                    }
        return;
    }
    for (int b = 0; b < dout.shape.n; ++b)
        for (int c = 0; c < dout.shape.c; ++c)
            for (int y = 0; y < dout.shape.h; ++y)
                for (int xx = 0; xx < dout.shape.w; ++xx)
                    dx.at(b, c, y / 2, xx / 2) += dout.at(b, c, y, xx);
}

// ---------------------------------------------------------------------------
// channel concat / slice

template <typename T>
Tensor<T> concat_channels_fwd(std::span<const Tensor<T>* const> xs) {
    if (xs.empty()) throw ShapeError("concat_channels: no inputs");
    const Shape s0 = xs[0]->shape;
    int total_c = 0;
    for (const Tensor<T>* t : xs) {
        if (t->shape.n != s0.n || t->shape.h != s0.h || t->shape.w != s0.w) {
            throw ShapeError("concat_channels: batch/spatial mismatch " + t->shape.str() +
                             " vs " + s0.str());
        }
        total_c += t->shape.c;
    }
    Tensor<T> out(Shape{s0.n, total_c, s0.h, s0.w});
    const std::int64_t plane = static_cast<std::int64_t>(s0.h) * s0.w;
    for (int b = 0; b < s0.n; ++b) {
        std::int64_t co = 0;
        for (const Tensor<T>* t : xs) {
            const std::int64_t cnt = static_cast<std::int64_t>(t->shape.c) * plane;
            std::copy_n(t->ptr() + static_cast<std::int64_t>(b) * t->shape.c * plane, cnt,
                        out.ptr() + (static_cast<std::int64_t>(b) * total_c + co) * plane);
            co += t->shape.c;
        }
    }
    return out;
}

template <typename T>
Tensor<T> slice_channels_fwd(const Tensor<T>& x, int start, int count) {
    if (start < 0 || count < 0 || start + count > x.shape.c) {
        throw ShapeError("slice_channels: range [" + std::to_string(start) + "," +
                         std::to_string(start + count) + ") outside channel axis of " +
                         x.shape.str());
    }
    Tensor<T> out(Shape{x.shape.n, count, x.shape.h, x.shape.w});
    const std::int64_t plane = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
    for (int b = 0; b < x.shape.n; ++b) {
        std::copy_n(x.ptr() + (static_cast<std::int64_t>(b) * x.shape.c + start) * plane,
                    static_cast<std::int64_t>(count) * plane,
                    out.ptr() + static_cast<std::int64_t>(b) * count * plane);
    }
    return out;
}

// ---------------------------------------------------------------------------
// channel-wise affine: gamma/beta shaped (B,C,1,1) or (1,C,1,1)

template <typename T>
void affine_check(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
    check_same_shape(gamma, beta, "affine_channels gamma/beta");
    if (gamma.shape.c != x.shape.c || gamma.shape.h != 1 || gamma.shape.w != 1 ||
        (gamma.shape.n != 1 && gamma.shape.n != x.shape.n)) {
        throw ShapeError("affine_channels: gamma " + gamma.shape.str() +
                         " does not broadcast over " + x.shape.str());
    }
}

template <typename T>
Tensor<T> affine_fwd(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
    affine_check(x, gamma, beta);
    Tensor<T> out(x.shape);
    const std::int64_t plane = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
    for (int b = 0; b < x.shape.n; ++b) {
        const int gb = gamma.shape.n == 1 ? 0 : b;
        for (int c = 0; c < x.shape.c; ++c) {
            const T g = gamma.at(gb, c, 0, 0), bb = beta.at(gb, c, 0, 0);
            const T* src = x.ptr() + x.index(b, c, 0, 0);
            T* dst = out.ptr() + out.index(b, c, 0, 0);
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = g * src[i] + bb;
        }
    }
    return out;
}

template <typename T>
void affine_bwd(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& dout,
                Tensor<T>* dx, Tensor<T>* dgamma, Tensor<T>* dbeta) {
    const std::int64_t plane = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
    for (int b = 0; b < x.shape.n; ++b) {
        const int gb = gamma.shape.n == 1 ? 0 : b;
        for (int c = 0; c < x.shape.c; ++c) {
            const T g = gamma.at(gb, c, 0, 0);
            const T* src = x.ptr() + x.index(b, c, 0, 0);
            const T* go = dout.ptr() + dout.index(b, c, 0, 0);
            if (dx) {
                T* dst = dx->ptr() + dx->index(b, c, 0, 0);
                for (std::int64_t i = 0; i < plane; ++i) dst[i] += g * go[i];
            }
            if (dgamma || dbeta) {
                double sg = 0.0, sb = 0.0;
                for (std::int64_t i = 0; i < plane; ++i) {
                    sg += static_cast<double>(go[i]) * src[i];
                    sb += go[i];
                }
                if (dgamma) dgamma->at(gb, c, 0, 0) += static_cast<T>(sg);
                if (dbeta) dbeta->at(gb, c, 0, 0) += static_cast<T>(sb);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// losses and scalar glue

template <typename T>
Tensor<T> mse_fwd(const Tensor<T>& pred, const Tensor<T>& target) {
    check_same_shape(pred, target, "mse_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - target.data[i];
        acc += d * d;
    }
    Tensor<T> out(Shape{1, 1, 1, 1});
    out.data[0] = static_cast<T>(acc / static_cast<double>(pred.data.size()));
    return out;
}

template <typename T>
void mse_bwd(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& dout,
             Tensor<T>* dpred, Tensor<T>* dtarget) {
    const double scale = 2.0 * static_cast<double>(dout.data[0]) /
                         static_cast<double>(pred.data.size());
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const T g = static_cast<T>(scale * (static_cast<double>(pred.data[i]) - target.data[i]));
        if (dpred) dpred->data[i] += g;
        if (dtarget) dtarget->data[i] -= g;
    }
}

template <typename T>
Tensor<T> add_fwd(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    Tensor<T> out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

template <typename T>
Tensor<T> scale_fwd(const Tensor<T>& x, T k, T shift = T(0)) {
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = k * x.data[i] + shift;
    return out;
}

}  // namespace ng
