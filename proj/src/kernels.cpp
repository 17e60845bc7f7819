#include "facet/kernels.hpp"

#include <cmath>

namespace facet {

namespace {

int mirror(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

std::vector<double> gaussian_taps(double sigma, int radius) {
    std::vector<double> g(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        g[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += g[i + radius];
    }
    for (auto& v : g) v /= sum;
    return g;
}

}  // namespace

ImageTensor conv2d(const ImageTensor& input, const Tensor4& kernels, int stride, int pad) {
    if (kernels.in_c != input.c)
        throw ShapeError("conv2d: kernel in-channels " + std::to_string(kernels.in_c) +
                         " != input channels " + std::to_string(input.c));
    if (stride < 1 || pad < 0)
        throw ConfigError("conv2d: stride must be >= 1 and pad >= 0");
    const int out_h = (input.h + 2 * pad - kernels.kh) / stride + 1;
    const int out_w = (input.w + 2 * pad - kernels.kw) / stride + 1;
    if (out_h < 1 || out_w < 1)
        throw ShapeError("conv2d: kernel " + kernels.shape().str() + " does not fit input " +
                         input.shape().str() + " with pad " + std::to_string(pad));

    ImageTensor out(out_h, out_w, kernels.out_c);
    const int out_c = kernels.out_c;
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out_h; ++oy) {
        std::vector<double> accs(out_c);
        for (int ox = 0; ox < out_w; ++ox) {
            const int iy0 = oy * stride - pad;
            const int ix0 = ox * stride - pad;
            const int ky_lo = std::max(0, -iy0), ky_hi = std::min(kernels.kh, input.h - iy0);
            const int kx_lo = std::max(0, -ix0), kx_hi = std::min(kernels.kw, input.w - ix0);
            std::fill(accs.begin(), accs.end(), 0.0);
            // per-oc accumulation still walks (ky, kx, ic) in ascending
            // order, so results stay bit-identical to the naive nest
            for (int ky = ky_lo; ky < ky_hi; ++ky)
                for (int kx = kx_lo; kx < kx_hi; ++kx) {
                    const float* in_px = &input.data[(static_cast<size_t>(iy0 + ky) * input.w +
                                                      (ix0 + kx)) * input.c];
                    const float* k_base =
                        &kernels.data[(static_cast<size_t>(ky) * kernels.kw + kx) *
                                      static_cast<size_t>(input.c) * out_c];
                    for (int ic = 0; ic < input.c; ++ic) {
                        const double iv = in_px[ic];
                        const float* k_row = k_base + static_cast<size_t>(ic) * out_c;
                        for (int oc = 0; oc < out_c; ++oc) accs[oc] += iv * k_row[oc];
                    }
                }
            float* out_px = &out.data[(static_cast<size_t>(oy) * out_w + ox) * out_c];
            for (int oc = 0; oc < out_c; ++oc) out_px[oc] = static_cast<float>(accs[oc]);
        }
    }
    return out;
}

std::pair<ImageTensor, Tensor4> conv2d_grads(const ImageTensor& input, const Tensor4& kernels,
                                             const ImageTensor& upstream, int stride, int pad) {
    const int out_h = (input.h + 2 * pad - kernels.kh) / stride + 1;
    const int out_w = (input.w + 2 * pad - kernels.kw) / stride + 1;
    if (upstream.h != out_h || upstream.w != out_w || upstream.c != kernels.out_c)
        throw ShapeError("conv2d_grads: upstream " + upstream.shape().str() +
                         " != conv output " + Shape{{out_h, out_w, kernels.out_c}}.str());

    // Gather form: each gradient element sums its own contributions, so the
    // parallel loops never write to shared locations. Accumulators per
    // element walk a fixed ascending order, keeping results bit-identical
    // regardless of thread count.
    const int in_c = input.c, out_c = kernels.out_c;
    ImageTensor gin(input.h, input.w, input.c);
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < input.h; ++iy) {
        std::vector<double> accs(in_c);
        for (int ix = 0; ix < input.w; ++ix) {
            std::fill(accs.begin(), accs.end(), 0.0);
            for (int ky = 0; ky < kernels.kh; ++ky) {
                const int ty = iy + pad - ky;
                if (ty < 0 || ty % stride) continue;
                const int oy = ty / stride;
                if (oy >= out_h) continue;
                for (int kx = 0; kx < kernels.kw; ++kx) {
                    const int tx = ix + pad - kx;
                    if (tx < 0 || tx % stride) continue;
                    const int ox = tx / stride;
                    if (ox >= out_w) continue;
                    const float* up_px =
                        &upstream.data[(static_cast<size_t>(oy) * out_w + ox) * out_c];
                    const float* k_base =
                        &kernels.data[(static_cast<size_t>(ky) * kernels.kw + kx) *
                                      static_cast<size_t>(in_c) * out_c];
                    for (int ic = 0; ic < in_c; ++ic) {
                        const float* k_row = k_base + static_cast<size_t>(ic) * out_c;
                        double acc = 0.0;
                        for (int oc = 0; oc < out_c; ++oc)
                            acc += static_cast<double>(up_px[oc]) * k_row[oc];
                        accs[ic] += acc;
                    }
                }
            }
            float* g_px = &gin.data[(static_cast<size_t>(iy) * input.w + ix) * in_c];
            for (int ic = 0; ic < in_c; ++ic) g_px[ic] = static_cast<float>(accs[ic]);
        }
    }

    Tensor4 gk(kernels.kh, kernels.kw, kernels.in_c, kernels.out_c);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ky = 0; ky < kernels.kh; ++ky) {
        for (int kx = 0; kx < kernels.kw; ++kx) {
            // (in_c x out_c) accumulator tile per kernel offset
            std::vector<double> tile(static_cast<size_t>(in_c) * out_c, 0.0);
            for (int oy = 0; oy < out_h; ++oy) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= input.h) continue;
                for (int ox = 0; ox < out_w; ++ox) {
                    const int ix = ox * stride - pad + kx;
                    if (ix < 0 || ix >= input.w) continue;
                    const float* up_px =
                        &upstream.data[(static_cast<size_t>(oy) * out_w + ox) * out_c];
                    const float* in_px =
                        &input.data[(static_cast<size_t>(iy) * input.w + ix) * in_c];
                    for (int ic = 0; ic < in_c; ++ic) {
                        const double iv = in_px[ic];
                        double* t_row = &tile[static_cast<size_t>(ic) * out_c];
                        for (int oc = 0; oc < out_c; ++oc)
                            t_row[oc] += static_cast<double>(up_px[oc]) * iv;
                    }
                }
            }
            float* g_base = &gk.data[(static_cast<size_t>(ky) * kernels.kw + kx) *
                                     static_cast<size_t>(in_c) * out_c];
            for (size_t i = 0; i < tile.size(); ++i) g_base[i] = static_cast<float>(tile[i]);
        }
    }
    return {std::move(gin), std::move(gk)};
}

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
    if (sigma < 0) throw ConfigError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const auto g = gaussian_taps(sigma, radius);

    // horizontal pass into a double buffer, then vertical pass
    std::vector<double> tmp(img.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d)
                    acc += g[d + radius] * img.at(y, mirror(x + d, img.w), ch);
                tmp[(static_cast<size_t>(y) * img.w + x) * img.c + ch] = acc;
            }

    ImageTensor out(img.h, img.w, img.c);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d)
                    acc += g[d + radius] *
                           tmp[(static_cast<size_t>(mirror(y + d, img.h)) * img.w + x) * img.c + ch];
                out.at(y, x, ch) = static_cast<float>(acc);
            }
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw ShapeError("resize_bilinear: new extents must be >= 1");
    ImageTensor out(new_h, new_w, img.c);
    const double sy = new_h > 1 ? static_cast<double>(img.h - 1) / (new_h - 1) : 0.0;
    const double sx = new_w > 1 ? static_cast<double>(img.w - 1) / (new_w - 1) : 0.0;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < new_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.w - 1);
            const double wx = fx - x0;
            for (int ch = 0; ch < img.c; ++ch) {
                const double v = (1 - wy) * ((1 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch)) +
                                 wy * ((1 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch));
                out.at(y, x, ch) = static_cast<float>(v);
            }
        }
    }
    return out;
}

ImageTensor lerp_images(const ImageTensor& a, const ImageTensor& b, double t) {
    if (!a.same_shape(b))
        throw ShapeError("lerp_images: shapes differ, " + a.shape().str() + " vs " + b.shape().str());
    ImageTensor out(a.h, a.w, a.c);
    for (size_t i = 0; i < a.size(); ++i)
        out.data[i] = static_cast<float>((1.0 - t) * a.data[i] + t * b.data[i]);
    return out;
}

}  // namespace facet
