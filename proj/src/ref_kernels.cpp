#include "facet/ref_kernels.hpp"

#include <cmath>

namespace facet::ref {

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
    for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox)
            for (int oc = 0; oc < kernels.out_c; ++oc) {
                double acc = 0.0;
                for (int ky = 0; ky < kernels.kh; ++ky)
                    for (int kx = 0; kx < kernels.kw; ++kx)
                        for (int ic = 0; ic < input.c; ++ic) {
                            const int iy = oy * stride - pad + ky;
                            const int ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= input.h || ix < 0 || ix >= input.w) continue;
                            acc += static_cast<double>(input.at(iy, ix, ic)) *
                                   kernels.at(ky, kx, ic, oc);
                        }
                out.at(oy, ox, oc) = static_cast<float>(acc);
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

    ImageTensor gin(input.h, input.w, input.c);
    Tensor4 gk(kernels.kh, kernels.kw, kernels.in_c, kernels.out_c);
    for (int oy = 0; oy < out_h; ++oy)
        for (int ox = 0; ox < out_w; ++ox)
            for (int oc = 0; oc < kernels.out_c; ++oc) {
                const float g = upstream.at(oy, ox, oc);
                for (int ky = 0; ky < kernels.kh; ++ky)
                    for (int kx = 0; kx < kernels.kw; ++kx) {
                        const int iy = oy * stride - pad + ky;
                        const int ix = ox * stride - pad + kx;
                        if (iy < 0 || iy >= input.h || ix < 0 || ix >= input.w) continue;
                        for (int ic = 0; ic < input.c; ++ic) {
                            gin.at(iy, ix, ic) += g * kernels.at(ky, kx, ic, oc);
                            gk.at(ky, kx, ic, oc) += g * input.at(iy, ix, ic);
                        }
                    }
            }
    return {std::move(gin), std::move(gk)};
}

namespace {
int mirror(int i, int n) {
    // symmetric padding with edge inclusion: -1 -> 0, n -> n-1
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}
}  // namespace

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
    if (sigma < 0) throw ConfigError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const int k = 2 * radius + 1;
    std::vector<double> g2(static_cast<size_t>(k) * k);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            g2[(dy + radius) * k + (dx + radius)] = v;
            sum += v;
        }
    for (auto& v : g2) v /= sum;

    ImageTensor out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx)
                        acc += g2[(dy + radius) * k + (dx + radius)] *
                               img.at(mirror(y + dy, img.h), mirror(x + dx, img.w), ch);
                out.at(y, x, ch) = static_cast<float>(acc);
            }
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) throw ShapeError("resize_bilinear: new extents must be >= 1");
    ImageTensor out(new_h, new_w, img.c);
    const double sy = new_h > 1 ? static_cast<double>(img.h - 1) / (new_h - 1) : 0.0;
    const double sx = new_w > 1 ? static_cast<double>(img.w - 1) / (new_w - 1) : 0.0;
    for (int y = 0; y < new_h; ++y)
        for (int x = 0; x < new_w; ++x) {
            const double fy = y * sy, fx = x * sx;
            const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, img.h - 1), x1 = std::min(x0 + 1, img.w - 1);
            const double wy = fy - y0, wx = fx - x0;
            for (int ch = 0; ch < img.c; ++ch) {
                const double v = (1 - wy) * ((1 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch)) +
                                 wy * ((1 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch));
                out.at(y, x, ch) = static_cast<float>(v);
            }
        }
    return out;
}

double tv_norm(const ImageTensor& img) {
    double total = 0.0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                const int yn = std::min(y + 1, img.h - 1);
                const int xn = std::min(x + 1, img.w - 1);
                const double dy = img.at(yn, x, ch) - img.at(y, x, ch);
                const double dx = img.at(y, xn, ch) - img.at(y, x, ch);
                total += std::sqrt(dx * dx + dy * dy);
            }
    return total;
}

}  // namespace facet::ref
