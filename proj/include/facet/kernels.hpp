#pragma once

#include "facet/tensor.hpp"

// Image-level primitives, OpenMP-parallel over independent output elements.
// Every output element is produced by exactly one thread with a fixed inner
// accumulation order (gather form, 64-bit accumulators), so results are
// bit-identical for a fixed input regardless of thread count. The serial
// counterparts live in facet::ref.
namespace facet {

// Output spatial extents follow floor((in + 2*pad - k)/stride) + 1.
ImageTensor conv2d(const ImageTensor& input, const Tensor4& kernels, int stride, int pad);

// Exact analytic gradients of conv2d w.r.t. input and kernels.
std::pair<ImageTensor, Tensor4> conv2d_grads(const ImageTensor& input, const Tensor4& kernels,
                                             const ImageTensor& upstream, int stride, int pad);

// Per-channel separable Gaussian, truncated at 3*sigma and renormalized,
// mirror padding at borders. sigma = 0 returns the input unchanged.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

// Corner-aligned bilinear interpolation.
ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w);

// (1-t)*a + t*b
ImageTensor lerp_images(const ImageTensor& a, const ImageTensor& b, double t);

}  // namespace facet
