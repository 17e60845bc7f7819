#pragma once

#include "facet/tensor.hpp"

// Serial reference kernels: straight nested loops, no parallelism, no
// layout tricks. They are the ground truth the OpenMP kernels are tested
// against and the baseline the benchmark compares with. Keep them boring.
namespace facet::ref {

ImageTensor conv2d(const ImageTensor& input, const Tensor4& kernels, int stride, int pad);

std::pair<ImageTensor, Tensor4> conv2d_grads(const ImageTensor& input, const Tensor4& kernels,
                                             const ImageTensor& upstream, int stride, int pad);

// Full (non-separable) 2-D truncated Gaussian; the production kernel is
// separable, which makes this an independent path to the same answer.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w);

double tv_norm(const ImageTensor& img);

}  // namespace facet::ref
