#pragma once

#include <optional>

#include "facet/rng.hpp"
#include "facet/tensor.hpp"

namespace facet {

// Jittered-window geometry: a canvas larger than the network input, from
// which window placements are sampled. center_box, when present, restricts
// the window center to a canvas-centered square of that half-extent.
struct JitterConfig {
    int canvas_h = 0, canvas_w = 0;
    int window_h = 0, window_w = 0;
    std::optional<double> center_box;

    void validate() const;
};

// The regularizer family applied inside activation maximization. tv_lambda
// is the fidelity weight: larger keeps the smoothed image closer to the
// input. blur_every = 0 disables blur, tv_lambda = 0 disables TV.
struct RegularizerConfig {
    double tv_lambda = 0.0;
    int tv_inner_iters = 100;
    double blur_sigma_start = 0.0;
    double blur_sigma_end = 0.0;
    int blur_every = 0;
    double alpha = 6.0;
    double alpha_weight = 0.0;
    double alpha_center = 0.0;  // dataset mean intensity in network-input space
    std::optional<JitterConfig> jitter;

    void validate() const;
};

// Isotropic total variation: sum over pixels and channels of
// sqrt(dx^2 + dy^2), forward differences, replicate boundary.
double tv_norm(const ImageTensor& img);

// Approximately solves argmin_u TV(u) + (lambda/2)*||u - img||^2 per channel
// via split Bregman (penalty parameter fixed at mu = 2*lambda).
ImageTensor tv_denoise(const ImageTensor& img, double lambda, int iters);

// Gradient of weight * mean(|x - center|^alpha); subgradient 0 at x = center.
ImageTensor alpha_norm_grad(const ImageTensor& img, double alpha, double weight,
                            double center = 0.0);

// Uniformly random window placement (row, col) fully on the canvas; honors
// center_box when present. Draws row first, then col.
std::pair<int, int> jitter_offset(const JitterConfig& cfg, Rng& rng);

// Linear decay from blur_sigma_start to blur_sigma_end over total_iters.
double blur_sigma_at(const RegularizerConfig& cfg, int iter, int total_iters);

}  // namespace facet
