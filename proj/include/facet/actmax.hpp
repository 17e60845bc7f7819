#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "facet/network.hpp"
#include "facet/priors.hpp"

namespace facet {

struct AMConfig {
    int iterations = 200;
    double learning_rate = 1.0;
    RegularizerConfig reg;
    std::optional<ImageTensor> seed_image;  // network-input sized; noise when absent
    uint64_t rng_seed = 0;
    float clamp_lo = 0.0f, clamp_hi = 1.0f;
    std::optional<int> grad_crop;  // center-crop extent applied to the gradient image
    std::string label;             // montage/report tag

    void validate() const;
};

// One center-biased phase. Geometry is expressed relative to the network
// input so the same schedule scales to any input size: the canvas extent is
// round(input * canvas_scale), the gradient crop round(input *
// grad_crop_ratio), and jitter_center_box a fraction of the canvas extent
// (absent = jitter anywhere).
struct PhaseSpec {
    int iterations = 0;
    double learning_rate = 1.0;
    double tv_lambda = 1.0;
    double canvas_scale = 1.0;
    std::optional<double> jitter_center_box;
    std::optional<double> grad_crop_ratio;
};

struct PhaseSchedule {
    std::array<PhaseSpec, 5> phases;
    int tv_inner_iters = 100;
    float clamp_lo = 0.0f, clamp_hi = 1.0f;
    uint64_t rng_seed = 0;

    void validate() const;
};

// The stock schedule: canvas grows through scales {1, 272/227, 327/227} over
// three 150-iteration phases with lambda {0.001, 0.08, 2} and learning rates
// {11, 6, 1}; phase 4 (30 iterations) pins the window to the canvas center
// and crops the gradient to 127/227 of the input; phase 5 (10 iterations)
// jitters anywhere. Phases 4-5 reuse the phase-3 lambda and learning rate.
PhaseSchedule default_phase_schedule();

struct AMResult {
    ImageTensor final_image;
    std::vector<float> activation_trace;  // one entry per iteration, centered window
    std::vector<int> phase_boundaries;    // start indices of phases after the first
};

// One optimization step: gradient ascent on the jittered window (written
// back into the canvas at the sampled offset), then TV denoising, then
// optional blur, then clamping.
ImageTensor am_step(const Network& net, const UnitSelector& sel, const ImageTensor& img,
                    const AMConfig& cfg);

AMResult maximize(const Network& net, const UnitSelector& sel, const AMConfig& cfg);

AMResult center_biased_maximize(const Network& net, const UnitSelector& sel,
                                const std::optional<ImageTensor>& seed,
                                const PhaseSchedule& sched);

// Runs every variant from the first variant's seed image and rng seed.
std::vector<AMResult> compare_regularizers(const Network& net, const UnitSelector& sel,
                                           const std::vector<AMConfig>& variants, int jobs = 1);

}  // namespace facet
