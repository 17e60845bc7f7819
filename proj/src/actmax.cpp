#include "facet/actmax.hpp"

#include <algorithm>
#include <cmath>

#include "facet/kernels.hpp"
#include "facet/rng.hpp"

namespace facet {

void AMConfig::validate() const {
    if (iterations < 0) throw ConfigError("am: iterations must be >= 0");
    if (learning_rate < 0) throw ConfigError("am: learning_rate must be >= 0");
    if (!(clamp_lo < clamp_hi)) throw ConfigError("am: clamp_lo must be < clamp_hi");
    if (grad_crop && *grad_crop < 1) throw ConfigError("am: grad_crop must be >= 1");
    reg.validate();
}

void PhaseSchedule::validate() const {
    if (!(clamp_lo < clamp_hi)) throw ConfigError("schedule: clamp_lo must be < clamp_hi");
    if (tv_inner_iters < 1) throw ConfigError("schedule: tv_inner_iters must be >= 1");
    for (size_t i = 0; i < phases.size(); ++i) {
        const PhaseSpec& p = phases[i];
        if (p.iterations < 0) throw ConfigError("schedule: phase iterations must be >= 0");
        if (p.canvas_scale < 1.0) throw ConfigError("schedule: canvas_scale must be >= 1");
        if (p.learning_rate < 0 || p.tv_lambda < 0)
            throw ConfigError("schedule: phase rates must be >= 0");
        if (p.grad_crop_ratio && (*p.grad_crop_ratio <= 0 || *p.grad_crop_ratio > 1))
            throw ConfigError("schedule: grad_crop_ratio must be in (0, 1]");
        if (p.jitter_center_box && *p.jitter_center_box < 0)
            throw ConfigError("schedule: jitter_center_box must be >= 0");
    }
    for (int i = 1; i < 3; ++i)
        if (phases[i].canvas_scale < phases[i - 1].canvas_scale)
            throw ConfigError("schedule: canvas_scale must be non-decreasing over phases 1-3");
}

PhaseSchedule default_phase_schedule() {
    constexpr double kBase = 227.0;
    PhaseSchedule s;
    const double scales[5] = {227.0 / kBase, 272.0 / kBase, 327.0 / kBase, 327.0 / kBase,
                              327.0 / kBase};
    const double lambdas[5] = {0.001, 0.08, 2.0, 2.0, 2.0};
    const double rates[5] = {11.0, 6.0, 1.0, 1.0, 1.0};
    const int iters[5] = {150, 150, 150, 30, 10};
    for (int i = 0; i < 5; ++i) {
        s.phases[i].iterations = iters[i];
        s.phases[i].learning_rate = rates[i];
        s.phases[i].tv_lambda = lambdas[i];
        s.phases[i].canvas_scale = scales[i];
    }
    s.phases[0].jitter_center_box = 0.1;
    s.phases[1].jitter_center_box = 0.1;
    s.phases[2].jitter_center_box = 0.1;
    s.phases[3].jitter_center_box = 0.0;  // window pinned to the canvas center
    s.phases[4].jitter_center_box = std::nullopt;  // jitter anywhere
    s.phases[3].grad_crop_ratio = 127.0 / kBase;
    s.phases[4].grad_crop_ratio = 127.0 / kBase;
    s.tv_inner_iters = 100;
    return s;
}

namespace {

void clamp_image(ImageTensor& img, float lo, float hi) {
    for (auto& v : img.data) v = std::clamp(v, lo, hi);
}

ImageTensor crop_window(const ImageTensor& canvas, int r, int c, int h, int w) {
    ImageTensor out(h, w, canvas.c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < canvas.c; ++ch) out.at(y, x, ch) = canvas.at(r + y, c + x, ch);
    return out;
}

// One step on an existing canvas with a live rng. The public am_step wraps
// this with a config-seeded rng at iteration 0.
ImageTensor am_step_impl(const Network& net, const UnitSelector& sel, const ImageTensor& canvas,
                         const AMConfig& cfg, Rng& rng, int iter, int total_iters) {
    const int in_h = net.input_shape().dims[0];
    const int in_w = net.input_shape().dims[1];

    int off_r = 0, off_c = 0;
    if (cfg.reg.jitter) {
        const JitterConfig& j = *cfg.reg.jitter;
        if (j.window_h != in_h || j.window_w != in_w)
            throw ShapeError("am: jitter window " + Shape{{j.window_h, j.window_w}}.str() +
                             " != network input " + net.input_shape().str());
        if (canvas.h != j.canvas_h || canvas.w != j.canvas_w)
            throw ShapeError("am: canvas " + canvas.shape().str() + " != jitter canvas " +
                             Shape{{j.canvas_h, j.canvas_w}}.str());
        std::tie(off_r, off_c) = jitter_offset(j, rng);
    } else if (canvas.h != in_h || canvas.w != in_w) {
        throw ShapeError("am: image " + canvas.shape().str() + " != network input " +
                         net.input_shape().str());
    }

    ImageTensor out = canvas;
    if (cfg.learning_rate > 0) {
        const ImageTensor window =
            (canvas.h == in_h && canvas.w == in_w && off_r == 0 && off_c == 0)
                ? canvas
                : crop_window(canvas, off_r, off_c, in_h, in_w);
        ImageTensor grad = input_gradient(net, window, sel);
        if (cfg.reg.alpha_weight > 0) {
            const ImageTensor pen =
                alpha_norm_grad(window, cfg.reg.alpha, cfg.reg.alpha_weight, cfg.reg.alpha_center);
            for (size_t i = 0; i < grad.size(); ++i) grad.data[i] -= pen.data[i];
        }
        // write-back adds into the canvas region under the window; with a
        // gradient crop only the window's central crop x crop box is touched
        int y0 = 0, y1 = in_h, x0 = 0, x1 = in_w;
        if (cfg.grad_crop) {
            const int crop_h = std::min(*cfg.grad_crop, in_h);
            const int crop_w = std::min(*cfg.grad_crop, in_w);
            y0 = (in_h - crop_h) / 2;
            y1 = y0 + crop_h;
            x0 = (in_w - crop_w) / 2;
            x1 = x0 + crop_w;
        }
        const float lr = static_cast<float>(cfg.learning_rate);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                for (int ch = 0; ch < out.c; ++ch)
                    out.at(off_r + y, off_c + x, ch) += lr * grad.at(y, x, ch);
    }

    if (cfg.reg.tv_lambda > 0) out = tv_denoise(out, cfg.reg.tv_lambda, cfg.reg.tv_inner_iters);

    if (cfg.reg.blur_every > 0 && (iter + 1) % cfg.reg.blur_every == 0) {
        const double sigma = blur_sigma_at(cfg.reg, iter, std::max(total_iters, 1));
        if (sigma > 0) out = gaussian_blur(out, sigma);
    }

    clamp_image(out, cfg.clamp_lo, cfg.clamp_hi);
    return out;
}

ImageTensor initial_canvas(const Network& net, const AMConfig& cfg, int canvas_h, int canvas_w,
                           Rng& rng) {
    const int in_h = net.input_shape().dims[0];
    const int in_w = net.input_shape().dims[1];
    const int in_c = net.input_shape().dims[2];
    if (cfg.seed_image) {
        if (cfg.seed_image->h != in_h || cfg.seed_image->w != in_w || cfg.seed_image->c != in_c)
            throw ShapeError("am: seed image " + cfg.seed_image->shape().str() +
                             " != network input " + net.input_shape().str());
        if (canvas_h == in_h && canvas_w == in_w) return *cfg.seed_image;
        return resize_bilinear(*cfg.seed_image, canvas_h, canvas_w);
    }
    ImageTensor canvas(canvas_h, canvas_w, in_c);
    for (auto& v : canvas.data)
        v = static_cast<float>(rng.uniform(cfg.clamp_lo, cfg.clamp_hi));
    return canvas;
}

float centered_activation(const Network& net, const ImageTensor& canvas, const UnitSelector& sel) {
    const int in_h = net.input_shape().dims[0];
    const int in_w = net.input_shape().dims[1];
    if (canvas.h == in_h && canvas.w == in_w) return unit_activation(net, canvas, sel);
    return unit_activation(net, center_crop(canvas, in_h, in_w), sel);
}

}  // namespace

ImageTensor am_step(const Network& net, const UnitSelector& sel, const ImageTensor& img,
                    const AMConfig& cfg) {
    cfg.validate();
    net.validate_selector(sel);
    Rng rng(cfg.rng_seed);
    return am_step_impl(net, sel, img, cfg, rng, 0, std::max(cfg.iterations, 1));
}

AMResult maximize(const Network& net, const UnitSelector& sel, const AMConfig& cfg) {
    cfg.validate();
    net.validate_selector(sel);
    Rng rng(cfg.rng_seed);

    int canvas_h = net.input_shape().dims[0];
    int canvas_w = net.input_shape().dims[1];
    if (cfg.reg.jitter) {
        canvas_h = cfg.reg.jitter->canvas_h;
        canvas_w = cfg.reg.jitter->canvas_w;
    }

    AMResult result;
    result.final_image = initial_canvas(net, cfg, canvas_h, canvas_w, rng);
    result.activation_trace.reserve(cfg.iterations);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        result.final_image =
            am_step_impl(net, sel, result.final_image, cfg, rng, iter, cfg.iterations);
        result.activation_trace.push_back(centered_activation(net, result.final_image, sel));
    }
    return result;
}

AMResult center_biased_maximize(const Network& net, const UnitSelector& sel,
                                const std::optional<ImageTensor>& seed,
                                const PhaseSchedule& sched) {
    sched.validate();
    net.validate_selector(sel);
    const int in_h = net.input_shape().dims[0];
    const int in_w = net.input_shape().dims[1];
    Rng rng(sched.rng_seed);

    AMConfig base;
    base.clamp_lo = sched.clamp_lo;
    base.clamp_hi = sched.clamp_hi;
    base.seed_image = seed;
    ImageTensor canvas = initial_canvas(net, base, in_h, in_w, rng);

    AMResult result;
    int total = 0;
    for (const auto& p : sched.phases) total += p.iterations;
    result.activation_trace.reserve(total);

    int done = 0;
    for (size_t pi = 0; pi < sched.phases.size(); ++pi) {
        const PhaseSpec& phase = sched.phases[pi];
        if (pi > 0) result.phase_boundaries.push_back(done);

        const int ph_h = static_cast<int>(std::lround(in_h * phase.canvas_scale));
        const int ph_w = static_cast<int>(std::lround(in_w * phase.canvas_scale));
        if (canvas.h != ph_h || canvas.w != ph_w) canvas = resize_bilinear(canvas, ph_h, ph_w);

        AMConfig cfg;
        cfg.iterations = phase.iterations;
        cfg.learning_rate = phase.learning_rate;
        cfg.clamp_lo = sched.clamp_lo;
        cfg.clamp_hi = sched.clamp_hi;
        cfg.reg.tv_lambda = phase.tv_lambda;
        cfg.reg.tv_inner_iters = sched.tv_inner_iters;
        JitterConfig j;
        j.canvas_h = ph_h;
        j.canvas_w = ph_w;
        j.window_h = in_h;
        j.window_w = in_w;
        if (phase.jitter_center_box)
            j.center_box = *phase.jitter_center_box * std::max(ph_h, ph_w);
        cfg.reg.jitter = j;
        if (phase.grad_crop_ratio)
            cfg.grad_crop = std::max(1, static_cast<int>(std::lround(
                                            std::min(in_h, in_w) * *phase.grad_crop_ratio)));

        for (int iter = 0; iter < phase.iterations; ++iter, ++done) {
            canvas = am_step_impl(net, sel, canvas, cfg, rng, iter, phase.iterations);
            result.activation_trace.push_back(centered_activation(net, canvas, sel));
        }
    }
    result.final_image = std::move(canvas);
    return result;
}

std::vector<AMResult> compare_regularizers(const Network& net, const UnitSelector& sel,
                                           const std::vector<AMConfig>& variants, int jobs) {
    for (const auto& v : variants) v.validate();
    std::vector<AMResult> results(variants.size());
    std::exception_ptr err = nullptr;
    const int n = static_cast<int>(variants.size());
#pragma omp parallel for num_threads(std::max(jobs, 1)) schedule(dynamic) if (jobs > 1)
    for (int i = 0; i < n; ++i) {
        try {
            AMConfig cfg = variants[i];
            cfg.rng_seed = variants.front().rng_seed;
            cfg.seed_image = variants.front().seed_image;
            results[i] = maximize(net, sel, cfg);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return results;
}

}  // namespace facet
