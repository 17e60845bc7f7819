#include "facet/run_setup.hpp"

#include <cmath>
#include <filesystem>

namespace facet {

UnitSelector parse_unit(const std::string& text) {
    UnitSelector sel;
    const size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("unit '" + text + "' must look like layer:index or layer:index@r,c");
    sel.layer = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    const size_t at = rest.find('@');
    std::string loc;
    if (at != std::string::npos) {
        loc = rest.substr(at + 1);
        rest = rest.substr(0, at);
    }
    try {
        sel.unit = std::stoi(rest);
    } catch (const std::exception&) {
        throw ConfigError("unit index '" + rest + "' is not an integer");
    }
    if (!loc.empty()) {
        const size_t comma = loc.find(',');
        if (comma == std::string::npos)
            throw ConfigError("unit location '" + loc + "' must look like r,c");
        try {
            sel.location = {std::stoi(loc.substr(0, comma)), std::stoi(loc.substr(comma + 1))};
        } catch (const std::exception&) {
            throw ConfigError("unit location '" + loc + "' must be integers r,c");
        }
    }
    return sel;
}

const std::vector<std::string> kDatasetKeys = {"path", "preset", "images_per_class", "image_size",
                                               "seed"};
const std::vector<std::string> kAmKeys = {
    "iterations", "learning_rate", "seed", "clamp_lo", "clamp_hi",
    "tv_lambda", "tv_inner_iters", "blur_sigma_start", "blur_sigma_end", "blur_every",
    "alpha", "alpha_weight", "jitter.canvas", "jitter.center_box"};
const std::vector<std::string> kScheduleKeys = {
    "base_input", "canvas", "lambda", "learning_rate", "iterations",
    "grad_crop", "tv_inner_iters", "center_box_frac", "seed", "clamp_lo", "clamp_hi"};

ShapesSpec shapes_spec_from_config(const RunConfig& cfg) {
    const std::string preset = cfg.get_str("dataset", "preset", "default");
    ShapesSpec spec;
    if (preset == "default") spec = default_shapes_spec();
    else if (preset == "two_facet") spec = two_facet_spec();
    else throw ConfigError("unknown dataset preset '" + preset + "'");
    spec.images_per_class =
        static_cast<int>(cfg.get_int("dataset", "images_per_class", spec.images_per_class));
    spec.image_size = static_cast<int>(cfg.get_int("dataset", "image_size", spec.image_size));
    spec.rng_seed = cfg.get_u64("dataset", "seed", spec.rng_seed);
    return spec;
}

LabeledDataset dataset_from_config(const RunConfig& cfg) {
    if (cfg.has("dataset", "path")) {
        const std::filesystem::path path = cfg.require_str("dataset", "path");
        if (!std::filesystem::exists(path))
            throw ConfigError("dataset path " + path.string() + " does not exist");
        return load_directory(path, true);
    }
    return generate_shapes(shapes_spec_from_config(cfg));
}

void default_clamp_from_dataset(const LabeledDataset* ds, float& lo, float& hi) {
    if (!ds) return;
    float max_mean = ds->mean_intensity[0], min_mean = ds->mean_intensity[0];
    for (float m : ds->mean_intensity) {
        max_mean = std::max(max_mean, m);
        min_mean = std::min(min_mean, m);
    }
    lo = -max_mean;
    hi = 1.0f - min_mean;
}

AMConfig am_from_config(const RunConfig& cfg, const Network& net, const LabeledDataset* ds) {
    AMConfig am;
    am.iterations = static_cast<int>(cfg.get_int("am", "iterations", 200));
    am.learning_rate = cfg.get_real("am", "learning_rate", 0.15);
    am.rng_seed = cfg.get_u64("am", "seed", 0);
    float lo = 0.0f, hi = 1.0f;
    default_clamp_from_dataset(ds, lo, hi);
    am.clamp_lo = static_cast<float>(cfg.get_real("am", "clamp_lo", lo));
    am.clamp_hi = static_cast<float>(cfg.get_real("am", "clamp_hi", hi));
    am.reg.tv_lambda = cfg.get_real("am", "tv_lambda", 0.0);
    am.reg.tv_inner_iters = static_cast<int>(cfg.get_int("am", "tv_inner_iters", 100));
    am.reg.blur_sigma_start = cfg.get_real("am", "blur_sigma_start", 0.0);
    am.reg.blur_sigma_end = cfg.get_real("am", "blur_sigma_end", 0.0);
    am.reg.blur_every = static_cast<int>(cfg.get_int("am", "blur_every", 0));
    am.reg.alpha = cfg.get_real("am", "alpha", 6.0);
    am.reg.alpha_weight = cfg.get_real("am", "alpha_weight", 0.0);
    if (cfg.has("am", "jitter.canvas")) {
        JitterConfig j;
        const int canvas = static_cast<int>(cfg.get_int("am", "jitter.canvas", 0));
        j.canvas_h = j.canvas_w = canvas;
        j.window_h = net.input_shape().dims[0];
        j.window_w = net.input_shape().dims[1];
        if (cfg.has("am", "jitter.center_box"))
            j.center_box = cfg.get_real("am", "jitter.center_box", 0.0);
        am.reg.jitter = j;
    }
    am.validate();
    return am;
}

PhaseSchedule schedule_from_config(const RunConfig& cfg, const LabeledDataset* ds) {
    PhaseSchedule s = default_phase_schedule();
    const double base = cfg.get_real("schedule", "base_input", 227.0);
    const auto canvas = cfg.get_list("schedule", "canvas");
    const auto lambda = cfg.get_list("schedule", "lambda");
    const auto rates = cfg.get_list("schedule", "learning_rate");
    const auto iters = cfg.get_list("schedule", "iterations");
    if (!canvas.empty() && canvas.size() != 3)
        throw ConfigError("[schedule] canvas must list 3 values (phases 1-3)");
    if (!lambda.empty() && lambda.size() != 3)
        throw ConfigError("[schedule] lambda must list 3 values (phases 1-3)");
    if (!rates.empty() && rates.size() != 3)
        throw ConfigError("[schedule] learning_rate must list 3 values (phases 1-3)");
    if (!iters.empty() && iters.size() != 5)
        throw ConfigError("[schedule] iterations must list 5 values");
    for (int p = 0; p < 5; ++p) {
        const int src = std::min(p, 2);  // phases 4-5 reuse the phase-3 values
        if (!canvas.empty()) s.phases[p].canvas_scale = canvas[src] / base;
        if (!lambda.empty()) s.phases[p].tv_lambda = lambda[src];
        if (!rates.empty()) s.phases[p].learning_rate = rates[src];
        if (!iters.empty()) s.phases[p].iterations = static_cast<int>(iters[p]);
    }
    if (cfg.has("schedule", "grad_crop")) {
        const double crop = cfg.get_real("schedule", "grad_crop", 127.0);
        s.phases[3].grad_crop_ratio = crop / base;
        s.phases[4].grad_crop_ratio = crop / base;
    }
    const double box = cfg.get_real("schedule", "center_box_frac", 0.1);
    s.phases[0].jitter_center_box = box;
    s.phases[1].jitter_center_box = box;
    s.phases[2].jitter_center_box = box;
    s.tv_inner_iters = static_cast<int>(cfg.get_int("schedule", "tv_inner_iters", 100));
    s.rng_seed = cfg.get_u64("schedule", "seed", 0);
    float lo = 0.0f, hi = 1.0f;
    default_clamp_from_dataset(ds, lo, hi);
    s.clamp_lo = static_cast<float>(cfg.get_real("schedule", "clamp_lo", lo));
    s.clamp_hi = static_cast<float>(cfg.get_real("schedule", "clamp_hi", hi));
    s.validate();
    return s;
}

}  // namespace facet
