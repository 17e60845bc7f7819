#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "facet/actmax.hpp"
#include "facet/priors.hpp"
#include "facet/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace facet;

namespace {

Network linear_net(uint64_t seed) {
    return Network::build(Shape{{2, 2, 1}}, {LayerSpec::dense("fc", 1)}, seed);
}

AMConfig wide_clamp_config() {
    AMConfig cfg;
    cfg.clamp_lo = -100.0f;
    cfg.clamp_hi = 100.0f;
    cfg.reg.tv_lambda = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("am_step with zero learning rate and no regularizers is a no-op") {
    Network net = linear_net(120);
    Rng rng(121);
    const ImageTensor img = oracle::random_image(2, 2, 1, rng);
    AMConfig cfg = wide_clamp_config();
    cfg.learning_rate = 0.0;
    const ImageTensor out = am_step(net, {"fc", 0, std::nullopt}, img, cfg);
    CHECK(out.data == img.data);
}

TEST_CASE("am_step on a linear model adds lr times the weight row") {
    Network net = linear_net(122);
    Rng rng(123);
    const ImageTensor img = oracle::random_image(2, 2, 1, rng);
    AMConfig cfg = wide_clamp_config();
    cfg.learning_rate = 0.7;
    const ImageTensor out = am_step(net, {"fc", 0, std::nullopt}, img, cfg);
    const Mat& w = net.params()[0].weights;
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(img.data[i] + 0.7f * w.data[i]).epsilon(1e-6));
}

TEST_CASE("am_step with TV equals independent ascent followed by tv_denoise") {
    Network net = linear_net(124);
    Rng rng(125);
    const ImageTensor img = oracle::random_image(2, 2, 1, rng);
    AMConfig cfg = wide_clamp_config();
    cfg.learning_rate = 0.5;
    cfg.reg.tv_lambda = 3.0;
    cfg.reg.tv_inner_iters = 40;
    const ImageTensor stepped = am_step(net, {"fc", 0, std::nullopt}, img, cfg);

    ImageTensor manual = img;
    const Mat& w = net.params()[0].weights;
    for (size_t i = 0; i < manual.size(); ++i) manual.data[i] += 0.5f * w.data[i];
    manual = tv_denoise(manual, 3.0, 40);
    CHECK(oracle::max_abs_diff(stepped.data, manual.data) < 1e-6);
}

TEST_CASE("maximize with zero iterations returns the seed") {
    Network net = linear_net(126);
    Rng rng(127);
    AMConfig cfg = wide_clamp_config();
    cfg.iterations = 0;
    cfg.seed_image = oracle::random_image(2, 2, 1, rng);
    const AMResult result = maximize(net, {"fc", 0, std::nullopt}, cfg);
    CHECK(result.activation_trace.empty());
    CHECK(result.final_image.data == cfg.seed_image->data);
}

TEST_CASE("maximize on a linear target gives a strictly increasing trace") {
    Network net = linear_net(128);
    AMConfig cfg = wide_clamp_config();
    cfg.iterations = 50;
    cfg.learning_rate = 0.3;
    cfg.rng_seed = 129;
    const AMResult result = maximize(net, {"fc", 0, std::nullopt}, cfg);
    REQUIRE(result.activation_trace.size() == 50);
    for (size_t i = 1; i < result.activation_trace.size(); ++i)
        CHECK(result.activation_trace[i] > result.activation_trace[i - 1]);
}

TEST_CASE("maximize keeps every output within the clamp bounds") {
    Network net = linear_net(130);
    AMConfig cfg;
    cfg.clamp_lo = -0.25f;
    cfg.clamp_hi = 0.25f;
    cfg.iterations = 30;
    cfg.learning_rate = 2.0;  // would overshoot without clamping
    cfg.rng_seed = 131;
    const AMResult result = maximize(net, {"fc", 0, std::nullopt}, cfg);
    for (float v : result.final_image.data) {
        CHECK(v >= -0.25f);
        CHECK(v <= 0.25f);
    }
}

TEST_CASE("maximize is bit-reproducible from its seed") {
    const auto& fx = helpers::trained_fixture();
    AMConfig cfg;
    cfg.iterations = 10;
    cfg.learning_rate = 1.0;
    cfg.clamp_lo = fx.clamp_lo;
    cfg.clamp_hi = fx.clamp_hi;
    cfg.reg.tv_lambda = 2.0;
    cfg.reg.tv_inner_iters = 20;
    JitterConfig j;
    j.canvas_h = j.canvas_w = 19;
    j.window_h = j.window_w = 16;
    cfg.reg.jitter = j;
    cfg.rng_seed = 132;
    const AMResult a = maximize(fx.net, {"fc_class", 0, std::nullopt}, cfg);
    const AMResult b = maximize(fx.net, {"fc_class", 0, std::nullopt}, cfg);
    CHECK(a.final_image.data == b.final_image.data);
    CHECK(a.activation_trace == b.activation_trace);
}

TEST_CASE("trained class units beat the 99th percentile of random noise") {
    const auto& fx = helpers::trained_fixture();
    const UnitSelector sel{"fc_class", 0, std::nullopt};

    AMConfig cfg;
    cfg.iterations = 200;
    cfg.learning_rate = 1.0;
    cfg.clamp_lo = fx.clamp_lo;
    cfg.clamp_hi = fx.clamp_hi;
    cfg.reg.tv_lambda = 2.0;
    cfg.reg.tv_inner_iters = 30;
    JitterConfig j;
    j.canvas_h = j.canvas_w = 19;
    j.window_h = j.window_w = 16;
    cfg.reg.jitter = j;
    cfg.rng_seed = 133;
    const AMResult result = maximize(fx.net, sel, cfg);

    Rng rng(134);
    std::vector<float> noise_acts;
    for (int i = 0; i < 1000; ++i) {
        ImageTensor noise(16, 16, 3);
        for (auto& v : noise.data) v = static_cast<float>(rng.uniform(fx.clamp_lo, fx.clamp_hi));
        noise_acts.push_back(unit_activation(fx.net, noise, sel));
    }
    std::sort(noise_acts.begin(), noise_acts.end());
    const float p99 = noise_acts[static_cast<size_t>(0.99 * noise_acts.size())];
    CHECK(result.activation_trace.back() > p99);
}

TEST_CASE("center_biased_maximize with a no-op schedule returns the rescaled seed") {
    const auto& fx = helpers::trained_fixture();
    PhaseSchedule sched = default_phase_schedule();
    for (auto& p : sched.phases) p.iterations = 0;
    sched.clamp_lo = fx.clamp_lo;
    sched.clamp_hi = fx.clamp_hi;

    const ImageTensor seed(16, 16, 3, 0.125f);
    const AMResult result = center_biased_maximize(fx.net, {"fc_class", 0, std::nullopt}, seed, sched);
    CHECK(result.activation_trace.empty());
    // final canvas extent is round(16 * 327/227) = 23; bilinear keeps constants
    CHECK(result.final_image.h == 23);
    CHECK(result.final_image.w == 23);
    for (float v : result.final_image.data) CHECK(v == doctest::Approx(0.125f).epsilon(1e-6));
}

TEST_CASE("canvas bookkeeping follows round(input * 1.2^(phase-1))") {
    const auto& fx = helpers::trained_fixture();
    for (int final_phase = 1; final_phase <= 3; ++final_phase) {
        PhaseSchedule sched = default_phase_schedule();
        for (int p = 0; p < 5; ++p) {
            sched.phases[p].iterations = 0;
            const int eff = std::min(final_phase - 1, p);
            sched.phases[p].canvas_scale = std::pow(1.2, eff);
        }
        sched.clamp_lo = fx.clamp_lo;
        sched.clamp_hi = fx.clamp_hi;
        const ImageTensor seed(16, 16, 3, 0.0f);
        const AMResult result =
            center_biased_maximize(fx.net, {"fc_class", 0, std::nullopt}, seed, sched);
        const int expected = static_cast<int>(std::lround(16.0 * std::pow(1.2, final_phase - 1)));
        CHECK(result.final_image.h == expected);
        CHECK(result.final_image.w == expected);
    }
}

TEST_CASE("center_biased_maximize is deterministic and records phase boundaries") {
    const auto& fx = helpers::trained_fixture();
    PhaseSchedule sched = default_phase_schedule();
    const int small_iters[5] = {4, 4, 4, 2, 2};
    for (int p = 0; p < 5; ++p) sched.phases[p].iterations = small_iters[p];
    sched.tv_inner_iters = 10;
    sched.clamp_lo = fx.clamp_lo;
    sched.clamp_hi = fx.clamp_hi;
    sched.rng_seed = 135;

    const AMResult a =
        center_biased_maximize(fx.net, {"fc_class", 1, std::nullopt}, std::nullopt, sched);
    const AMResult b =
        center_biased_maximize(fx.net, {"fc_class", 1, std::nullopt}, std::nullopt, sched);
    CHECK(a.final_image.data == b.final_image.data);
    REQUIRE(a.activation_trace.size() == 16);
    CHECK(a.phase_boundaries == std::vector<int>{4, 8, 12, 14});
    for (float v : a.final_image.data) {
        CHECK(v >= fx.clamp_lo);
        CHECK(v <= fx.clamp_hi);
    }
}

TEST_CASE("the stock schedule carries the documented parameters") {
    const PhaseSchedule s = default_phase_schedule();
    const double lambdas[5] = {0.001, 0.08, 2.0, 2.0, 2.0};
    const double rates[5] = {11.0, 6.0, 1.0, 1.0, 1.0};
    const int iters[5] = {150, 150, 150, 30, 10};
    const double scales[5] = {1.0, 272.0 / 227.0, 327.0 / 227.0, 327.0 / 227.0, 327.0 / 227.0};
    for (int p = 0; p < 5; ++p) {
        CHECK(s.phases[p].tv_lambda == doctest::Approx(lambdas[p]));
        CHECK(s.phases[p].learning_rate == doctest::Approx(rates[p]));
        CHECK(s.phases[p].iterations == iters[p]);
        CHECK(s.phases[p].canvas_scale == doctest::Approx(scales[p]).epsilon(1e-12));
    }
    CHECK(s.tv_inner_iters == 100);
    // phases 1-3 jitter near the center, phase 4 pins it, phase 5 roams
    for (int p = 0; p < 3; ++p) CHECK(*s.phases[p].jitter_center_box == doctest::Approx(0.1));
    CHECK(*s.phases[3].jitter_center_box == doctest::Approx(0.0));
    CHECK(!s.phases[4].jitter_center_box.has_value());
    CHECK(!s.phases[0].grad_crop_ratio.has_value());
    CHECK(*s.phases[3].grad_crop_ratio == doctest::Approx(127.0 / 227.0).epsilon(1e-12));
    CHECK(*s.phases[4].grad_crop_ratio == doctest::Approx(127.0 / 227.0).epsilon(1e-12));

    // scaled to a 32-pixel input: canvases {32, 38, 46}, gradient crop 18
    CHECK(std::lround(32 * s.phases[0].canvas_scale) == 32);
    CHECK(std::lround(32 * s.phases[1].canvas_scale) == 38);
    CHECK(std::lround(32 * s.phases[2].canvas_scale) == 46);
    CHECK(std::lround(32 * *s.phases[3].grad_crop_ratio) == 18);
}

TEST_CASE("compare_regularizers handles the empty list and is deterministic") {
    const auto& fx = helpers::trained_fixture();
    CHECK(compare_regularizers(fx.net, {"fc_class", 0, std::nullopt}, {}).empty());

    AMConfig cfg;
    cfg.iterations = 5;
    cfg.learning_rate = 0.5;
    cfg.clamp_lo = fx.clamp_lo;
    cfg.clamp_hi = fx.clamp_hi;
    cfg.rng_seed = 136;
    const auto results =
        compare_regularizers(fx.net, {"fc_class", 0, std::nullopt}, {cfg, cfg});
    REQUIRE(results.size() == 2);
    CHECK(results[0].final_image.data == results[1].final_image.data);
}

TEST_CASE("a TV-only variant ends with strictly lower tv_norm than no regularizer") {
    const auto& fx = helpers::trained_fixture();
    AMConfig none;
    none.iterations = 40;
    none.learning_rate = 1.0;
    none.clamp_lo = fx.clamp_lo;
    none.clamp_hi = fx.clamp_hi;
    none.rng_seed = 137;
    AMConfig tv_only = none;
    tv_only.reg.tv_lambda = 2.0;
    tv_only.reg.tv_inner_iters = 30;
    const auto results =
        compare_regularizers(fx.net, {"fc_class", 1, std::nullopt}, {none, tv_only});
    REQUIRE(results.size() == 2);
    CHECK(tv_norm(results[1].final_image) < tv_norm(results[0].final_image));
}

TEST_CASE("gradient crop confines the update to the window center") {
    Network net = Network::build(Shape{{8, 8, 1}}, {LayerSpec::dense("fc", 1)}, 138);
    for (auto& v : net.params()[0].weights.data) v = 1.0f;  // uniform ascent direction
    AMConfig cfg = wide_clamp_config();
    cfg.learning_rate = 1.0;
    cfg.grad_crop = 4;
    const ImageTensor img(8, 8, 1, 0.0f);
    const ImageTensor out = am_step(net, {"fc", 0, std::nullopt}, img, cfg);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const bool inside = y >= 2 && y < 6 && x >= 2 && x < 6;
            CHECK(out.at(y, x, 0) == doctest::Approx(inside ? 1.0f : 0.0f));
        }
}

TEST_CASE("am config validation") {
    AMConfig cfg;
    cfg.clamp_lo = 1.0f;
    cfg.clamp_hi = 0.0f;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    PhaseSchedule sched = default_phase_schedule();
    sched.phases[2].canvas_scale = 1.0;  // decreasing over phases 1-3
    CHECK_THROWS_AS(sched.validate(), ConfigError);
}
