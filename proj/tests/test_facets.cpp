#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "facet/facets.hpp"
#include "facet/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace facet;

namespace {

AMConfig fixture_am(int iterations = 60) {
    const auto& fx = helpers::trained_fixture();
    AMConfig cfg;
    cfg.iterations = iterations;
    cfg.learning_rate = 0.15;
    cfg.clamp_lo = fx.clamp_lo;
    cfg.clamp_hi = fx.clamp_hi;
    cfg.reg.tv_lambda = 3.0;
    cfg.reg.tv_inner_iters = 20;
    cfg.rng_seed = 200;
    return cfg;
}

std::array<double, 3> mean_color(const ImageTensor& img) {
    std::array<double, 3> m{0, 0, 0};
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < img.c; ++c) m[c] += img.at(y, x, c);
    for (auto& v : m) v /= img.h * img.w;
    return m;
}

}  // namespace

TEST_CASE("collect_class_images returns the class slice in dataset order") {
    const auto& fx = helpers::trained_fixture();
    const auto ids = collect_class_images(fx.data, 0);
    CHECK(ids.size() == 60);
    for (size_t i = 1; i < ids.size(); ++i) CHECK(ids[i] > ids[i - 1]);
    for (int id : ids) CHECK(fx.data.labels[id] == 0);

    CHECK_THROWS_AS(collect_class_images(fx.data, 99), DataError);

    // union over classes partitions the dataset exactly once
    std::set<int> seen;
    for (int cls = 0; cls < fx.data.num_classes; ++cls)
        for (int id : collect_class_images(fx.data, cls)) {
            CHECK(!seen.count(id));
            seen.insert(id);
        }
    CHECK(seen.size() == fx.data.size());
}

TEST_CASE("top_count applies the ceiling rule") {
    CHECK(top_count(0.02, 50000) == 1000);
    CHECK(top_count(1.0, 123) == 123);
    CHECK(top_count(0.021, 100) == 3);
    CHECK_THROWS_AS(top_count(0.0, 10), ConfigError);
    CHECK_THROWS_AS(top_count(1.5, 10), ConfigError);
}

TEST_CASE("collect_top_activating with fraction 1 sorts the whole dataset") {
    const auto& fx = helpers::trained_fixture();
    const UnitSelector sel{"fc_class", 0, std::nullopt};
    const auto all = collect_top_activating(fx.data, fx.net, sel, 1.0);
    REQUIRE(all.size() == fx.data.size());
    for (size_t i = 1; i < all.size(); ++i) CHECK(all[i].activation <= all[i - 1].activation);
}

TEST_CASE("collect_top_activating matches an analytic one-pixel detector") {
    // dense unit reading exactly pixel (0,0,0)
    Network net = Network::build(Shape{{4, 4, 2}}, {LayerSpec::dense("probe", 1)}, 0);
    for (auto& v : net.params()[0].weights.data) v = 0.0f;
    net.params()[0].weights.at(0, 0) = 1.0f;

    LabeledDataset ds;
    ds.num_classes = 1;
    Rng rng(201);
    for (int i = 0; i < 30; ++i) {
        ds.images.push_back(oracle::random_image(4, 4, 2, rng));
        ds.labels.push_back(0);
    }
    const auto top = collect_top_activating(ds, net, {"probe", 0, std::nullopt}, 0.2);
    REQUIRE(top.size() == 6);  // ceil(0.2 * 30)
    std::vector<int> expected(30);
    for (int i = 0; i < 30; ++i) expected[i] = i;
    std::stable_sort(expected.begin(), expected.end(), [&](int a, int b) {
        return ds.images[a].at(0, 0, 0) > ds.images[b].at(0, 0, 0);
    });
    for (int i = 0; i < 6; ++i) CHECK(top[i].id == expected[i]);
}

TEST_CASE("collect_top_activating records maximal columns and patches for conv units") {
    const auto& fx = helpers::trained_fixture();
    const UnitSelector sel{"conv1", 3, std::nullopt};
    const auto top = collect_top_activating(fx.data, fx.net, sel, 0.05);
    REQUIRE(!top.empty());
    for (const auto& entry : top) {
        REQUIRE(entry.location.has_value());
        REQUIRE(entry.patch.has_value());
        // conv1 is 3x3 pad 1, so an interior column sees a 3x3 patch
        CHECK(entry.patch->h <= 3);
        CHECK(entry.patch->w <= 3);
        CHECK(entry.patch->h >= 2);

        // the recorded activation is the max over all columns of the channel
        const ActivationTrace trace = forward(fx.net, fx.data.images[entry.id]);
        float best = -1e30f;
        for (int y = 0; y < trace.outputs[0].h; ++y)
            for (int x = 0; x < trace.outputs[0].w; ++x)
                best = std::max(best, trace.outputs[0].at(y, x, 3));
        CHECK(entry.activation == doctest::Approx(best));
    }
}

TEST_CASE("mean_image averages element-wise") {
    const auto& fx = helpers::trained_fixture();
    const ImageTensor single = mean_image(fx.data, {3});
    CHECK(single.data == fx.data.images[3].data);

    LabeledDataset pair;
    pair.num_classes = 1;
    Rng rng(202);
    ImageTensor a = oracle::random_image(4, 4, 1, rng);
    ImageTensor neg = a;
    for (auto& v : neg.data) v = -v;
    pair.images = {a, neg};
    pair.labels = {0, 0};
    const ImageTensor zero = mean_image(pair, {0, 1});
    for (float v : zero.data) CHECK(v == doctest::Approx(0.0f).epsilon(0).scale(1).epsilon(1e-7));

    // 15 random fixtures against a direct summation oracle
    LabeledDataset many;
    many.num_classes = 1;
    std::vector<int> ids;
    for (int i = 0; i < 15; ++i) {
        many.images.push_back(oracle::random_image(5, 5, 3, rng));
        many.labels.push_back(0);
        ids.push_back(i);
    }
    const ImageTensor mean = mean_image(many, ids);
    for (size_t e = 0; e < mean.size(); ++e) {
        double acc = 0.0;
        for (int i = 0; i < 15; ++i) acc += many.images[i].data[e];
        CHECK(mean.data[e] == doctest::Approx(acc / 15.0).epsilon(1e-6));
    }

    CHECK_THROWS_AS(mean_image(fx.data, {}), DataError);
}

TEST_CASE("facet config defaults match the documented values") {
    const FacetConfig cfg;
    CHECK(cfg.k == 10);
    CHECK(cfg.m == 15);
    CHECK(cfg.top_fraction == doctest::Approx(0.02));
    CHECK(cfg.pca_dims == 50);
}

TEST_CASE("run_mfv with k = 1 seeds from the mean of the m nearest to the global centroid") {
    const auto& fx = helpers::trained_fixture();
    FacetConfig cfg;
    cfg.k = 1;
    cfg.m = 5;
    cfg.pca_dims = 8;
    cfg.tsne_iters = 120;
    cfg.rng_seed = 203;
    cfg.am = fixture_am(3);
    const auto U = lift_ids(collect_class_images(fx.data, 0));
    const FacetSet fs = run_mfv(fx.net, {"fc_class", 0, std::nullopt}, U, fx.data, cfg);
    REQUIRE(fs.clusters.size() == 1);
    CHECK(fs.clusters[0].member_ids.size() == U.size());

    // recompute from the returned embedding
    const Embedding2D& emb = fs.embedding;
    double cx = 0.0, cy = 0.0;
    for (int i = 0; i < emb.points.rows; ++i) {
        cx += emb.points.at(i, 0);
        cy += emb.points.at(i, 1);
    }
    cx /= emb.points.rows;
    cy /= emb.points.rows;
    std::vector<std::pair<double, int>> dist;
    for (int i = 0; i < emb.points.rows; ++i) {
        const double dx = emb.points.at(i, 0) - cx, dy = emb.points.at(i, 1) - cy;
        dist.emplace_back(dx * dx + dy * dy, emb.source_ids[i]);
    }
    std::sort(dist.begin(), dist.end());
    std::vector<int> nearest;
    for (int i = 0; i < 5; ++i) nearest.push_back(dist[i].second);
    const ImageTensor expected = mean_image(fx.data, nearest);
    CHECK(oracle::max_abs_diff(fs.clusters[0].mean_image.data, expected.data) < 1e-7);
}

TEST_CASE("run_mfv separates the planted two-facet class") {
    const auto& fx = helpers::trained_fixture();
    FacetConfig cfg;
    cfg.k = 2;
    cfg.m = 10;
    cfg.pca_dims = 10;
    cfg.tsne_iters = 250;
    cfg.rng_seed = 204;
    cfg.am = fixture_am(60);
    const auto U = lift_ids(collect_class_images(fx.data, 0));
    const FacetSet fs = run_mfv(fx.net, {"fc_class", 0, std::nullopt}, U, fx.data, cfg);
    REQUIRE(fs.clusters.size() == 2);

    // membership partitions U
    std::set<int> seen;
    size_t total = 0;
    for (const auto& cluster : fs.clusters) {
        total += cluster.member_ids.size();
        for (int id : cluster.member_ids) seen.insert(id);
    }
    CHECK(total == U.size());
    CHECK(seen.size() == U.size());

    // purity against the planted facet labels
    int agree = 0;
    for (const auto& cluster : fs.clusters) {
        int counts[2] = {0, 0};
        for (int id : cluster.member_ids) ++counts[fx.data.facet_labels[id]];
        agree += std::max(counts[0], counts[1]);
    }
    CHECK(static_cast<double>(agree) / U.size() >= 0.95);

    // the two visualizations keep their facet colors apart in red/green
    const auto c0 = mean_color(fs.clusters[0].visualization.final_image);
    const auto c1 = mean_color(fs.clusters[1].visualization.final_image);
    CHECK(std::abs(c0[0] - c1[0]) + std::abs(c0[1] - c1[1]) > 0.05);
}

TEST_CASE("run_mfv mean images are bit-reproducible across reruns") {
    const auto& fx = helpers::trained_fixture();
    FacetConfig cfg;
    cfg.k = 2;
    cfg.m = 4;
    cfg.pca_dims = 6;
    cfg.tsne_iters = 100;
    cfg.rng_seed = 205;
    cfg.am = fixture_am(2);
    const auto U = lift_ids(collect_class_images(fx.data, 0));
    const FacetSet a = run_mfv(fx.net, {"fc_class", 0, std::nullopt}, U, fx.data, cfg);
    const FacetSet b = run_mfv(fx.net, {"fc_class", 0, std::nullopt}, U, fx.data, cfg);
    for (int c = 0; c < 2; ++c) {
        CHECK(a.clusters[c].mean_image.data == b.clusters[c].mean_image.data);
        CHECK(a.clusters[c].visualization.final_image.data ==
              b.clusters[c].visualization.final_image.data);
    }
}

TEST_CASE("run_mfv rejects fewer images than clusters") {
    const auto& fx = helpers::trained_fixture();
    FacetConfig cfg;
    cfg.k = 10;
    cfg.am = fixture_am(1);
    const std::vector<CollectedImage> tiny = lift_ids({0, 1, 2});
    CHECK_THROWS_AS(run_mfv(fx.net, {"fc_class", 0, std::nullopt}, tiny, fx.data, cfg), DataError);
}

TEST_CASE("with regularizers off, the final activation does not fall below the seed's") {
    const auto& fx = helpers::trained_fixture();
    FacetConfig cfg;
    cfg.k = 2;
    cfg.m = 5;
    cfg.pca_dims = 6;
    cfg.tsne_iters = 120;
    cfg.rng_seed = 206;
    AMConfig am = fixture_am(25);
    am.reg = RegularizerConfig{};  // plain ascent
    am.learning_rate = 0.3;
    cfg.am = am;
    const auto U = lift_ids(collect_class_images(fx.data, 0));
    const UnitSelector sel{"fc_class", 0, std::nullopt};
    const FacetSet fs = run_mfv(fx.net, sel, U, fx.data, cfg);
    for (const auto& cluster : fs.clusters) {
        const float seed_act = unit_activation(fx.net, cluster.mean_image, sel);
        CHECK(cluster.visualization.activation_trace.back() >= seed_act - 1e-6f);
    }
}

TEST_CASE("interpolation_experiment with identical endpoints gives identical runs") {
    const auto& fx = helpers::trained_fixture();
    const ImageTensor& img = fx.data.images[0];
    const auto results =
        interpolation_experiment(fx.net, {"fc_class", 0, std::nullopt}, img, img, 2,
                                 fixture_am(4));
    REQUIRE(results.size() == 4);  // 2 endpoints + 2 intermediates
    for (size_t i = 1; i < results.size(); ++i)
        CHECK(results[i].final_image.data == results[0].final_image.data);
}

TEST_CASE("interpolation_experiment with 8 steps runs 10 seeds") {
    const auto& fx = helpers::trained_fixture();
    const auto results =
        interpolation_experiment(fx.net, {"fc_class", 0, std::nullopt}, fx.data.images[0],
                                 fx.data.images[70], 8, fixture_am(1));
    CHECK(results.size() == 10);
}

TEST_CASE("classify_visualization ranks classes by softmax score") {
    Network uniform = Network::build(
        Shape{{1, 4, 1}}, {LayerSpec::dense("fc_class", 10), LayerSpec::softmax("softmax")}, 0);
    for (auto& v : uniform.params()[0].weights.data) v = 0.0f;
    const ImageTensor x(1, 4, 1, 0.5f);
    const auto ranked = classify_visualization(uniform, x);
    REQUIRE(ranked.size() == 10);
    for (const auto& [cls, score] : ranked) CHECK(score == doctest::Approx(0.1f).epsilon(1e-6));

    Network onehot = Network::build(
        Shape{{1, 4, 1}}, {LayerSpec::dense("fc_class", 5), LayerSpec::softmax("softmax")}, 0);
    for (auto& v : onehot.params()[0].weights.data) v = 0.0f;
    onehot.params()[0].bias[2] = 50.0f;
    const auto top = classify_visualization(onehot, x);
    CHECK(top.front().first == 2);
    CHECK(top.front().second == doctest::Approx(1.0f).epsilon(1e-4));
}
