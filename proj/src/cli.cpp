#include "facet/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "facet/actmax.hpp"
#include "facet/config.hpp"
#include "facet/dataset.hpp"
#include "facet/facets.hpp"
#include "facet/kernels.hpp"
#include "facet/manifest.hpp"
#include "facet/network.hpp"
#include "facet/plots.hpp"
#include "facet/png_io.hpp"
#include "facet/run_setup.hpp"

namespace facet::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    RunConfig cfg;
    fs::path run_dir;
    std::optional<uint64_t> seed_override;
    int jobs = 1;
    RunManifest manifest;
    std::chrono::steady_clock::time_point stage_start;

    void begin_stage() { stage_start = std::chrono::steady_clock::now(); }
    void end_stage(const std::string& name) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - stage_start)
                              .count();
        manifest.stage_wall_ms.emplace_back(name, ms);
    }
    void artifact(const std::string& rel) { manifest.artifacts.push_back(rel); }
};

std::string now_timestamp() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_utc);
    return buf;
}

fs::path make_run_dir(const fs::path& out, const std::string& hash) {
    fs::create_directories(out);
    const std::string base = now_timestamp() + "_" + hash.substr(0, 8);
    fs::path dir = out / base;
    for (int i = 2; fs::exists(dir); ++i) dir = out / (base + "-" + std::to_string(i));
    fs::create_directories(dir);
    return dir;
}

Network net_from_config(const RunConfig& cfg, const std::string& section) {
    const fs::path path = cfg.require_str(section, "net");
    if (!fs::exists(path))
        throw ConfigError("weights file " + path.string() + " does not exist");
    return load_weights(path);
}

void write_trace_csv(const fs::path& path, const AMResult& result) {
    std::ofstream f(path);
    f << "iteration,activation,phase\n";
    for (size_t i = 0; i < result.activation_trace.size(); ++i) {
        int phase = 0;
        for (int b : result.phase_boundaries)
            if (static_cast<int>(i) >= b) ++phase;
        f << i << ',' << result.activation_trace[i] << ',' << phase << "\n";
    }
}

ImageTensor display_image(const ImageTensor& img, const LabeledDataset* ds) {
    if (!ds) return img;
    return ds->denormalize(img);
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_generate(Context& ctx) {
    ctx.cfg.validate_keys({{"dataset", kDatasetKeys}});
    ShapesSpec spec = shapes_spec_from_config(ctx.cfg);
    if (ctx.seed_override) spec.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = spec.rng_seed;
    ctx.begin_stage();
    const LabeledDataset ds = generate_shapes(spec);
    export_dataset(ds, ctx.run_dir / "dataset", spec.image_size, spec.rng_seed);
    ctx.end_stage("generate");
    ctx.artifact("dataset/meta");
    ctx.artifact("dataset/facets.csv");
    std::cout << "generated " << ds.size() << " images in " << ds.num_classes << " classes\n";
}

const std::vector<std::string> kTrainKeys = {"learning_rate", "momentum", "epochs", "batch_size",
                                             "seed", "test_fraction"};

void cmd_train(Context& ctx) {
    ctx.cfg.validate_keys({{"dataset", kDatasetKeys}, {"train", kTrainKeys}});
    TrainConfig tc;
    tc.learning_rate = static_cast<float>(ctx.cfg.get_real("train", "learning_rate", 0.05));
    tc.momentum = static_cast<float>(ctx.cfg.get_real("train", "momentum", 0.9));
    tc.epochs = static_cast<int>(ctx.cfg.get_int("train", "epochs", 18));
    tc.batch_size = static_cast<int>(ctx.cfg.get_int("train", "batch_size", 32));
    tc.rng_seed = ctx.cfg.get_u64("train", "seed", 1);
    if (ctx.seed_override) tc.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = tc.rng_seed;
    const double test_fraction = ctx.cfg.get_real("train", "test_fraction", 0.2);

    ctx.begin_stage();
    const LabeledDataset ds = dataset_from_config(ctx.cfg);
    ctx.end_stage("dataset");
    auto [train_set, test_set] = train_test_split(ds, test_fraction);

    ctx.begin_stage();
    const Network init = default_shapes_network(ds.num_classes, tc.rng_seed);
    auto [net, metrics] = train(init, train_set, tc);
    ctx.end_stage("train");

    ctx.begin_stage();
    const double test_acc = evaluate_accuracy(net, test_set);
    ctx.end_stage("evaluate");

    save_weights(net, ctx.run_dir / "weights.fnet");
    std::ofstream mcsv(ctx.run_dir / "metrics.csv");
    mcsv << "epoch,loss,accuracy\n";
    for (size_t e = 0; e < metrics.size(); ++e)
        mcsv << e << ',' << metrics[e].loss << ',' << metrics[e].accuracy << "\n";
    mcsv.close();
    std::ofstream summary(ctx.run_dir / "summary");
    summary << "train_images = " << train_set.size() << "\n";
    summary << "test_images = " << test_set.size() << "\n";
    summary << "test_accuracy = " << test_acc << "\n";
    summary.close();
    ctx.artifact("weights.fnet");
    ctx.artifact("metrics.csv");
    ctx.artifact("summary");
    std::cout << "trained " << tc.epochs << " epochs, held-out accuracy " << test_acc << "\n";
}

const std::vector<std::string> kFacetKeys = {"net",        "unit",       "source",
                                             "k",          "m",          "top_fraction",
                                             "pca_dims",   "code_layer", "tsne_perplexity",
                                             "tsne_iters", "seed",       "engine"};

void cmd_facets(Context& ctx) {
    ctx.cfg.validate_keys({{"dataset", kDatasetKeys},
                           {"facet", kFacetKeys},
                           {"am", kAmKeys},
                           {"schedule", kScheduleKeys}});
    ctx.begin_stage();
    const LabeledDataset ds = dataset_from_config(ctx.cfg);
    const Network net = net_from_config(ctx.cfg, "facet");
    ctx.end_stage("load");

    const UnitSelector sel = parse_unit(ctx.cfg.require_str("facet", "unit"));
    FacetConfig fc;
    fc.k = static_cast<int>(ctx.cfg.get_int("facet", "k", 10));
    fc.m = static_cast<int>(ctx.cfg.get_int("facet", "m", 15));
    fc.top_fraction = ctx.cfg.get_real("facet", "top_fraction", 0.02);
    fc.pca_dims = static_cast<int>(ctx.cfg.get_int("facet", "pca_dims", 50));
    fc.code_layer = ctx.cfg.get_str("facet", "code_layer", "fc_code");
    fc.tsne_perplexity = ctx.cfg.get_real("facet", "tsne_perplexity", 30.0);
    fc.tsne_iters = static_cast<int>(ctx.cfg.get_int("facet", "tsne_iters", 500));
    fc.rng_seed = ctx.cfg.get_u64("facet", "seed", 0);
    if (ctx.seed_override) fc.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = fc.rng_seed;
    fc.jobs = ctx.jobs;
    const std::string engine = ctx.cfg.get_str("facet", "engine", "plain");
    if (engine == "plain") fc.am = am_from_config(ctx.cfg, net, &ds);
    else if (engine == "center") fc.am = schedule_from_config(ctx.cfg, &ds);
    else throw ConfigError("[facet] engine must be 'plain' or 'center'");

    // collection: all images of a class, or the top-activating set
    ctx.begin_stage();
    std::vector<CollectedImage> U;
    const std::string source = ctx.cfg.get_str("facet", "source", "top");
    if (source.rfind("class:", 0) == 0) {
        U = lift_ids(collect_class_images(ds, std::stoi(source.substr(6))));
    } else if (source == "top") {
        U = collect_top_activating(ds, net, sel, fc.top_fraction);
    } else {
        throw ConfigError("[facet] source must be 'top' or 'class:<id>'");
    }
    ctx.end_stage("collect");

    ctx.begin_stage();
    const FacetSet facets = run_mfv(net, sel, U, ds, fc);
    ctx.end_stage("mfv");

    ctx.begin_stage();
    std::ofstream ecsv(ctx.run_dir / "embedding.csv");
    ecsv << "id,x,y,cluster\n";
    for (int i = 0; i < facets.embedding.points.rows; ++i)
        ecsv << facets.embedding.source_ids[i] << ',' << facets.embedding.points.at(i, 0) << ','
             << facets.embedding.points.at(i, 1) << ',' << facets.assignments[i] << "\n";
    ecsv.close();
    ctx.artifact("embedding.csv");

    std::ofstream ccsv(ctx.run_dir / "clusters.csv");
    ccsv << "cluster,size,centroid_x,centroid_y\n";
    for (int c = 0; c < facets.k; ++c)
        ccsv << c << ',' << facets.clusters[c].member_ids.size() << ','
             << facets.clusters[c].centroid[0] << ',' << facets.clusters[c].centroid[1] << "\n";
    ccsv.close();
    ctx.artifact("clusters.csv");

    const int in_h = net.input_shape().dims[0], in_w = net.input_shape().dims[1];
    std::vector<ImageTensor> tiles;
    std::vector<std::string> labels;
    for (int c = 0; c < facets.k; ++c) {
        const FacetCluster& cluster = facets.clusters[c];
        const fs::path fdir = ctx.run_dir / ("facet_" + std::to_string(c));
        fs::create_directories(fdir);
        write_flt1(fdir / "mean.flt1", cluster.mean_image);
        write_png(fdir / "mean.png", display_image(cluster.mean_image, &ds));
        write_flt1(fdir / "viz.flt1", cluster.visualization.final_image);
        write_png(fdir / "viz.png", display_image(cluster.visualization.final_image, &ds));
        write_trace_csv(fdir / "trace.csv", cluster.visualization);
        for (const char* name : {"mean.flt1", "mean.png", "viz.flt1", "viz.png", "trace.csv"})
            ctx.artifact("facet_" + std::to_string(c) + "/" + name);

        const ImageTensor viz_center =
            cluster.visualization.final_image.h == in_h &&
                    cluster.visualization.final_image.w == in_w
                ? cluster.visualization.final_image
                : center_crop(cluster.visualization.final_image, in_h, in_w);
        tiles.push_back(display_image(viz_center, &ds));
        labels.push_back("F" + std::to_string(c) + " N=" +
                         std::to_string(cluster.member_ids.size()));

        FacetRow row;
        row.cluster = c;
        row.size = static_cast<int>(cluster.member_ids.size());
        row.seed_activation = unit_activation(net, cluster.mean_image, sel);
        row.final_activation = cluster.visualization.activation_trace.empty()
                                   ? row.seed_activation
                                   : cluster.visualization.activation_trace.back();
        row.top1_class = classify_visualization(net, viz_center).front().first;
        ctx.manifest.facet_rows.push_back(row);
    }
    emit_montage(tiles, labels, 5, ctx.run_dir / "montage.png");
    ctx.artifact("montage.png");
    Clustering clustering;
    clustering.assignments = facets.assignments;
    clustering.centroids = MatD(facets.k, 2);
    for (int c = 0; c < facets.k; ++c) {
        clustering.centroids.at(c, 0) = facets.clusters[c].centroid[0];
        clustering.centroids.at(c, 1) = facets.clusters[c].centroid[1];
    }
    emit_scatter_svg(facets.embedding, clustering, ctx.run_dir / "scatter.svg");
    ctx.artifact("scatter.svg");
    ctx.end_stage("artifacts");
    std::cout << "wrote " << facets.k << " facet directories\n";
}

const std::vector<std::string> kActmaxKeys = {"net", "unit"};

void cmd_actmax(Context& ctx) {
    ctx.cfg.validate_keys(
        {{"dataset", kDatasetKeys}, {"actmax", kActmaxKeys}, {"am", kAmKeys}});
    ctx.begin_stage();
    std::optional<LabeledDataset> ds;
    if (ctx.cfg.has_section("dataset")) ds = dataset_from_config(ctx.cfg);
    const Network net = net_from_config(ctx.cfg, "actmax");
    ctx.end_stage("load");

    const UnitSelector sel = parse_unit(ctx.cfg.require_str("actmax", "unit"));
    AMConfig am = am_from_config(ctx.cfg, net, ds ? &*ds : nullptr);
    if (ctx.seed_override) am.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = am.rng_seed;

    ctx.begin_stage();
    const AMResult result = maximize(net, sel, am);
    ctx.end_stage("maximize");

    write_flt1(ctx.run_dir / "final.flt1", result.final_image);
    write_png(ctx.run_dir / "final.png", display_image(result.final_image, ds ? &*ds : nullptr));
    write_trace_csv(ctx.run_dir / "trace.csv", result);
    ctx.artifact("final.flt1");
    ctx.artifact("final.png");
    ctx.artifact("trace.csv");
    std::cout << "final activation "
              << (result.activation_trace.empty() ? 0.0f : result.activation_trace.back()) << "\n";
}

const std::vector<std::string> kCenterKeys = {"net", "unit", "seed_image"};

void cmd_center(Context& ctx) {
    ctx.cfg.validate_keys(
        {{"dataset", kDatasetKeys}, {"center", kCenterKeys}, {"schedule", kScheduleKeys}});
    ctx.begin_stage();
    std::optional<LabeledDataset> ds;
    if (ctx.cfg.has_section("dataset")) ds = dataset_from_config(ctx.cfg);
    const Network net = net_from_config(ctx.cfg, "center");
    ctx.end_stage("load");

    const UnitSelector sel = parse_unit(ctx.cfg.require_str("center", "unit"));
    PhaseSchedule sched = schedule_from_config(ctx.cfg, ds ? &*ds : nullptr);
    if (ctx.seed_override) sched.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = sched.rng_seed;
    std::optional<ImageTensor> seed_img;
    if (ctx.cfg.has("center", "seed_image"))
        seed_img = read_flt1_image(ctx.cfg.require_str("center", "seed_image"));

    ctx.begin_stage();
    const AMResult result = center_biased_maximize(net, sel, seed_img, sched);
    ctx.end_stage("center_biased");

    write_flt1(ctx.run_dir / "final.flt1", result.final_image);
    write_png(ctx.run_dir / "final.png", display_image(result.final_image, ds ? &*ds : nullptr));
    write_trace_csv(ctx.run_dir / "trace.csv", result);
    ctx.artifact("final.flt1");
    ctx.artifact("final.png");
    ctx.artifact("trace.csv");
    std::cout << "final activation "
              << (result.activation_trace.empty() ? 0.0f : result.activation_trace.back()) << "\n";
}

const std::vector<std::string> kInterpolateKeys = {"net", "unit", "img_a", "img_b", "steps"};

ImageTensor interpolation_endpoint(const std::string& spec, const LabeledDataset* ds) {
    if (spec.rfind("id:", 0) == 0) {
        if (!ds) throw ConfigError("img endpoint 'id:<n>' needs a [dataset] section");
        const int id = std::stoi(spec.substr(3));
        if (id < 0 || id >= static_cast<int>(ds->size()))
            throw ConfigError("dataset id " + std::to_string(id) + " out of range");
        return ds->images[id];
    }
    if (!fs::exists(spec)) throw ConfigError("image " + spec + " does not exist");
    return read_flt1_image(spec);
}

void cmd_interpolate(Context& ctx) {
    ctx.cfg.validate_keys(
        {{"dataset", kDatasetKeys}, {"interpolate", kInterpolateKeys}, {"am", kAmKeys}});
    ctx.begin_stage();
    std::optional<LabeledDataset> ds;
    if (ctx.cfg.has_section("dataset")) ds = dataset_from_config(ctx.cfg);
    const Network net = net_from_config(ctx.cfg, "interpolate");
    ctx.end_stage("load");

    const UnitSelector sel = parse_unit(ctx.cfg.require_str("interpolate", "unit"));
    AMConfig am = am_from_config(ctx.cfg, net, ds ? &*ds : nullptr);
    if (ctx.seed_override) am.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = am.rng_seed;
    const int steps = static_cast<int>(ctx.cfg.get_int("interpolate", "steps", 8));
    const ImageTensor img_a =
        interpolation_endpoint(ctx.cfg.require_str("interpolate", "img_a"), ds ? &*ds : nullptr);
    const ImageTensor img_b =
        interpolation_endpoint(ctx.cfg.require_str("interpolate", "img_b"), ds ? &*ds : nullptr);

    ctx.begin_stage();
    const std::vector<AMResult> results =
        interpolation_experiment(net, sel, img_a, img_b, steps, am, ctx.jobs);
    ctx.end_stage("interpolate");

    const int in_h = net.input_shape().dims[0], in_w = net.input_shape().dims[1];
    std::vector<ImageTensor> seed_tiles, result_tiles;
    std::vector<std::string> labels;
    for (size_t i = 0; i < results.size(); ++i) {
        const double t = static_cast<double>(i) / (steps + 1);
        const fs::path rdir = ctx.run_dir / ("run_" + std::to_string(i));
        fs::create_directories(rdir);
        write_flt1(rdir / "final.flt1", results[i].final_image);
        write_png(rdir / "final.png",
                  display_image(results[i].final_image, ds ? &*ds : nullptr));
        write_trace_csv(rdir / "trace.csv", results[i]);
        for (const char* name : {"final.flt1", "final.png", "trace.csv"})
            ctx.artifact("run_" + std::to_string(i) + "/" + name);
        seed_tiles.push_back(display_image(lerp_images(img_a, img_b, t), ds ? &*ds : nullptr));
        const ImageTensor& fin = results[i].final_image;
        result_tiles.push_back(display_image(
            fin.h == in_h && fin.w == in_w ? fin : center_crop(fin, in_h, in_w),
            ds ? &*ds : nullptr));
        char lbl[16];
        std::snprintf(lbl, sizeof(lbl), "T=%.2f", t);
        labels.push_back(lbl);
    }
    emit_montage(seed_tiles, labels, static_cast<int>(seed_tiles.size()),
                 ctx.run_dir / "seeds.png");
    emit_montage(result_tiles, labels, static_cast<int>(result_tiles.size()),
                 ctx.run_dir / "results.png");
    ctx.artifact("seeds.png");
    ctx.artifact("results.png");
    std::cout << results.size() << " interpolation runs\n";
}

const std::vector<std::string> kCompareKeys = {"net", "unit", "variants"};

AMConfig make_variant(const std::string& name, const AMConfig& base, const Network& net) {
    AMConfig v = base;
    v.label = name;
    v.reg = RegularizerConfig{};
    v.reg.alpha = base.reg.alpha;
    v.reg.tv_inner_iters = base.reg.tv_inner_iters;
    const int in_h = net.input_shape().dims[0];
    const int in_w = net.input_shape().dims[1];
    auto default_jitter = [&]() {
        JitterConfig j;
        j.window_h = in_h;
        j.window_w = in_w;
        j.canvas_h = base.reg.jitter ? base.reg.jitter->canvas_h
                                     : static_cast<int>(std::lround(in_h * 1.2));
        j.canvas_w = base.reg.jitter ? base.reg.jitter->canvas_w
                                     : static_cast<int>(std::lround(in_w * 1.2));
        return j;
    };
    const double tv = base.reg.tv_lambda > 0 ? base.reg.tv_lambda : 2.0;
    const double sigma = base.reg.blur_sigma_start > 0 ? base.reg.blur_sigma_start : 1.0;
    const int every = base.reg.blur_every > 0 ? base.reg.blur_every : 4;
    if (name == "none") {
    } else if (name == "alpha") {
        v.reg.alpha_weight = base.reg.alpha_weight > 0 ? base.reg.alpha_weight : 1.0;
    } else if (name == "blur") {
        v.reg.blur_every = every;
        v.reg.blur_sigma_start = v.reg.blur_sigma_end = sigma;
    } else if (name == "blur_decay") {
        v.reg.blur_every = every;
        v.reg.blur_sigma_start = sigma;
        v.reg.blur_sigma_end = base.reg.blur_sigma_end > 0 ? base.reg.blur_sigma_end : 0.3;
    } else if (name == "tv") {
        v.reg.tv_lambda = tv;
    } else if (name == "jitter") {
        v.reg.jitter = default_jitter();
    } else if (name == "tv_jitter") {
        v.reg.tv_lambda = tv;
        v.reg.jitter = default_jitter();
    } else if (name == "blur_jitter") {
        v.reg.blur_every = every;
        v.reg.blur_sigma_start = sigma;
        v.reg.blur_sigma_end = base.reg.blur_sigma_end > 0 ? base.reg.blur_sigma_end : 0.3;
        v.reg.jitter = default_jitter();
    } else {
        throw ConfigError("unknown compare variant '" + name +
                          "' (expected none, alpha, blur, blur_decay, tv, jitter, tv_jitter, "
                          "blur_jitter)");
    }
    return v;
}

void cmd_compare(Context& ctx) {
    ctx.cfg.validate_keys(
        {{"dataset", kDatasetKeys}, {"compare", kCompareKeys}, {"am", kAmKeys}});
    ctx.begin_stage();
    std::optional<LabeledDataset> ds;
    if (ctx.cfg.has_section("dataset")) ds = dataset_from_config(ctx.cfg);
    const Network net = net_from_config(ctx.cfg, "compare");
    ctx.end_stage("load");

    const UnitSelector sel = parse_unit(ctx.cfg.require_str("compare", "unit"));
    AMConfig base = am_from_config(ctx.cfg, net, ds ? &*ds : nullptr);
    if (ctx.seed_override) base.rng_seed = *ctx.seed_override;
    ctx.manifest.seed = base.rng_seed;

    std::vector<AMConfig> variants;
    std::istringstream vs(ctx.cfg.require_str("compare", "variants"));
    std::string item;
    while (std::getline(vs, item, ',')) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (!item.empty()) variants.push_back(make_variant(item, base, net));
    }
    if (variants.empty()) throw ConfigError("[compare] variants is empty");

    ctx.begin_stage();
    const std::vector<AMResult> results = compare_regularizers(net, sel, variants, ctx.jobs);
    ctx.end_stage("compare");

    const int in_h = net.input_shape().dims[0], in_w = net.input_shape().dims[1];
    std::vector<ImageTensor> tiles;
    std::vector<std::string> labels;
    std::ofstream vcsv(ctx.run_dir / "variants.csv");
    vcsv << "variant,final_activation,tv_norm\n";
    for (size_t i = 0; i < results.size(); ++i) {
        const ImageTensor& fin = results[i].final_image;
        const ImageTensor crop =
            fin.h == in_h && fin.w == in_w ? fin : center_crop(fin, in_h, in_w);
        tiles.push_back(display_image(crop, ds ? &*ds : nullptr));
        labels.push_back(variants[i].label);
        write_flt1(ctx.run_dir / ("final_" + variants[i].label + ".flt1"), fin);
        ctx.artifact("final_" + variants[i].label + ".flt1");
        vcsv << variants[i].label << ','
             << (results[i].activation_trace.empty() ? 0.0f : results[i].activation_trace.back())
             << ',' << tv_norm(fin) << "\n";
    }
    vcsv.close();
    ctx.artifact("variants.csv");
    emit_montage(tiles, labels, static_cast<int>(tiles.size()), ctx.run_dir / "montage.png");
    ctx.artifact("montage.png");
    std::cout << results.size() << " variants compared\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"facetviz: neuron facet visualization toolkit"};
    app.require_subcommand(1);

    struct SubArgs {
        std::string config;
        std::string out = "runs";
        int jobs = 1;
        std::optional<uint64_t> seed;
    };
    std::map<std::string, SubArgs> sub_args;
    std::map<std::string, void (*)(Context&)> handlers = {
        {"generate", cmd_generate},   {"train", cmd_train},     {"facets", cmd_facets},
        {"actmax", cmd_actmax},       {"center", cmd_center},   {"interpolate", cmd_interpolate},
        {"compare", cmd_compare}};

    for (auto& [name, fn] : handlers) {
        auto* sub = app.add_subcommand(name);
        auto& sa = sub_args[name];
        sub->add_option("--config", sa.config, "run configuration file")->required();
        sub->add_option("--out", sa.out, "output root directory");
        sub->add_option("--jobs", sa.jobs, "max concurrent facet/AM runs");
        sub->add_option("--seed", sa.seed, "override the config RNG seed");
    }

    try {
        std::vector<const char*> argv;
        argv.push_back("facetviz");
        for (const auto& a : args) argv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {  // --help
                app.exit(e);
                return 0;
            }
            throw ConfigError(std::string("argument error: ") + e.what());
        }

        const std::string name = app.get_subcommands().front()->get_name();
        const SubArgs& sa = sub_args[name];

        Context ctx;
        ctx.cfg = RunConfig::parse_file(sa.config);
        ctx.seed_override = sa.seed;
        ctx.jobs = std::max(1, sa.jobs);
        ctx.manifest.subcommand = name;
        ctx.manifest.config_hash = fnv1a_hex(ctx.cfg.source_text());
        ctx.manifest.created = now_timestamp();
        ctx.run_dir = make_run_dir(sa.out, ctx.manifest.config_hash);
        std::ofstream copy(ctx.run_dir / "config", std::ios::binary);
        copy << ctx.cfg.source_text();
        copy.close();

        handlers[name](ctx);
        write_manifest(ctx.manifest, ctx.run_dir);
        std::cout << "run directory: " << ctx.run_dir.string() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "ERROR " << e.category_name() << ": " << e.what() << "\n";
        switch (e.category()) {
            case ErrorCategory::config: return 2;
            case ErrorCategory::data: return 3;
            default: return 4;
        }
    } catch (const std::exception& e) {
        std::cerr << "ERROR RUNTIME: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace facet::cli
