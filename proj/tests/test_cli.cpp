#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "facet/cli.hpp"
#include "facet/config.hpp"
#include "facet/manifest.hpp"
#include "facet/plots.hpp"
#include "facet/png_io.hpp"
#include "facet/run_setup.hpp"
#include "facet/rng.hpp"
#include "oracles.hpp"

using namespace facet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "facetviz_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "config";
    std::ofstream f(path);
    f << text;
    return path;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// repo root: tests run from anywhere, so locate presets relative to this file
fs::path repo_root() {
    fs::path p = fs::path(__FILE__).parent_path().parent_path();
    return p;
}

fs::path only_run_dir(const fs::path& out) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(out))
        if (e.is_directory()) dirs.push_back(e.path());
    REQUIRE(dirs.size() == 1);
    return dirs[0];
}

std::string manifest_without_timings(const fs::path& run_dir) {
    std::ifstream f(run_dir / "manifest");
    std::string line, out;
    while (std::getline(f, line)) {
        if (line.rfind("created =", 0) == 0 || line.rfind("stage ", 0) == 0) continue;
        out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("config parses sections, comments, and typed values") {
    const std::string text =
        "# comment\n"
        "[am]\n"
        "iterations = 42\n"
        "learning_rate = 0.5\n"
        "label = tv only\n"
        "\n"
        "[schedule]\n"
        "canvas = 227, 272, 327\n";
    const RunConfig cfg = RunConfig::parse_string(text, "test");
    CHECK(cfg.get_int("am", "iterations", 0) == 42);
    CHECK(cfg.get_real("am", "learning_rate", 0) == doctest::Approx(0.5));
    CHECK(cfg.get_str("am", "label", "") == "tv only");
    CHECK(cfg.get_int("am", "missing", 7) == 7);
    const auto canvas = cfg.get_list("schedule", "canvas");
    REQUIRE(canvas.size() == 3);
    CHECK(canvas[1] == doctest::Approx(272.0));
    CHECK(cfg.has_section("am"));
    CHECK(!cfg.has_section("dataset"));
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS(RunConfig::parse_string("key = 1\n", "t"), ConfigError);  // outside section
    CHECK_THROWS_AS(RunConfig::parse_string("[a]\nkey\n", "t"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_string("[a]\nk = 1\nk = 2\n", "t"), ConfigError);
    const RunConfig cfg = RunConfig::parse_string("[a]\nk = x\n", "t");
    CHECK_THROWS_AS(cfg.get_int("a", "k", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_real("a", "k", 0), ConfigError);
}

TEST_CASE("unknown keys are rejected with every offender listed") {
    const RunConfig cfg = RunConfig::parse_string(
        "[am]\niterations = 5\nbogus_one = 1\n[mystery]\nbogus_two = 2\n", "t");
    try {
        cfg.validate_keys({{"am", kAmKeys}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bogus_one") != std::string::npos);
        CHECK(msg.find("mystery") != std::string::npos);
    }
}

TEST_CASE("fnv1a hash is stable and input-sensitive") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
    CHECK(fnv1a_hex("config") == fnv1a_hex("config"));
    CHECK(fnv1a_hex("x").size() == 16);
}

TEST_CASE("parse_unit handles both selector forms") {
    const UnitSelector plain = parse_unit("fc_class:3");
    CHECK(plain.layer == "fc_class");
    CHECK(plain.unit == 3);
    CHECK(!plain.location.has_value());
    const UnitSelector located = parse_unit("conv2:7@2,5");
    CHECK(located.layer == "conv2");
    CHECK(located.unit == 7);
    REQUIRE(located.location.has_value());
    CHECK(located.location->first == 2);
    CHECK(located.location->second == 5);
    CHECK_THROWS_AS(parse_unit("fc_class"), ConfigError);
    CHECK_THROWS_AS(parse_unit("fc_class:x"), ConfigError);
    CHECK_THROWS_AS(parse_unit("conv2:1@5"), ConfigError);
}

TEST_CASE("the checked-in schedule preset parses to the stock schedule") {
    const RunConfig cfg = RunConfig::parse_file(repo_root() / "presets" / "paper_center_biased");
    cfg.validate_keys({{"schedule", kScheduleKeys}});
    const PhaseSchedule parsed = schedule_from_config(cfg, nullptr);
    const PhaseSchedule stock = default_phase_schedule();
    for (int p = 0; p < 5; ++p) {
        CHECK(parsed.phases[p].tv_lambda == doctest::Approx(stock.phases[p].tv_lambda));
        CHECK(parsed.phases[p].learning_rate == doctest::Approx(stock.phases[p].learning_rate));
        CHECK(parsed.phases[p].iterations == stock.phases[p].iterations);
        CHECK(parsed.phases[p].canvas_scale ==
              doctest::Approx(stock.phases[p].canvas_scale).epsilon(1e-12));
    }
    CHECK(parsed.tv_inner_iters == 100);
    CHECK(*parsed.phases[3].grad_crop_ratio == doctest::Approx(127.0 / 227.0).epsilon(1e-12));
}

TEST_CASE("manifests round trip and refuse missing artifacts") {
    const fs::path dir = fresh_dir("manifest");
    RunManifest m;
    m.subcommand = "train";
    m.config_hash = "0123456789abcdef";
    m.seed = 99;
    m.created = "20260101-000000";
    m.stage_wall_ms = {{"train", 123.5}};
    m.facet_rows.push_back({0, 12, 1.5f, 9.0f, 2});
    m.artifacts = {"weights.fnet"};
    CHECK_THROWS_AS(write_manifest(m, dir), IoError);  // artifact missing

    std::ofstream(dir / "weights.fnet") << "x";
    write_manifest(m, dir);
    const RunManifest back = read_manifest(dir / "manifest");
    CHECK(back.subcommand == "train");
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.seed == 99);
    REQUIRE(back.artifacts.size() == 1);
    CHECK(back.artifacts[0] == "weights.fnet");
    REQUIRE(back.facet_rows.size() == 1);
    CHECK(back.facet_rows[0].size == 12);
    CHECK(back.facet_rows[0].top1_class == 2);
    REQUIRE(back.stage_wall_ms.size() == 1);
    CHECK(back.stage_wall_ms[0].first == "train");
}

TEST_CASE("scatter SVG is well-formed for empty and small inputs") {
    const fs::path dir = fresh_dir("svg");
    Embedding2D empty;
    empty.points = MatD(0, 2);
    Clustering none;
    none.centroids = MatD(0, 2);
    emit_scatter_svg(empty, none, dir / "empty.svg");
    CHECK(oracle::xml_well_formed(file_bytes(dir / "empty.svg")));

    Embedding2D emb;
    emb.points = MatD(3, 2);
    emb.points.at(0, 0) = 0.0;
    emb.points.at(1, 0) = 1.0;
    emb.points.at(2, 0) = 2.0;
    emb.source_ids = {0, 1, 2};
    Clustering clustering;
    clustering.assignments = {0, 1, 1};
    clustering.centroids = MatD(2, 2);
    clustering.centroids.at(1, 0) = 1.5;
    emit_scatter_svg(emb, clustering, dir / "three.svg");
    const std::string svg = file_bytes(dir / "three.svg");
    CHECK(oracle::xml_well_formed(svg));

    size_t circles = 0, pos = 0;
    while ((pos = svg.find("<circle", pos)) != std::string::npos) {
        ++circles;
        pos += 7;
    }
    CHECK(circles == 3);
    std::set<std::string> fills;
    pos = 0;
    while ((pos = svg.find("fill=\"#", pos)) != std::string::npos) {
        fills.insert(svg.substr(pos + 6, 7));
        pos += 7;
    }
    CHECK(fills.size() == 2);
}

TEST_CASE("montage geometry follows the grid arithmetic exactly") {
    const MontageGeometry single = montage_geometry(1, 16, 16, 5);
    CHECK(single.cols == 1);
    CHECK(single.rows == 1);
    CHECK(single.width == 16);
    CHECK(single.height == 16 + single.label_h);

    const MontageGeometry grid = montage_geometry(10, 16, 16, 5);
    CHECK(grid.cols == 5);
    CHECK(grid.rows == 2);
    CHECK(grid.width == 5 * 16 + 4 * 2);
    CHECK(grid.height == 2 * (16 + grid.label_h) + 2);
}

TEST_CASE("emit_montage writes a PNG whose extents match the geometry") {
    const fs::path dir = fresh_dir("montage");
    Rng rng(300);
    std::vector<ImageTensor> tiles;
    std::vector<std::string> labels;
    for (int i = 0; i < 7; ++i) {
        tiles.push_back(oracle::random_image(12, 14, 3, rng, 0.0, 1.0));
        labels.push_back("T" + std::to_string(i));
    }
    emit_montage(tiles, labels, 3, dir / "grid.png");
    const ImageTensor img = read_png(dir / "grid.png");
    const MontageGeometry g = montage_geometry(7, 12, 14, 3);
    CHECK(img.h == g.height);
    CHECK(img.w == g.width);
    CHECK_THROWS_AS(emit_montage({}, {}, 3, dir / "none.png"), ConfigError);
}

TEST_CASE("generate, train, and actmax run end to end through the CLI") {
    const fs::path root = fresh_dir("e2e");
    const fs::path out = root / "runs";

    // generate
    const fs::path gen_cfg = write_config(root, R"([dataset]
preset = two_facet
images_per_class = 6
seed = 5
)");
    REQUIRE(cli::run({"generate", "--config", gen_cfg.string(), "--out", out.string()}) == 0);
    const fs::path gen_run = only_run_dir(out);
    CHECK(fs::exists(gen_run / "dataset" / "meta"));
    CHECK(fs::exists(gen_run / "dataset" / "facets.csv"));
    CHECK(fs::exists(gen_run / "manifest"));
    CHECK(fs::exists(gen_run / "config"));

    // train on the generated directory
    const fs::path out2 = root / "runs_train";
    const fs::path train_cfg_path = root / "train_config";
    std::ofstream(train_cfg_path) << "[dataset]\npath = " << (gen_run / "dataset").string()
                                  << "\n[train]\nepochs = 1\nbatch_size = 8\nseed = 3\n";
    REQUIRE(cli::run({"train", "--config", train_cfg_path.string(), "--out", out2.string()}) == 0);
    const fs::path train_run = only_run_dir(out2);
    CHECK(fs::exists(train_run / "weights.fnet"));
    CHECK(fs::exists(train_run / "metrics.csv"));
    const RunManifest tm = read_manifest(train_run / "manifest");
    CHECK(tm.subcommand == "train");

    // actmax against the trained weights
    const fs::path out3 = root / "runs_am";
    const fs::path am_cfg_path = root / "am_config";
    std::ofstream(am_cfg_path) << "[dataset]\npath = " << (gen_run / "dataset").string()
                               << "\n[actmax]\nnet = " << (train_run / "weights.fnet").string()
                               << "\nunit = fc_class:0\n[am]\niterations = 3\nseed = 9\n";
    REQUIRE(cli::run({"actmax", "--config", am_cfg_path.string(), "--out", out3.string()}) == 0);
    const fs::path am_run = only_run_dir(out3);
    CHECK(fs::exists(am_run / "final.flt1"));
    CHECK(fs::exists(am_run / "final.png"));
    CHECK(fs::exists(am_run / "trace.csv"));

    // every manifest artifact exists
    for (const auto& run : {gen_run, train_run, am_run}) {
        const RunManifest m = read_manifest(run / "manifest");
        for (const auto& a : m.artifacts) CHECK(fs::exists(run / a));
    }

    // nothing was written outside the run directories
    std::set<std::string> root_entries;
    for (const auto& e : fs::directory_iterator(root))
        root_entries.insert(e.path().filename().string());
    CHECK(root_entries ==
          std::set<std::string>{"config", "train_config", "am_config", "runs", "runs_train",
                                "runs_am"});
}

TEST_CASE("training twice gives identical weights and manifests except timings") {
    const fs::path root = fresh_dir("replay");
    const fs::path cfg_path = write_config(root, R"([dataset]
preset = two_facet
images_per_class = 5
seed = 6
[train]
epochs = 1
batch_size = 8
seed = 4
)");
    const fs::path out_a = root / "a";
    const fs::path out_b = root / "b";
    REQUIRE(cli::run({"train", "--config", cfg_path.string(), "--out", out_a.string()}) == 0);
    REQUIRE(cli::run({"train", "--config", cfg_path.string(), "--out", out_b.string()}) == 0);
    const fs::path run_a = only_run_dir(out_a);
    const fs::path run_b = only_run_dir(out_b);
    CHECK(file_bytes(run_a / "weights.fnet") == file_bytes(run_b / "weights.fnet"));
    CHECK(manifest_without_timings(run_a) == manifest_without_timings(run_b));
}

TEST_CASE("CLI maps error categories to exit codes") {
    const fs::path root = fresh_dir("errors");
    // missing config file -> config error
    CHECK(cli::run({"train", "--config", (root / "nope").string(), "--out",
                    (root / "r").string()}) == 2);
    // unknown key -> config error, message lists it
    const fs::path bad = write_config(root, "[dataset]\npreset = two_facet\nwhat = 1\n");
    CHECK(cli::run({"generate", "--config", bad.string(), "--out", (root / "r").string()}) == 2);
    // unparseable subcommand -> config error
    CHECK(cli::run({"explode"}) == 2);
    // corrupt weights -> io error (4)
    const fs::path weights = root / "corrupt.fnet";
    std::ofstream(weights) << "garbage";
    const fs::path am_cfg = root / "am_cfg";
    std::ofstream(am_cfg) << "[actmax]\nnet = " << weights.string()
                          << "\nunit = fc_class:0\n[am]\niterations = 1\n";
    CHECK(cli::run({"actmax", "--config", am_cfg.string(), "--out", (root / "r").string()}) == 4);
}

namespace {

// shared tiny trained run for the remaining subcommand tests
struct CliFixture {
    fs::path root, dataset_dir, weights;
};

const CliFixture& cli_fixture() {
    static const CliFixture fx = [] {
        CliFixture f;
        f.root = fresh_dir("subcommands");
        const fs::path gen_cfg = write_config(f.root, R"([dataset]
preset = default
images_per_class = 40
seed = 5
)");
        REQUIRE(cli::run({"generate", "--config", gen_cfg.string(), "--out",
                          (f.root / "gen").string()}) == 0);
        f.dataset_dir = only_run_dir(f.root / "gen") / "dataset";

        const fs::path train_cfg = f.root / "train_cfg";
        std::ofstream(train_cfg) << "[dataset]\npath = " << f.dataset_dir.string()
                                 << "\n[train]\nepochs = 2\nbatch_size = 16\nseed = 3\n";
        REQUIRE(cli::run({"train", "--config", train_cfg.string(), "--out",
                          (f.root / "train").string()}) == 0);
        f.weights = only_run_dir(f.root / "train") / "weights.fnet";
        return f;
    }();
    return fx;
}

}  // namespace

TEST_CASE("cmd_facets with k = 10 writes ten facet directories") {
    const CliFixture& fx = cli_fixture();
    const fs::path cfg = fx.root / "facets_cfg";
    std::ofstream(cfg) << "[dataset]\npath = " << fx.dataset_dir.string()
                       << "\n[facet]\nnet = " << fx.weights.string()
                       << "\nunit = fc_class:0\nsource = class:0\nk = 10\nm = 15\n"
                          "pca_dims = 20\ntsne_iters = 120\nseed = 7\n"
                          "[am]\niterations = 2\ntv_lambda = 2\ntv_inner_iters = 10\nseed = 1\n";
    const fs::path out = fx.root / "facets_out";
    REQUIRE(cli::run({"facets", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path run = only_run_dir(out);
    for (int i = 0; i < 10; ++i) {
        const fs::path fdir = run / ("facet_" + std::to_string(i));
        CHECK(fs::exists(fdir / "mean.png"));
        CHECK(fs::exists(fdir / "mean.flt1"));
        CHECK(fs::exists(fdir / "viz.png"));
        CHECK(fs::exists(fdir / "viz.flt1"));
        CHECK(fs::exists(fdir / "trace.csv"));
    }
    CHECK(fs::exists(run / "embedding.csv"));
    CHECK(fs::exists(run / "clusters.csv"));
    CHECK(fs::exists(run / "montage.png"));
    CHECK(fs::exists(run / "scatter.svg"));
    CHECK(oracle::xml_well_formed(file_bytes(run / "scatter.svg")));
    const RunManifest m = read_manifest(run / "manifest");
    CHECK(m.facet_rows.size() == 10);

    // embedding.csv covers every collected image exactly once
    std::ifstream ecsv(run / "embedding.csv");
    std::string line;
    std::getline(ecsv, line);  // header
    size_t rows = 0;
    while (std::getline(ecsv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 40);
}

TEST_CASE("cmd_center runs the five-phase schedule and tags trace phases") {
    const CliFixture& fx = cli_fixture();
    const fs::path cfg = fx.root / "center_cfg";
    std::ofstream(cfg) << "[dataset]\npath = " << fx.dataset_dir.string()
                       << "\n[center]\nnet = " << fx.weights.string()
                       << "\nunit = fc_class:1\n[schedule]\niterations = 2, 2, 2, 1, 1\n"
                          "tv_inner_iters = 10\nseed = 9\n";
    const fs::path out = fx.root / "center_out";
    REQUIRE(cli::run({"center", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path run = only_run_dir(out);
    CHECK(fs::exists(run / "final.flt1"));
    CHECK(fs::exists(run / "final.png"));
    std::ifstream trace(run / "trace.csv");
    std::string line;
    std::getline(trace, line);
    CHECK(line == "iteration,activation,phase");
    int last_phase = -1;
    size_t rows = 0;
    while (std::getline(trace, line)) {
        const size_t c2 = line.rfind(',');
        last_phase = std::stoi(line.substr(c2 + 1));
        ++rows;
    }
    CHECK(rows == 8);
    CHECK(last_phase == 4);
}

TEST_CASE("cmd_interpolate writes all runs plus seed and result strips") {
    const CliFixture& fx = cli_fixture();
    const fs::path cfg = fx.root / "interp_cfg";
    std::ofstream(cfg) << "[dataset]\npath = " << fx.dataset_dir.string()
                       << "\n[interpolate]\nnet = " << fx.weights.string()
                       << "\nunit = fc_class:0\nimg_a = id:0\nimg_b = id:1\nsteps = 8\n"
                          "[am]\niterations = 1\nseed = 2\n";
    const fs::path out = fx.root / "interp_out";
    REQUIRE(cli::run({"interpolate", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path run = only_run_dir(out);
    for (int i = 0; i < 10; ++i)
        CHECK(fs::exists(run / ("run_" + std::to_string(i)) / "final.flt1"));
    CHECK(!fs::exists(run / "run_10"));
    CHECK(fs::exists(run / "seeds.png"));
    CHECK(fs::exists(run / "results.png"));
}

TEST_CASE("cmd_compare emits one montage with a tile per variant") {
    const CliFixture& fx = cli_fixture();
    const fs::path cfg = fx.root / "compare_cfg";
    std::ofstream(cfg) << "[dataset]\npath = " << fx.dataset_dir.string()
                       << "\n[compare]\nnet = " << fx.weights.string()
                       << "\nunit = fc_class:2\nvariants = none, tv, jitter, blur_decay\n"
                          "[am]\niterations = 2\nseed = 4\n";
    const fs::path out = fx.root / "compare_out";
    REQUIRE(cli::run({"compare", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path run = only_run_dir(out);
    CHECK(fs::exists(run / "montage.png"));
    const ImageTensor montage = read_png(run / "montage.png");
    const MontageGeometry g = montage_geometry(4, 32, 32, 4);
    CHECK(montage.h == g.height);
    CHECK(montage.w == g.width);
    for (const char* name : {"none", "tv", "jitter", "blur_decay"})
        CHECK(fs::exists(run / (std::string("final_") + name + ".flt1")));
    CHECK(fs::exists(run / "variants.csv"));
}
