#include "facet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "facet/png_io.hpp"
#include "facet/rng.hpp"

namespace facet {

const char* shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::square: return "square";
        case ShapeKind::circle: return "circle";
        case ShapeKind::triangle: return "triangle";
        default: return "cross";
    }
}

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "square") return ShapeKind::square;
    if (name == "circle") return ShapeKind::circle;
    if (name == "triangle") return ShapeKind::triangle;
    if (name == "cross") return ShapeKind::cross;
    throw ConfigError("unknown shape kind '" + name + "'");
}

void ShapesSpec::validate() const {
    if (classes.size() < 2) throw ConfigError("shapes spec needs >= 2 classes");
    if (images_per_class < 1) throw ConfigError("images_per_class must be >= 1");
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
    for (size_t ci = 0; ci < classes.size(); ++ci) {
        const auto& cls = classes[ci];
        if (cls.facets.empty())
            throw ConfigError("class " + std::to_string(ci) + " has no facets");
        for (size_t a = 0; a < cls.facets.size(); ++a) {
            const auto& f = cls.facets[a];
            if (f.object_count < 1 || f.object_count > 3)
                throw ConfigError("facet object_count must be 1..3");
            for (size_t b = a + 1; b < cls.facets.size(); ++b)
                if (cls.facets[a].fill == cls.facets[b].fill)
                    throw ConfigError("class " + std::to_string(ci) +
                                      ": facet fill colors must be distinct");
        }
    }
}

ImageTensor LabeledDataset::denormalize(const ImageTensor& img) const {
    ImageTensor out = img;
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < out.c; ++ch) out.at(y, x, ch) += mean_intensity[ch];
    return out;
}

ImageTensor LabeledDataset::denormalize(int id) const { return denormalize(images[id]); }

namespace {

// signed coverage test for one subsample point, in pixel coordinates
bool inside_shape(ShapeKind kind, double dy, double dx, double half) {
    switch (kind) {
        case ShapeKind::square:
            return std::max(std::abs(dy), std::abs(dx)) <= half;
        case ShapeKind::circle:
            return dy * dy + dx * dx <= half * half;
        case ShapeKind::triangle: {
            // upward triangle inscribed in the half-size box
            if (dy < -half || dy > half) return false;
            const double t = (dy + half) / (2.0 * half);  // 0 at apex, 1 at base
            return std::abs(dx) <= t * half;
        }
        case ShapeKind::cross: {
            const double arm = half / 3.0;
            return (std::abs(dy) <= arm && std::abs(dx) <= half) ||
                   (std::abs(dx) <= arm && std::abs(dy) <= half);
        }
    }
    return false;
}

ImageTensor render_shape_image(ShapeKind kind, const FacetStyle& style, int size, Rng& rng) {
    ImageTensor img(size, size, 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = style.background[ch];

    // canonical centers for 1..3 objects, then per-object jitter
    std::vector<std::pair<double, double>> centers;
    const double mid = size / 2.0;
    const double off = size * 0.22;
    if (style.object_count == 1) {
        centers = {{mid, mid}};
    } else if (style.object_count == 2) {
        centers = {{mid - off, mid - off}, {mid + off, mid + off}};
    } else {
        centers = {{mid - off, mid}, {mid + off, mid - off}, {mid + off, mid + off}};
    }
    const double base_half = size * (style.object_count == 1 ? 0.28 : 0.16);

    struct Placed {
        double cy, cx, half;
    };
    std::vector<Placed> objs;
    for (auto [cy, cx] : centers) {
        Placed p;
        p.cy = cy + rng.normal() * style.position_jitter;
        p.cx = cx + rng.normal() * style.position_jitter;
        p.half = base_half * (1.0 + 0.15 * (2.0 * rng.uniform() - 1.0));
        objs.push_back(p);
    }

    // 4x4 supersampled coverage
    constexpr int ss = 4;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            int hits = 0;
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    const double py = y + (sy + 0.5) / ss;
                    const double px = x + (sx + 0.5) / ss;
                    for (const auto& o : objs)
                        if (inside_shape(kind, py - o.cy, px - o.cx, o.half)) {
                            ++hits;
                            break;
                        }
                }
            if (hits == 0) continue;
            const float cov = static_cast<float>(hits) / (ss * ss);
            for (int ch = 0; ch < 3; ++ch)
                img.at(y, x, ch) = (1.0f - cov) * style.background[ch] + cov * style.fill[ch];
        }
    return img;
}

}  // namespace

LabeledDataset generate_shapes(const ShapesSpec& spec) {
    spec.validate();
    LabeledDataset ds;
    ds.num_classes = static_cast<int>(spec.classes.size());
    const Rng root(spec.rng_seed);

    int global_index = 0;
    for (size_t ci = 0; ci < spec.classes.size(); ++ci) {
        const ClassSpec& cls = spec.classes[ci];
        for (int i = 0; i < spec.images_per_class; ++i, ++global_index) {
            Rng rng = root.derive(static_cast<uint64_t>(global_index));
            const int facet = static_cast<int>(rng.uniform_int(cls.facets.size()));
            ds.images.push_back(
                render_shape_image(cls.shape, cls.facets[facet], spec.image_size, rng));
            ds.labels.push_back(static_cast<int>(ci));
            ds.facet_labels.push_back(facet);
        }
    }

    // per-channel mean over raw pixels, then mean-subtract
    double sums[3] = {0, 0, 0};
    int64_t count = 0;
    for (const auto& img : ds.images) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < 3; ++ch) sums[ch] += img.at(y, x, ch);
        count += static_cast<int64_t>(img.h) * img.w;
    }
    for (int ch = 0; ch < 3; ++ch)
        ds.mean_intensity[ch] = static_cast<float>(sums[ch] / static_cast<double>(count));
    for (auto& img : ds.images)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) -= ds.mean_intensity[ch];
    return ds;
}

void export_dataset(const LabeledDataset& ds, const std::filesystem::path& dir, int image_size,
                    uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<int> per_class_counter(ds.num_classes, 0);
    std::ofstream facets_csv(dir / "facets.csv");
    facets_csv << "id,class,facet\n";
    for (size_t i = 0; i < ds.size(); ++i) {
        const int cls = ds.labels[i];
        const fs::path cdir = dir / ("class_" + std::to_string(cls));
        fs::create_directories(cdir);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.png", per_class_counter[cls]++);
        write_png(cdir / name, ds.denormalize(static_cast<int>(i)));
        facets_csv << i << ',' << cls << ',' << (ds.facet_labels.empty() ? 0 : ds.facet_labels[i])
                   << '\n';
    }
    std::ofstream meta(dir / "meta");
    meta << "size = " << image_size << "\n";
    meta << "seed = " << seed << "\n";
    meta << "mean_r = " << ds.mean_intensity[0] << "\n";
    meta << "mean_g = " << ds.mean_intensity[1] << "\n";
    meta << "mean_b = " << ds.mean_intensity[2] << "\n";
}

LabeledDataset load_directory(const std::filesystem::path& path, bool class_subdirs) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw DataError("dataset directory " + path.string() + " does not exist");

    LabeledDataset ds;
    std::vector<std::pair<int, fs::path>> files;  // (class, file)
    if (class_subdirs) {
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_directory()) dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
        for (size_t ci = 0; ci < dirs.size(); ++ci) {
            std::vector<fs::path> imgs;
            for (const auto& e : fs::directory_iterator(dirs[ci]))
                if (e.is_regular_file()) imgs.push_back(e.path());
            std::sort(imgs.begin(), imgs.end());
            for (const auto& p : imgs) files.emplace_back(static_cast<int>(ci), p);
        }
        ds.num_classes = static_cast<int>(dirs.size());
    } else {
        std::vector<fs::path> imgs;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file()) imgs.push_back(e.path());
        std::sort(imgs.begin(), imgs.end());
        for (const auto& p : imgs) files.emplace_back(0, p);
        ds.num_classes = 1;
    }
    if (files.empty()) throw DataError("dataset directory " + path.string() + " holds no images");

    for (const auto& [cls, file] : files) {
        ds.images.push_back(read_png(file));  // throws DataError naming the file
        ds.labels.push_back(cls);
    }

    double sums[3] = {0, 0, 0};
    int64_t count = 0;
    for (const auto& img : ds.images) {
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < 3; ++ch) sums[ch] += img.at(y, x, ch);
        count += static_cast<int64_t>(img.h) * img.w;
    }
    for (int ch = 0; ch < 3; ++ch)
        ds.mean_intensity[ch] = static_cast<float>(sums[ch] / static_cast<double>(count));
    for (auto& img : ds.images)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) -= ds.mean_intensity[ch];

    // planted facet labels, when the exporter wrote them
    const fs::path facets_file = path / "facets.csv";
    if (fs::exists(facets_file)) {
        std::ifstream f(facets_file);
        std::string line;
        std::getline(f, line);  // header
        std::vector<int> facet_labels(ds.size(), 0);
        size_t rows = 0;
        while (std::getline(f, line)) {
            std::istringstream ss(line);
            std::string id_s, class_s, facet_s;
            if (std::getline(ss, id_s, ',') && std::getline(ss, class_s, ',') &&
                std::getline(ss, facet_s)) {
                const size_t id = std::stoul(id_s);
                if (id < facet_labels.size()) {
                    facet_labels[id] = std::stoi(facet_s);
                    ++rows;
                }
            }
        }
        if (rows == ds.size()) ds.facet_labels = std::move(facet_labels);
    }
    return ds;
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           double test_fraction) {
    if (test_fraction <= 0 || test_fraction >= 1)
        throw ConfigError("test_fraction must be in (0,1)");
    const int k = std::max(2, static_cast<int>(std::llround(1.0 / test_fraction)));
    LabeledDataset train_set, test_set;
    train_set.num_classes = test_set.num_classes = ds.num_classes;
    train_set.mean_intensity = test_set.mean_intensity = ds.mean_intensity;
    std::vector<int> per_class(ds.num_classes, 0);
    for (size_t i = 0; i < ds.size(); ++i) {
        const int idx_in_class = per_class[ds.labels[i]]++;
        LabeledDataset& dst = (idx_in_class % k == 0) ? test_set : train_set;
        dst.images.push_back(ds.images[i]);
        dst.labels.push_back(ds.labels[i]);
        if (!ds.facet_labels.empty()) dst.facet_labels.push_back(ds.facet_labels[i]);
    }
    return {std::move(train_set), std::move(test_set)};
}

ShapesSpec default_shapes_spec() {
    auto style = [](float r, float g, float b, float br, float bg, float bb, int count) {
        FacetStyle f;
        f.fill = {r, g, b};
        f.background = {br, bg, bb};
        f.object_count = count;
        return f;
    };
    ShapesSpec spec;
    spec.images_per_class = 150;
    spec.image_size = 32;
    spec.rng_seed = 7;
    spec.classes = {
        {ShapeKind::square,
         {style(0.9f, 0.15f, 0.15f, 0.08f, 0.08f, 0.10f, 1),
          style(0.15f, 0.85f, 0.20f, 0.08f, 0.08f, 0.10f, 1),
          style(0.25f, 0.35f, 0.95f, 0.75f, 0.75f, 0.70f, 2)}},
        {ShapeKind::circle,
         {style(0.95f, 0.85f, 0.15f, 0.08f, 0.08f, 0.10f, 1),
          style(0.90f, 0.20f, 0.85f, 0.08f, 0.08f, 0.10f, 1),
          style(0.20f, 0.85f, 0.90f, 0.75f, 0.75f, 0.70f, 3)}},
        {ShapeKind::triangle,
         {style(0.95f, 0.55f, 0.10f, 0.08f, 0.08f, 0.10f, 1),
          style(0.10f, 0.60f, 0.55f, 0.08f, 0.08f, 0.10f, 1),
          style(0.95f, 0.95f, 0.95f, 0.40f, 0.40f, 0.45f, 2)}},
        {ShapeKind::cross,
         {style(0.95f, 0.45f, 0.65f, 0.08f, 0.08f, 0.10f, 1),
          style(0.55f, 0.90f, 0.15f, 0.08f, 0.08f, 0.10f, 1),
          style(0.35f, 0.65f, 0.95f, 0.75f, 0.75f, 0.70f, 3)}},
    };
    return spec;
}

ShapesSpec two_facet_spec() {
    auto style = [](float r, float g, float b, int count) {
        FacetStyle f;
        f.fill = {r, g, b};
        f.background = {0.08f, 0.08f, 0.10f};
        f.object_count = count;
        return f;
    };
    // The distractor fill is neutral so no single channel separates the
    // classes; distinguishing red/green squares from gray circles needs
    // color-opponent features, which keeps the class unit reachable through
    // per-facet pathways.
    ShapesSpec spec;
    spec.images_per_class = 150;
    spec.image_size = 32;
    spec.rng_seed = 11;
    spec.classes = {
        {ShapeKind::square, {style(0.92f, 0.12f, 0.12f, 1), style(0.12f, 0.88f, 0.15f, 1)}},
        {ShapeKind::circle, {style(0.60f, 0.60f, 0.60f, 1)}},
    };
    return spec;
}

}  // namespace facet
