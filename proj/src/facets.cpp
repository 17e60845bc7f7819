#include "facet/facets.hpp"

#include <algorithm>
#include <cmath>

#include "facet/kernels.hpp"
#include "facet/rng.hpp"

namespace facet {

void FacetConfig::validate() const {
    if (k < 1) throw ConfigError("facet: k must be >= 1");
    if (m < 1) throw ConfigError("facet: m must be >= 1");
    if (top_fraction <= 0 || top_fraction > 1)
        throw ConfigError("facet: top_fraction must be in (0, 1]");
    if (pca_dims < 1) throw ConfigError("facet: pca_dims must be >= 1");
    if (tsne_iters < 1) throw ConfigError("facet: tsne_iters must be >= 1");
    if (std::holds_alternative<AMConfig>(am))
        std::get<AMConfig>(am).validate();
    else
        std::get<PhaseSchedule>(am).validate();
}

std::vector<int> collect_class_images(const LabeledDataset& ds, int class_id) {
    if (class_id < 0 || class_id >= ds.num_classes)
        throw DataError("unknown class " + std::to_string(class_id));
    std::vector<int> ids;
    for (size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] == class_id) ids.push_back(static_cast<int>(i));
    if (ids.empty()) throw DataError("class " + std::to_string(class_id) + " has no images");
    return ids;
}

std::vector<CollectedImage> lift_ids(const std::vector<int>& ids) {
    std::vector<CollectedImage> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(CollectedImage{id, 0.0f, std::nullopt, std::nullopt});
    return out;
}

int top_count(double top_fraction, size_t n) {
    if (top_fraction <= 0 || top_fraction > 1)
        throw ConfigError("top_fraction must be in (0, 1]");
    return static_cast<int>(std::ceil(top_fraction * static_cast<double>(n)));
}

namespace {

// input bounding box feeding output rows/cols [r0, r1] x [c0, c1] at layer li
struct Box {
    int r0, r1, c0, c1;
};

Box receptive_field(const Network& net, int li, Box box) {
    for (int i = li; i >= 0; --i) {
        const LayerSpec& spec = net.layers()[i];
        if (spec.kind == LayerKind::conv) {
            box.r0 = box.r0 * spec.stride - spec.pad;
            box.c0 = box.c0 * spec.stride - spec.pad;
            box.r1 = box.r1 * spec.stride - spec.pad + spec.kernel - 1;
            box.c1 = box.c1 * spec.stride - spec.pad + spec.kernel - 1;
        } else if (spec.kind == LayerKind::maxpool) {
            box.r0 = box.r0 * spec.pool_stride;
            box.c0 = box.c0 * spec.pool_stride;
            box.r1 = box.r1 * spec.pool_stride + spec.pool - 1;
            box.c1 = box.c1 * spec.pool_stride + spec.pool - 1;
        } else if (spec.kind == LayerKind::dense || spec.kind == LayerKind::softmax) {
            const Shape in = i == 0 ? net.input_shape()
                                    : net.output_shapes()[static_cast<size_t>(i) - 1];
            box = {0, in.dims[0] - 1, 0, in.dims[1] - 1};
        }
        // relu: identity
    }
    const Shape& in = net.input_shape();
    box.r0 = std::clamp(box.r0, 0, in.dims[0] - 1);
    box.r1 = std::clamp(box.r1, 0, in.dims[0] - 1);
    box.c0 = std::clamp(box.c0, 0, in.dims[1] - 1);
    box.c1 = std::clamp(box.c1, 0, in.dims[1] - 1);
    return box;
}

ImageTensor crop_box(const ImageTensor& img, const Box& b) {
    ImageTensor out(b.r1 - b.r0 + 1, b.c1 - b.c0 + 1, img.c);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(b.r0 + y, b.c0 + x, ch);
    return out;
}

}  // namespace

std::vector<CollectedImage> collect_top_activating(const LabeledDataset& ds, const Network& net,
                                                   const UnitSelector& sel, double top_fraction) {
    if (ds.size() == 0) throw DataError("collect_top_activating: empty dataset");
    net.validate_selector(sel);
    const int li = net.require_layer(sel.layer);
    const Shape& out_shape = net.output_shapes()[li];
    const bool spatial = out_shape.dims[0] > 1 || out_shape.dims[1] > 1;

    std::vector<CollectedImage> all(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        const ActivationTrace trace = forward(net, ds.images[i]);
        const ImageTensor& out = trace.outputs[li];
        CollectedImage entry;
        entry.id = static_cast<int>(i);
        if (spatial && !sel.location) {
            // maximal column for this channel
            int br = 0, bc = 0;
            float best = out.at(0, 0, sel.unit);
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    if (out.at(y, x, sel.unit) > best) {
                        best = out.at(y, x, sel.unit);
                        br = y;
                        bc = x;
                    }
            entry.activation = best;
            entry.location = {br, bc};
            entry.patch = crop_box(ds.images[i], receptive_field(net, li, {br, br, bc, bc}));
        } else {
            entry.activation = activation_from_trace(net, trace, sel);
            if (sel.location) {
                entry.location = sel.location;
                entry.patch = crop_box(
                    ds.images[i],
                    receptive_field(net, li,
                                    {sel.location->first, sel.location->first,
                                     sel.location->second, sel.location->second}));
            }
        }
        all[i] = std::move(entry);
    }
    std::stable_sort(all.begin(), all.end(), [](const CollectedImage& a, const CollectedImage& b) {
        return a.activation > b.activation;
    });
    all.resize(static_cast<size_t>(top_count(top_fraction, ds.size())));
    return all;
}

ImageTensor mean_image(const LabeledDataset& ds, const std::vector<int>& ids) {
    if (ids.empty()) throw DataError("mean_image: empty id list");
    const ImageTensor& first = ds.images[ids[0]];
    std::vector<double> acc(first.size(), 0.0);
    for (int id : ids) {
        const ImageTensor& img = ds.images[id];
        if (!img.same_shape(first)) throw ShapeError("mean_image: mixed image shapes");
        for (size_t i = 0; i < img.size(); ++i) acc[i] += img.data[i];
    }
    ImageTensor mean(first.h, first.w, first.c);
    for (size_t i = 0; i < acc.size(); ++i)
        mean.data[i] = static_cast<float>(acc[i] / static_cast<double>(ids.size()));
    return mean;
}

FacetSet run_mfv(const Network& net, const UnitSelector& sel, const std::vector<CollectedImage>& U,
                 const LabeledDataset& ds, const FacetConfig& cfg) {
    cfg.validate();
    net.validate_selector(sel);
    const int n = static_cast<int>(U.size());
    if (n < cfg.k)
        throw DataError("run_mfv: |U| = " + std::to_string(n) + " < k = " + std::to_string(cfg.k));

    // step 1: codes
    const int code_li = net.require_layer(cfg.code_layer);
    const Shape& code_shape = net.output_shapes()[code_li];
    const bool code_spatial = code_shape.dims[0] > 1 || code_shape.dims[1] > 1;
    MatD codes;
    for (int i = 0; i < n; ++i) {
        std::optional<std::pair<int, int>> loc;
        if (code_spatial) {
            if (!U[i].location)
                throw ConfigError("run_mfv: conv code layer '" + cfg.code_layer +
                                  "' needs per-image locations (collect with a conv selector)");
            loc = U[i].location;
        }
        const auto code = layer_code(net, ds.images[U[i].id], cfg.code_layer, loc);
        if (i == 0) codes = MatD(n, static_cast<int>(code.size()));
        for (size_t j = 0; j < code.size(); ++j) codes.at(i, static_cast<int>(j)) = code[j];
    }

    // step 2: PCA
    const int dims = std::min({cfg.pca_dims, codes.cols, n - 1});
    const PCAModel pca = pca_fit(codes, dims);
    const MatD reduced = pca_transform(pca, codes);

    // step 3: t-SNE
    const Rng root(cfg.rng_seed);
    const double max_perp = (n - 1) / 3.0;
    const double perplexity = std::min(cfg.tsne_perplexity, max_perp - 1e-6);
    if (perplexity <= 1.0)
        throw DataError("run_mfv: too few images for a valid t-SNE perplexity");
    Embedding2D emb = tsne(reduced, perplexity, cfg.tsne_iters, root.derive(1).next_u64());
    for (int i = 0; i < n; ++i) emb.source_ids[i] = U[i].id;

    // step 4: k-means
    const Clustering clustering = kmeans(emb.points, cfg.k, root.derive(2).next_u64());

    FacetSet fs;
    fs.unit = sel;
    fs.k = cfg.k;
    fs.assignments = clustering.assignments;
    fs.clusters.resize(cfg.k);

    // steps 5-6 per cluster: membership and mean image first, then the AM
    // runs, which are independent and may execute concurrently
    for (int c = 0; c < cfg.k; ++c) {
        FacetCluster& cluster = fs.clusters[c];
        cluster.centroid = {clustering.centroids.at(c, 0), clustering.centroids.at(c, 1)};
        for (int i = 0; i < n; ++i)
            if (clustering.assignments[i] == c) cluster.member_ids.push_back(U[i].id);
        cluster.mean_image = mean_image(ds, nearest_members(clustering, emb, c, cfg.m));
    }

    std::exception_ptr err = nullptr;
#pragma omp parallel for num_threads(std::max(cfg.jobs, 1)) schedule(dynamic) if (cfg.jobs > 1)
    for (int c = 0; c < cfg.k; ++c) {
        try {
            FacetCluster& cluster = fs.clusters[c];
            const uint64_t am_seed = root.derive(10 + static_cast<uint64_t>(c)).next_u64();
            if (std::holds_alternative<AMConfig>(cfg.am)) {
                AMConfig am = std::get<AMConfig>(cfg.am);
                am.seed_image = cluster.mean_image;
                am.rng_seed = am_seed;
                cluster.visualization = maximize(net, sel, am);
            } else {
                PhaseSchedule sched = std::get<PhaseSchedule>(cfg.am);
                sched.rng_seed = am_seed;
                cluster.visualization = center_biased_maximize(net, sel, cluster.mean_image, sched);
            }
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    fs.embedding = std::move(emb);
    return fs;
}

std::vector<AMResult> interpolation_experiment(const Network& net, const UnitSelector& sel,
                                               const ImageTensor& img_a, const ImageTensor& img_b,
                                               int steps, const AMConfig& am_cfg, int jobs) {
    if (!img_a.same_shape(img_b))
        throw ShapeError("interpolation_experiment: endpoint shapes differ");
    if (steps < 2) throw ConfigError("interpolation_experiment: steps must be >= 2");
    am_cfg.validate();
    const int n_runs = steps + 2;
    std::vector<AMResult> results(n_runs);
    std::exception_ptr err = nullptr;
#pragma omp parallel for num_threads(std::max(jobs, 1)) schedule(dynamic) if (jobs > 1)
    for (int i = 0; i < n_runs; ++i) {
        try {
            const double t = static_cast<double>(i) / (steps + 1);
            AMConfig cfg = am_cfg;
            cfg.seed_image = lerp_images(img_a, img_b, t);
            results[i] = maximize(net, sel, cfg);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return results;
}

std::vector<std::pair<int, float>> classify_visualization(const Network& net,
                                                          const ImageTensor& img) {
    const ActivationTrace trace = forward(net, img);
    const ImageTensor& probs = trace.outputs.back();
    std::vector<std::pair<int, float>> ranked(probs.c);
    for (int i = 0; i < probs.c; ++i) ranked[i] = {i, probs.data[i]};
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

}  // namespace facet
