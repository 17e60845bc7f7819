#pragma once

#include <variant>

#include "facet/actmax.hpp"
#include "facet/embedding.hpp"

namespace facet {

struct FacetConfig {
    int k = 10;
    int m = 15;
    double top_fraction = 0.02;
    int pca_dims = 50;  // capped at the code width and N-1
    std::string code_layer = "fc_code";
    double tsne_perplexity = 30.0;  // clamped below (N-1)/3 for small sets
    int tsne_iters = 500;
    uint64_t rng_seed = 0;
    int jobs = 1;  // concurrent per-facet AM runs; results independent of jobs
    std::variant<AMConfig, PhaseSchedule> am;

    void validate() const;
};

struct FacetCluster {
    std::vector<int> member_ids;  // dataset image ids
    std::array<double, 2> centroid;
    ImageTensor mean_image;
    AMResult visualization;
};

struct FacetSet {
    UnitSelector unit;
    int k = 0;
    std::vector<FacetCluster> clusters;
    Embedding2D embedding;            // source_ids are dataset image ids
    std::vector<int> assignments;     // cluster per embedding row
};

// One collected image: its id, the ranking activation, and for conv
// selectors the maximal column location plus the receptive-field patch.
struct CollectedImage {
    int id = 0;
    float activation = 0.0f;
    std::optional<std::pair<int, int>> location;
    std::optional<ImageTensor> patch;
};

// All images of a class, in stable dataset order.
std::vector<int> collect_class_images(const LabeledDataset& ds, int class_id);

std::vector<CollectedImage> lift_ids(const std::vector<int>& ids);

// ceil(top_fraction * N)
int top_count(double top_fraction, size_t n);

// The top-activating images for the unit, descending, ties by dataset order.
// Conv selectors scan all columns and record the maximal one.
std::vector<CollectedImage> collect_top_activating(const LabeledDataset& ds, const Network& net,
                                                   const UnitSelector& sel, double top_fraction);

ImageTensor mean_image(const LabeledDataset& ds, const std::vector<int>& ids);

// code collection -> PCA -> t-SNE -> k-means -> per-cluster mean image ->
// activation maximization seeded with each mean image.
FacetSet run_mfv(const Network& net, const UnitSelector& sel, const std::vector<CollectedImage>& U,
                 const LabeledDataset& ds, const FacetConfig& cfg);

// Seeds at t = 0, i/(steps+1) for i = 1..steps, and 1; one run per seed,
// ordered by t, all runs sharing the config rng seed.
std::vector<AMResult> interpolation_experiment(const Network& net, const UnitSelector& sel,
                                               const ImageTensor& img_a, const ImageTensor& img_b,
                                               int steps, const AMConfig& am_cfg, int jobs = 1);

// classes sorted by descending softmax score
std::vector<std::pair<int, float>> classify_visualization(const Network& net,
                                                          const ImageTensor& img);

}  // namespace facet
