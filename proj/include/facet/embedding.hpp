#pragma once

#include <cstdint>
#include <vector>

#include "facet/errors.hpp"

namespace facet {

struct MatD {
    int rows = 0, cols = 0;
    std::vector<double> data;

    MatD() = default;
    MatD(int r, int c, double value = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, value) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

// rows of `components` are the principal directions, orthonormal, by
// descending variance; sign convention: the largest-magnitude coordinate of
// each component is positive.
struct PCAModel {
    std::vector<double> mean;
    MatD components;
    std::vector<double> explained_variance;  // sample variance, 1/(N-1)
};

struct Embedding2D {
    MatD points;  // N x 2
    std::vector<int> source_ids;
};

struct Clustering {
    std::vector<int> assignments;
    MatD centroids;  // k x 2
};

PCAModel pca_fit(const MatD& codes, int out_dims);
MatD pca_transform(const PCAModel& model, const MatD& codes);
MatD pca_inverse_transform(const PCAModel& model, const MatD& low);

// Exact t-SNE internals, exposed so tests can probe each stage.
// Row-stochastic conditional probabilities with per-row Gaussian bandwidths
// binary-searched to match the target perplexity.
MatD tsne_conditional(const MatD& points, double perplexity);
// symmetrized joint distribution (P + P^T) / 2N
MatD tsne_joint(const MatD& conditional);
// KL divergence and its exact gradient for a 2-D embedding Y under joint P
std::pair<double, MatD> tsne_kl_grad(const MatD& P, const MatD& Y);

// Exact O(N^2) t-SNE: early exaggeration x4 for the first 50 iterations,
// momentum 0.5 switching to 0.8 after iteration 250, learning rate 200 with
// adaptive per-element gains. Deterministic from rng_seed.
Embedding2D tsne(const MatD& points, double perplexity, int iters, uint64_t rng_seed);

// k-means++ initialization, Lloyd iterations to an assignment fixpoint or 300
// rounds; empty clusters are re-seeded to the farthest point. Deterministic
// from rng_seed.
Clustering kmeans(const MatD& points, int k, uint64_t rng_seed,
                  std::vector<double>* inertia_history = nullptr);

// The m members of the cluster closest to its centroid in the 2-D embedding;
// ties broken by source id.
std::vector<int> nearest_members(const Clustering& clustering, const Embedding2D& embedding,
                                 int cluster_id, int m);

}  // namespace facet
