#include "facet/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "facet/rng.hpp"

namespace facet {

namespace {

// cyclic Jacobi eigensolver for a symmetric matrix; A is destroyed.
// Returns eigenvalues and the matrix whose COLUMNS are eigenvectors.
void jacobi_eigen(MatD& a, std::vector<double>& eigvals, MatD& eigvecs) {
    const int n = a.rows;
    eigvecs = MatD(n, n);
    for (int i = 0; i < n; ++i) eigvecs.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-24 * n * n) break;

        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a.at(i, p), aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a.at(p, i), aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = eigvecs.at(i, p), viq = eigvecs.at(i, q);
                    eigvecs.at(i, p) = c * vip - s * viq;
                    eigvecs.at(i, q) = s * vip + c * viq;
                }
            }
    }
    eigvals.resize(n);
    for (int i = 0; i < n; ++i) eigvals[i] = a.at(i, i);
}

}  // namespace

PCAModel pca_fit(const MatD& codes, int out_dims) {
    const int n = codes.rows, d = codes.cols;
    if (n < 2) throw DataError("pca_fit: need at least 2 samples");
    if (out_dims < 1 || out_dims > std::min(n - 1, d))
        throw ConfigError("pca_fit: out_dims " + std::to_string(out_dims) +
                          " exceeds min(N-1, D) = " + std::to_string(std::min(n - 1, d)));

    PCAModel model;
    model.mean.assign(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) model.mean[j] += codes.at(i, j);
    for (auto& v : model.mean) v /= n;

    MatD cov(d, d);
#pragma omp parallel for schedule(static)
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += (codes.at(i, a) - model.mean[a]) * (codes.at(i, b) - model.mean[b]);
            cov.at(a, b) = cov.at(b, a) = acc / (n - 1);
        }

    std::vector<double> eigvals;
    MatD eigvecs;
    jacobi_eigen(cov, eigvals, eigvecs);

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return eigvals[a] > eigvals[b]; });

    model.components = MatD(out_dims, d);
    model.explained_variance.resize(out_dims);
    for (int r = 0; r < out_dims; ++r) {
        const int src = order[r];
        model.explained_variance[r] = std::max(eigvals[src], 0.0);
        int arg = 0;
        for (int j = 1; j < d; ++j)
            if (std::abs(eigvecs.at(j, src)) > std::abs(eigvecs.at(arg, src))) arg = j;
        const double sign = eigvecs.at(arg, src) < 0 ? -1.0 : 1.0;
        for (int j = 0; j < d; ++j) model.components.at(r, j) = sign * eigvecs.at(j, src);
    }
    return model;
}

MatD pca_transform(const PCAModel& model, const MatD& codes) {
    const int d = static_cast<int>(model.mean.size());
    if (codes.cols != d)
        throw ShapeError("pca_transform: codes have " + std::to_string(codes.cols) +
                         " columns, model expects " + std::to_string(d));
    const int k = model.components.rows;
    MatD out(codes.rows, k);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < codes.rows; ++i)
        for (int r = 0; r < k; ++r) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j)
                acc += (codes.at(i, j) - model.mean[j]) * model.components.at(r, j);
            out.at(i, r) = acc;
        }
    return out;
}

MatD pca_inverse_transform(const PCAModel& model, const MatD& low) {
    const int d = static_cast<int>(model.mean.size());
    if (low.cols != model.components.rows)
        throw ShapeError("pca_inverse_transform: dimension mismatch");
    MatD out(low.rows, d);
    for (int i = 0; i < low.rows; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = model.mean[j];
            for (int r = 0; r < low.cols; ++r) acc += low.at(i, r) * model.components.at(r, j);
            out.at(i, j) = acc;
        }
    return out;
}

// ---------------------------------------------------------------------------
// t-SNE

namespace {

MatD pairwise_sq_dists(const MatD& x) {
    const int n = x.rows;
    MatD d2(n, n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < x.cols; ++k) {
                const double diff = x.at(i, k) - x.at(j, k);
                acc += diff * diff;
            }
            d2.at(i, j) = acc;
        }
    return d2;
}

}  // namespace

MatD tsne_conditional(const MatD& points, double perplexity) {
    const int n = points.rows;
    if (n < 5) throw DataError("tsne: need at least 5 points");
    if (perplexity <= 1.0 || perplexity >= (n - 1) / 3.0)
        throw ConfigError("tsne: perplexity must satisfy 1 < perplexity < (N-1)/3");

    const MatD d2 = pairwise_sq_dists(points);
    double max_d2 = 0.0;
    for (double v : d2.data) max_d2 = std::max(max_d2, v);
    if (max_d2 == 0.0)
        throw DataError("tsne: all points are identical, conditional distribution is degenerate");

    MatD P(n, n);
    const double target_h = std::log(perplexity);
    std::vector<char> failed(n, 0);  // exceptions cannot leave the parallel region
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        std::vector<double> row(n, 0.0);
        double h = 0.0;
        for (int it = 0; it < 200; ++it) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * d2.at(i, j));
                sum += row[j];
            }
            // H = log(sum) + beta * E[d]
            double ed = 0.0;
            for (int j = 0; j < n; ++j) ed += row[j] * d2.at(i, j);
            h = std::log(sum) + beta * ed / sum;
            for (int j = 0; j < n; ++j) row[j] /= sum;
            const double perp = std::exp(h);
            if (std::abs(perp - perplexity) < 1e-4) break;
            if (h > target_h) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2.0;
            }
        }
        if (std::abs(std::exp(h) - perplexity) > 1e-3) failed[i] = 1;
        for (int j = 0; j < n; ++j) P.at(i, j) = row[j];
    }
    for (int i = 0; i < n; ++i)
        if (failed[i])
            throw DataError("tsne: row " + std::to_string(i) +
                            " cannot reach the target perplexity (degenerate distances)");
    return P;
}

MatD tsne_joint(const MatD& conditional) {
    const int n = conditional.rows;
    MatD P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            P.at(i, j) = (conditional.at(i, j) + conditional.at(j, i)) / (2.0 * n);
    return P;
}

std::pair<double, MatD> tsne_kl_grad(const MatD& P, const MatD& Y) {
    const int n = P.rows;
    MatD qnum(n, n);
    std::vector<double> row_sums(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dy0 = Y.at(i, 0) - Y.at(j, 0);
            const double dy1 = Y.at(i, 1) - Y.at(j, 1);
            qnum.at(i, j) = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
            acc += qnum.at(i, j);
        }
        row_sums[i] = acc;
    }
    double z = 0.0;
    for (double v : row_sums) z += v;

    MatD grad(n, 2);
    std::vector<double> costs(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double g0 = 0.0, g1 = 0.0, cost = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = std::max(qnum.at(i, j) / z, 1e-12);
            const double mult = 4.0 * (P.at(i, j) - q) * qnum.at(i, j);
            g0 += mult * (Y.at(i, 0) - Y.at(j, 0));
            g1 += mult * (Y.at(i, 1) - Y.at(j, 1));
            if (P.at(i, j) > 0) cost += P.at(i, j) * std::log(std::max(P.at(i, j), 1e-12) / q);
        }
        grad.at(i, 0) = g0;
        grad.at(i, 1) = g1;
        costs[i] = cost;
    }
    double cost = 0.0;
    for (double v : costs) cost += v;
    return {cost, std::move(grad)};
}

Embedding2D tsne(const MatD& points, double perplexity, int iters, uint64_t rng_seed) {
    const int n = points.rows;
    MatD P = tsne_joint(tsne_conditional(points, perplexity));

    constexpr double kExaggeration = 4.0;
    constexpr int kExaggerationIters = 50;
    constexpr int kMomentumSwitch = 250;
    constexpr double kEta = 200.0;
    for (auto& v : P.data) v *= kExaggeration;

    Rng rng(rng_seed);
    MatD y(n, 2);
    for (auto& v : y.data) v = rng.normal() * 1e-4;

    MatD vel(n, 2), gains(n, 2, 1.0);
    for (int iter = 0; iter < iters; ++iter) {
        if (iter == kExaggerationIters)
            for (auto& v : P.data) v /= kExaggeration;
        const double momentum = iter < kMomentumSwitch ? 0.5 : 0.8;
        auto [cost, grad] = tsne_kl_grad(P, y);
        (void)cost;
        for (size_t i = 0; i < y.data.size(); ++i) {
            const bool same_sign = (grad.data[i] > 0) == (vel.data[i] > 0);
            gains.data[i] = std::max(0.01, same_sign ? gains.data[i] * 0.8 : gains.data[i] + 0.2);
            vel.data[i] = momentum * vel.data[i] - kEta * gains.data[i] * grad.data[i];
            y.data[i] += vel.data[i];
        }
        double m0 = 0.0, m1 = 0.0;
        for (int i = 0; i < n; ++i) {
            m0 += y.at(i, 0);
            m1 += y.at(i, 1);
        }
        m0 /= n;
        m1 /= n;
        for (int i = 0; i < n; ++i) {
            y.at(i, 0) -= m0;
            y.at(i, 1) -= m1;
        }
    }
    if (iters == kExaggerationIters)
        for (auto& v : P.data) v /= kExaggeration;

    Embedding2D emb;
    emb.points = std::move(y);
    emb.source_ids.resize(n);
    std::iota(emb.source_ids.begin(), emb.source_ids.end(), 0);
    return emb;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double sq_dist2(const MatD& a, int i, const MatD& b, int j) {
    const double d0 = a.at(i, 0) - b.at(j, 0);
    const double d1 = a.at(i, 1) - b.at(j, 1);
    return d0 * d0 + d1 * d1;
}

}  // namespace

Clustering kmeans(const MatD& points, int k, uint64_t rng_seed,
                  std::vector<double>* inertia_history) {
    const int n = points.rows;
    if (points.cols != 2) throw ShapeError("kmeans: points must be N x 2");
    if (k < 1 || k > n)
        throw ConfigError("kmeans: k = " + std::to_string(k) + " must be in [1, N = " +
                          std::to_string(n) + "]");

    Rng rng(rng_seed);
    MatD centroids(k, 2);

    // k-means++ seeding
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
    centroids.at(0, 0) = points.at(first, 0);
    centroids.at(0, 1) = points.at(first, 1);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            min_d2[i] = std::min(min_d2[i], sq_dist2(points, i, centroids, c - 1));
            total += min_d2[i];
        }
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        } else {
            const double r = rng.uniform() * total;
            double cum = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                cum += min_d2[i];
                if (cum >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.at(c, 0) = points.at(pick, 0);
        centroids.at(c, 1) = points.at(pick, 1);
    }

    std::vector<int> assign(n, -1);
    for (int round = 0; round < 300; ++round) {
        bool changed = false;
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist2(points, i, centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist2(points, i, centroids, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        if (inertia_history) inertia_history->push_back(inertia);

        std::vector<int> counts(k, 0);
        MatD sums(k, 2);
        for (int i = 0; i < n; ++i) {
            ++counts[assign[i]];
            sums.at(assign[i], 0) += points.at(i, 0);
            sums.at(assign[i], 1) += points.at(i, 1);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed to the point farthest from its assigned centroid
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist2(points, i, centroids, assign[i]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids.at(c, 0) = points.at(far, 0);
                centroids.at(c, 1) = points.at(far, 1);
                changed = true;
            } else {
                centroids.at(c, 0) = sums.at(c, 0) / counts[c];
                centroids.at(c, 1) = sums.at(c, 1) / counts[c];
            }
        }
        if (!changed) break;
    }

    // make centroids exactly the means of the final assignments
    std::vector<int> counts(k, 0);
    MatD sums(k, 2);
    for (int i = 0; i < n; ++i) {
        ++counts[assign[i]];
        sums.at(assign[i], 0) += points.at(i, 0);
        sums.at(assign[i], 1) += points.at(i, 1);
    }
    for (int c = 0; c < k; ++c)
        if (counts[c] > 0) {
            centroids.at(c, 0) = sums.at(c, 0) / counts[c];
            centroids.at(c, 1) = sums.at(c, 1) / counts[c];
        }

    return Clustering{std::move(assign), std::move(centroids)};
}

std::vector<int> nearest_members(const Clustering& clustering, const Embedding2D& embedding,
                                 int cluster_id, int m) {
    if (cluster_id < 0 || cluster_id >= clustering.centroids.rows)
        throw ConfigError("nearest_members: unknown cluster " + std::to_string(cluster_id));
    if (m < 1) throw ConfigError("nearest_members: m must be >= 1");
    struct Entry {
        double d2;
        int source_id;
        int row;
    };
    std::vector<Entry> members;
    for (size_t i = 0; i < clustering.assignments.size(); ++i) {
        if (clustering.assignments[i] != cluster_id) continue;
        const double d0 = embedding.points.at(static_cast<int>(i), 0) -
                          clustering.centroids.at(cluster_id, 0);
        const double d1 = embedding.points.at(static_cast<int>(i), 1) -
                          clustering.centroids.at(cluster_id, 1);
        members.push_back({d0 * d0 + d1 * d1, embedding.source_ids[i], static_cast<int>(i)});
    }
    if (members.empty())
        throw DataError("nearest_members: cluster " + std::to_string(cluster_id) + " is empty");
    std::sort(members.begin(), members.end(), [](const Entry& a, const Entry& b) {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        return a.source_id < b.source_id;
    });
    std::vector<int> out;
    for (size_t i = 0; i < members.size() && i < static_cast<size_t>(m); ++i)
        out.push_back(members[i].source_id);
    return out;
}

}  // namespace facet
