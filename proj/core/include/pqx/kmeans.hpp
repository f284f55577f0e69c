#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pqx/bexplain.hpp"

namespace pqx {

struct ClusterResult {
    int k = 0;
    std::vector<int> assignment;          // length S
    std::vector<double> centroids;        // k x N, row-major; per-cluster means
    double inertia = 0.0;                 // sum of squared distances to assigned centroid
    std::vector<double> inertia_history;  // per Lloyd iteration, non-increasing
    std::vector<double> projection2d;     // S x 2: top-2 principal component scores
};

/// Lloyd's algorithm with k-means++ seeding; iteration cap 300, relative
/// inertia tolerance 1e-6; deterministic given the seed. Empty clusters are
/// re-seeded with the point farthest from its centroid.
ClusterResult kmeans(std::span<const double> rows, int n_rows, int n_cols, int k, uint64_t seed);

/// Scores of the mean-centered rows on their top-2 principal components
/// (power iteration with deflation, deterministic given the seed).
std::vector<double> pca2_projection(std::span<const double> rows, int n_rows, int n_cols,
                                    uint64_t seed);

/// kmeans + pca2 over the ensemble's sample matrix.
ClusterResult cluster_explanations(const ExplanationEnsemble& ens, int k, uint64_t seed);

std::string cluster_to_json(const ClusterResult& res);

} // namespace pqx
