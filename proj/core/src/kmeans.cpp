#include "pqx/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/rng.hpp"

namespace pqx {

namespace {

double sq_dist(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace

ClusterResult kmeans(std::span<const double> rows, int n_rows, int n_cols, int k, uint64_t seed) {
    if (n_rows < 1 || n_cols < 1) throw ValidationError("kmeans: empty data");
    if (k < 1 || k > n_rows) throw ValidationError("kmeans: need 1 <= k <= number of rows");
    if (rows.size() != static_cast<size_t>(n_rows) * n_cols)
        throw ValidationError("kmeans: data size mismatch");

    constexpr int kMaxIter = 300;
    constexpr double kTol = 1e-6; // relative inertia improvement

    auto row_ptr = [&](int s) { return rows.data() + static_cast<size_t>(s) * n_cols; };

    ClusterResult res;
    res.k = k;
    res.centroids.resize(static_cast<size_t>(k) * n_cols);
    res.assignment.assign(static_cast<size_t>(n_rows), 0);

    // k-means++ seeding
    Rng rng(mix64(seed, 0x6b6d));
    std::vector<double> d2(static_cast<size_t>(n_rows), 0.0);
    {
        const int first = static_cast<int>(rng.below(static_cast<uint64_t>(n_rows)));
        std::copy_n(row_ptr(first), n_cols, res.centroids.begin());
        for (int s = 0; s < n_rows; ++s)
            d2[static_cast<size_t>(s)] = sq_dist(row_ptr(s), res.centroids.data(), n_cols);
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (double v : d2) total += v;
            int chosen;
            if (total > 0.0) {
                const double target = rng.uniform01() * total;
                double acc = 0.0;
                chosen = n_rows - 1;
                for (int s = 0; s < n_rows; ++s) {
                    acc += d2[static_cast<size_t>(s)];
                    if (acc >= target) {
                        chosen = s;
                        break;
                    }
                }
            } else {
                // all points coincide with chosen centers
                chosen = static_cast<int>(rng.below(static_cast<uint64_t>(n_rows)));
            }
            double* dst = res.centroids.data() + static_cast<size_t>(c) * n_cols;
            std::copy_n(row_ptr(chosen), n_cols, dst);
            for (int s = 0; s < n_rows; ++s) {
                const double d = sq_dist(row_ptr(s), dst, n_cols);
                d2[static_cast<size_t>(s)] = std::min(d2[static_cast<size_t>(s)], d);
            }
        }
    }

    auto assign_and_inertia = [&]() {
        double inertia = 0.0;
        for (int s = 0; s < n_rows; ++s) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(row_ptr(s), res.centroids.data() + static_cast<size_t>(c) * n_cols, n_cols);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            res.assignment[static_cast<size_t>(s)] = best_c;
            inertia += best;
        }
        return inertia;
    };

    double inertia = assign_and_inertia();
    res.inertia_history.push_back(inertia);

    std::vector<int> counts(static_cast<size_t>(k));
    for (int iter = 0; iter < kMaxIter; ++iter) {
        // update step: centroids become per-cluster means
        std::fill(res.centroids.begin(), res.centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int s = 0; s < n_rows; ++s) {
            const int c = res.assignment[static_cast<size_t>(s)];
            counts[static_cast<size_t>(c)] += 1;
            double* dst = res.centroids.data() + static_cast<size_t>(c) * n_cols;
            const double* src = row_ptr(s);
            for (int i = 0; i < n_cols; ++i) dst[i] += src[i];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                double* dst = res.centroids.data() + static_cast<size_t>(c) * n_cols;
                for (int i = 0; i < n_cols; ++i) dst[i] /= counts[static_cast<size_t>(c)];
            } else {
                // re-seed an empty cluster with the point farthest from its centroid
                double worst = -1.0;
                int worst_s = 0;
                for (int s = 0; s < n_rows; ++s) {
                    const int sc = res.assignment[static_cast<size_t>(s)];
                    if (counts[static_cast<size_t>(sc)] <= 1) continue;
                    const double d = sq_dist(row_ptr(s),
                                             res.centroids.data() + static_cast<size_t>(sc) * n_cols,
                                             n_cols);
                    if (d > worst) {
                        worst = d;
                        worst_s = s;
                    }
                }
                std::copy_n(row_ptr(worst_s), n_cols,
                            res.centroids.begin() + static_cast<size_t>(c) * n_cols);
            }
        }

        const double new_inertia = assign_and_inertia();
        res.inertia_history.push_back(new_inertia);
        const double improvement = inertia - new_inertia;
        inertia = new_inertia;
        if (improvement <= kTol * std::max(inertia, 1e-300)) break;
    }

    // final update so centroids are exactly the per-cluster means of the
    // final assignment
    std::fill(res.centroids.begin(), res.centroids.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int s = 0; s < n_rows; ++s) {
        const int c = res.assignment[static_cast<size_t>(s)];
        counts[static_cast<size_t>(c)] += 1;
        double* dst = res.centroids.data() + static_cast<size_t>(c) * n_cols;
        const double* src = row_ptr(s);
        for (int i = 0; i < n_cols; ++i) dst[i] += src[i];
    }
    for (int c = 0; c < k; ++c)
        if (counts[static_cast<size_t>(c)] > 0) {
            double* dst = res.centroids.data() + static_cast<size_t>(c) * n_cols;
            for (int i = 0; i < n_cols; ++i) dst[i] /= counts[static_cast<size_t>(c)];
        }
    res.inertia = 0.0;
    for (int s = 0; s < n_rows; ++s)
        res.inertia += sq_dist(row_ptr(s),
                               res.centroids.data() +
                                   static_cast<size_t>(res.assignment[static_cast<size_t>(s)]) * n_cols,
                               n_cols);

    return res;
}

std::vector<double> pca2_projection(std::span<const double> rows, int n_rows, int n_cols,
                                    uint64_t seed) {
    if (rows.size() != static_cast<size_t>(n_rows) * n_cols)
        throw ValidationError("pca: data size mismatch");

    std::vector<double> mean(static_cast<size_t>(n_cols), 0.0);
    for (int s = 0; s < n_rows; ++s) {
        const double* r = rows.data() + static_cast<size_t>(s) * n_cols;
        for (int i = 0; i < n_cols; ++i) mean[static_cast<size_t>(i)] += r[i];
    }
    for (double& m : mean) m /= n_rows;

    std::vector<double> centered(rows.size());
    for (int s = 0; s < n_rows; ++s)
        for (int i = 0; i < n_cols; ++i)
            centered[static_cast<size_t>(s) * n_cols + i] =
                rows[static_cast<size_t>(s) * n_cols + i] - mean[static_cast<size_t>(i)];

    auto mat_vec = [&](const std::vector<double>& v, std::vector<double>& out) {
        // out = X^T (X v), X is n_rows x n_cols centered
        out.assign(static_cast<size_t>(n_cols), 0.0);
        for (int s = 0; s < n_rows; ++s) {
            const double* r = centered.data() + static_cast<size_t>(s) * n_cols;
            double dot = 0.0;
            for (int i = 0; i < n_cols; ++i) dot += r[i] * v[static_cast<size_t>(i)];
            for (int i = 0; i < n_cols; ++i) out[static_cast<size_t>(i)] += dot * r[i];
        }
    };

    std::vector<std::vector<double>> components;
    Rng rng(mix64(seed, 0x9ca2));
    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> v(static_cast<size_t>(n_cols));
        for (double& x : v) x = rng.normal();
        std::vector<double> next;
        double prev_norm = 0.0;
        for (int iter = 0; iter < 500; ++iter) {
            // deflate against previously found components
            for (const auto& c : components) {
                double dot = 0.0;
                for (int i = 0; i < n_cols; ++i) dot += v[static_cast<size_t>(i)] * c[static_cast<size_t>(i)];
                for (int i = 0; i < n_cols; ++i) v[static_cast<size_t>(i)] -= dot * c[static_cast<size_t>(i)];
            }
            mat_vec(v, next);
            double norm = 0.0;
            for (double x : next) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-300) break; // degenerate direction: keep whatever v is
            for (int i = 0; i < n_cols; ++i) v[static_cast<size_t>(i)] = next[static_cast<size_t>(i)] / norm;
            if (iter > 2 && std::abs(norm - prev_norm) <= 1e-12 * std::max(1.0, norm)) break;
            prev_norm = norm;
        }
        // sign convention: largest-magnitude loading is positive
        int arg = 0;
        for (int i = 1; i < n_cols; ++i)
            if (std::abs(v[static_cast<size_t>(i)]) > std::abs(v[static_cast<size_t>(arg)])) arg = i;
        if (v[static_cast<size_t>(arg)] < 0.0)
            for (double& x : v) x = -x;
        components.push_back(v);
    }

    std::vector<double> proj(static_cast<size_t>(n_rows) * 2);
    for (int s = 0; s < n_rows; ++s) {
        const double* r = centered.data() + static_cast<size_t>(s) * n_cols;
        for (int comp = 0; comp < 2; ++comp) {
            double dot = 0.0;
            for (int i = 0; i < n_cols; ++i) dot += r[i] * components[static_cast<size_t>(comp)][static_cast<size_t>(i)];
            proj[static_cast<size_t>(s) * 2 + comp] = dot;
        }
    }
    return proj;
}

ClusterResult cluster_explanations(const ExplanationEnsemble& ens, int k, uint64_t seed) {
    ClusterResult res = kmeans(ens.rows, ens.n_rows, ens.n_samples, k, seed);
    res.projection2d = pca2_projection(ens.rows, ens.n_rows, ens.n_samples, seed);
    return res;
}

std::string cluster_to_json(const ClusterResult& res) {
    nlohmann::ordered_json j;
    j["k"] = res.k;
    j["inertia"] = res.inertia;
    j["assignment"] = res.assignment;
    j["inertia_history"] = res.inertia_history;
    j["projection2d"] = res.projection2d;
    j["centroids"] = res.centroids;
    return j.dump();
}

} // namespace pqx
