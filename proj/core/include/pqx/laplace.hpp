#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pqx/dataset.hpp"
#include "pqx/network.hpp"

namespace pqx {

enum class CurvatureKind : uint8_t { empirical_fisher = 0, ggn_diag = 1 };

const char* curvature_kind_name(CurvatureKind k);
CurvatureKind curvature_kind_from_name(const std::string& name);

/// Supplies per-sample diagonal curvature contributions at a fixed parameter
/// vector. Implemented by the classifier adapter below and by analytic test
/// problems, so the fit logic is shared between both.
class CurvatureSource {
public:
    virtual ~CurvatureSource() = default;
    virtual size_t sample_count() const = 0;
    virtual size_t param_count() const = 0;
    /// acc[i] += g_i^2 for the per-sample negative log-likelihood gradient.
    virtual void add_fisher_diag(size_t sample, std::span<const double> theta,
                                 std::span<double> acc) const = 0;
    /// acc[i] += per-sample generalized Gauss-Newton diagonal.
    virtual void add_ggn_diag(size_t sample, std::span<const double> theta,
                              std::span<double> acc) const = 0;
};

/// Softmax classifier curvature over one dataset split.
class ClassifierCurvature : public CurvatureSource {
public:
    ClassifierCurvature(const Network& net, std::span<const double> buffers,
                        const Dataset& data, Split split);
    size_t sample_count() const override { return indices_.size(); }
    size_t param_count() const override;
    void add_fisher_diag(size_t sample, std::span<const double> theta,
                         std::span<double> acc) const override;
    void add_ggn_diag(size_t sample, std::span<const double> theta,
                      std::span<double> acc) const override;

private:
    const Network& net_;
    std::span<const double> buffers_;
    const Dataset& data_;
    std::vector<size_t> indices_;
};

/// Diagonal Gaussian posterior N(theta_map, diag(variance)).
struct LaplacePosterior {
    std::vector<double> theta_map;
    std::vector<double> variance;
    double prior_precision = 0.0;
    CurvatureKind curvature_kind = CurvatureKind::empirical_fisher;
    std::string dataset_fingerprint; // hex digest, empty for in-memory fits
};

/// Post-hoc fit: variance[i] = 1 / (curvature[i] + prior_precision).
/// theta_map is copied, never modified. Throws SingularityError if some
/// parameter has zero curvature and prior_precision is zero.
LaplacePosterior fit_laplace(std::span<const double> theta_map, const CurvatureSource& source,
                             double prior_precision, CurvatureKind kind);

/// theta^(s) = theta_map + sqrt(variance) * z, z ~ N(0, I); the draw for
/// (seed, sample_index) is a pure function of both.
void sample_params_into(const LaplacePosterior& post, uint64_t seed, uint64_t sample_index,
                        std::vector<double>& theta_out);
std::vector<std::vector<double>> sample_params(const LaplacePosterior& post, int n, uint64_t seed);

struct PriorTuneResult {
    double prior_precision = 0.0;
    std::vector<std::pair<double, double>> grid_accuracy; // (precision, mean val accuracy)
};

/// Grid search over prior precisions maximizing sampled-ensemble validation
/// accuracy; ties break toward the smaller precision. Common random draws
/// across grid points (same seed) keep the comparison deterministic.
PriorTuneResult tune_prior_precision(const Network& net, std::span<const double> theta_map,
                                     std::span<const double> buffers,
                                     const CurvatureSource& source, CurvatureKind kind,
                                     const Dataset& data, Split val_split,
                                     std::span<const double> grid, int n_models, uint64_t seed);

/// "PQLA" container: magic, version u16, prior_precision f64, kind u8,
/// variance f32[], checkpoint sha256 (32 raw bytes). The variance length is
/// derived from the file size. theta_map lives in the checkpoint file.
void save_posterior(const LaplacePosterior& post, const std::string& path,
                    const std::array<uint8_t, 32>& checkpoint_hash);
/// Loads variance and metadata; verifies the stored checkpoint hash matches
/// `checkpoint_hash` (pass nullptr to skip) and installs theta_map.
LaplacePosterior load_posterior(const std::string& path, std::span<const double> theta_map,
                                const std::array<uint8_t, 32>* checkpoint_hash);

} // namespace pqx
