#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqx/signal.hpp"

namespace pqx {

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct GenConfig {
    int per_class = 200;
    double snr_lo_db = 20.0;
    double snr_hi_db = 50.0;
    uint64_t seed = 0;
    double epsilon = 1e-4;
    SplitFractions split;
    WaveformSpec wave = WaveformSpec::standard();

    void validate() const; // throws ValidationError
    /// train/val/test record counts for one class of `per_class` records.
    void class_split_counts(int& n_train, int& n_val, int& n_test) const;
    int total_records() const { return per_class * kNumClasses; }
};

struct Dataset {
    uint32_t n_samples = 0;
    uint16_t n_classes = kNumClasses;
    double sample_rate_hz = 0.0;
    double epsilon = 0.0;
    std::vector<SignalRecord> records;

    std::vector<size_t> split_indices(Split s) const;
    GroundTruthMask mask_of(size_t record_index) const;
};

/// Generates the full stratified corpus: per_class records for each of the 16
/// classes, class-major order, split-tagged, reproducible from the seed.
Dataset generate_corpus(const GenConfig& config);

/// "PQDS" container (little-endian).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Canonical record metadata blob stored in the file (sorted keys, one line).
std::string record_spec_json(const SignalRecord& rec);
void parse_record_spec_json(SignalRecord& rec);

} // namespace pqx
