#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pqx {

/// Nominal-waveform parameters (the undisturbed sine).
struct WaveformSpec {
    double amplitude_pu = 1.0;
    double frequency_hz = 50.0;
    double phase_rad = 0.0;
    double sample_rate_hz = 3200.0;
    int n_cycles = 10;
    int n_samples = 640;

    double duration_s() const { return static_cast<double>(n_cycles) / frequency_hz; }
    void validate() const; // throws ConfigError

    /// 3.2 kHz, 50 Hz, 10 cycles, 640 samples.
    static WaveformSpec standard(double phase_rad = 0.0);
};

enum class DisturbanceClass : uint8_t {
    Sag = 0,
    Swell = 1,
    Interruption = 2,
    Harmonics = 3,
    Flicker = 4,
    OscillatoryTransient = 5,
    ImpulsiveTransient = 6,
    Notch = 7,
    Spike = 8,
    SagHarmonics = 9,
    SwellHarmonics = 10,
    InterruptionHarmonics = 11,
    FlickerHarmonics = 12,
    FlickerSag = 13,
    FlickerSwell = 14,
    Normal = 15,
};

inline constexpr int kNumClasses = 16;

const char* class_name(DisturbanceClass c);
DisturbanceClass class_from_name(const std::string& name); // throws ValidationError

/// One disturbance event: class plus its keyed parameters (times in seconds,
/// magnitudes in per-unit, frequencies in Hz).
struct DisturbanceSpec {
    DisturbanceClass class_id = DisturbanceClass::Normal;
    std::map<std::string, double> params;

    /// Checks required keys and configured ranges; throws ValidationError.
    void validate(const WaveformSpec& wave) const;
};

struct GroundTruthMask {
    std::vector<uint8_t> mask;
    double epsilon = 0.0;
    int disturbed_count = 0;
};

enum class Split : uint8_t { train = 0, val = 1, test = 2 };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

/// One labeled waveform. x/baseline are stored as f32 to mirror the dataset
/// file exactly; spec_json is the canonical serialized metadata blob.
struct SignalRecord {
    uint8_t label = 0;
    float snr_db = 0.0f;
    std::vector<float> x;
    std::vector<float> baseline;
    std::vector<uint8_t> mask;
    std::string spec_json;

    // parsed from spec_json
    WaveformSpec wave;
    DisturbanceSpec dist;
    double noise_sigma = 0.0;
    uint64_t noise_seed = 0;
    Split split = Split::train;
};

/// Discrete evaluation of the nominal sine x0[n] = A sin(2*pi*f*n/fs + phi).
std::vector<double> synth_baseline(const WaveformSpec& spec);

/// Noise-free disturbed waveform for (wave, dist). Deterministic.
std::vector<double> synth_clean(const WaveformSpec& wave, const DisturbanceSpec& dist);

/// Clean transform plus seeded white Gaussian noise at the requested SNR.
/// snr_db may be +infinity (no noise). Same seed => identical record.
SignalRecord synth_disturbed(const WaveformSpec& wave, const DisturbanceSpec& dist,
                             double snr_db, uint64_t seed);

/// Mask per |clean[n] - baseline[n]| > epsilon, on noise-free signals.
GroundTruthMask ground_truth_mask(std::span<const double> clean,
                                  std::span<const double> baseline, double epsilon);

/// Re-synthesizes the clean waveform from the record's spec and thresholds it.
GroundTruthMask ground_truth_mask(const SignalRecord& record, double epsilon);

/// Per-class parameter ranges used when drawing disturbances. Keyed by the
/// same names that end up in DisturbanceSpec::params; values are {lo, hi}.
const std::map<std::string, std::pair<double, double>>& param_ranges(DisturbanceClass c);

/// Draws a random DisturbanceSpec for the class from its configured ranges.
DisturbanceSpec draw_disturbance(DisturbanceClass c, const WaveformSpec& wave, class Rng& rng);

} // namespace pqx
