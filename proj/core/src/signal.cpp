#include "pqx/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pqx/errors.hpp"
#include "pqx/rng.hpp"

namespace pqx {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

const char* kClassNames[kNumClasses] = {
    "Sag",
    "Swell",
    "Interruption",
    "Harmonics",
    "Flicker",
    "OscillatoryTransient",
    "ImpulsiveTransient",
    "Notch",
    "Spike",
    "SagHarmonics",
    "SwellHarmonics",
    "InterruptionHarmonics",
    "FlickerHarmonics",
    "FlickerSag",
    "FlickerSwell",
    "Normal",
};

bool has_component(DisturbanceClass c, DisturbanceClass part) {
    using D = DisturbanceClass;
    switch (part) {
        case D::Sag: return c == D::Sag || c == D::SagHarmonics || c == D::FlickerSag;
        case D::Swell: return c == D::Swell || c == D::SwellHarmonics || c == D::FlickerSwell;
        case D::Interruption: return c == D::Interruption || c == D::InterruptionHarmonics;
        case D::Harmonics:
            return c == D::Harmonics || c == D::SagHarmonics || c == D::SwellHarmonics ||
                   c == D::InterruptionHarmonics || c == D::FlickerHarmonics;
        case D::Flicker:
            return c == D::Flicker || c == D::FlickerHarmonics || c == D::FlickerSag ||
                   c == D::FlickerSwell;
        default: return c == part;
    }
}

double get_param(const DisturbanceSpec& d, const std::string& key) {
    auto it = d.params.find(key);
    if (it == d.params.end())
        throw ValidationError(std::string("missing disturbance parameter '") + key + "' for class " +
                              class_name(d.class_id));
    return it->second;
}

} // namespace

void WaveformSpec::validate() const {
    if (n_samples <= 0) throw ConfigError("waveform: n_samples must be positive");
    if (frequency_hz <= 0.0) throw ConfigError("waveform: frequency must be positive");
    if (sample_rate_hz <= 2.0 * frequency_hz)
        throw ConfigError("waveform: sample rate must exceed twice the fundamental");
    if (n_cycles <= 0) throw ConfigError("waveform: n_cycles must be positive");
    const int expected = static_cast<int>(std::lround(sample_rate_hz * n_cycles / frequency_hz));
    if (n_samples != expected)
        throw ConfigError("waveform: n_samples inconsistent with sample_rate * n_cycles / frequency");
}

WaveformSpec WaveformSpec::standard(double phase_rad) {
    WaveformSpec s;
    s.phase_rad = phase_rad;
    return s;
}

const char* class_name(DisturbanceClass c) { return kClassNames[static_cast<int>(c)]; }

DisturbanceClass class_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kClassNames[i]) return static_cast<DisturbanceClass>(i);
    throw ValidationError("unknown disturbance class: " + name);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ValidationError("unknown split: " + name);
}

const std::map<std::string, std::pair<double, double>>& param_ranges(DisturbanceClass c) {
    using Ranges = std::map<std::string, std::pair<double, double>>;
    static const Ranges sag{{"depth", {0.1, 0.9}}, {"duration_cycles", {1.0, 9.0}}};
    static const Ranges swell{{"depth", {0.1, 0.8}}, {"duration_cycles", {1.0, 9.0}}};
    static const Ranges interruption{{"depth", {0.9, 1.0}}, {"duration_cycles", {1.0, 9.0}}};
    static const Ranges harmonics{{"h3", {0.05, 0.15}}, {"h5", {0.05, 0.15}}, {"h7", {0.05, 0.15}}};
    static const Ranges flicker{{"flicker_mag", {0.1, 0.2}},
                                {"flicker_hz", {8.0, 25.0}},
                                {"flicker_phase", {0.0, kTwoPi}}};
    static const Ranges oscillatory{{"osc_mag", {0.3, 0.8}},
                                    {"osc_freq_hz", {300.0, 900.0}},
                                    {"osc_tau_s", {0.008, 0.04}}};
    static const Ranges impulsive{{"imp_mag", {1.0, 3.0}}, {"imp_tau_s", {0.0003, 0.001}}};
    static const Ranges notch{{"notch_depth", {0.1, 0.4}},
                              {"notch_width_s", {0.0005, 0.002}},
                              {"notch_offset", {0.1, 0.4}}};
    static const Ranges spike{{"spike_mag", {0.1, 0.4}},
                              {"spike_width_s", {0.0005, 0.002}},
                              {"spike_offset", {0.1, 0.4}}};
    static const Ranges none{};

    auto merge = [](std::initializer_list<const Ranges*> parts) {
        Ranges out;
        for (const Ranges* p : parts) out.insert(p->begin(), p->end());
        return out;
    };
    static const Ranges sag_harm = merge({&sag, &harmonics});
    static const Ranges swell_harm = merge({&swell, &harmonics});
    static const Ranges int_harm = merge({&interruption, &harmonics});
    static const Ranges flicker_harm = merge({&flicker, &harmonics});
    static const Ranges flicker_sag = merge({&flicker, &sag});
    static const Ranges flicker_swell = merge({&flicker, &swell});

    switch (c) {
        case DisturbanceClass::Sag: return sag;
        case DisturbanceClass::Swell: return swell;
        case DisturbanceClass::Interruption: return interruption;
        case DisturbanceClass::Harmonics: return harmonics;
        case DisturbanceClass::Flicker: return flicker;
        case DisturbanceClass::OscillatoryTransient: return oscillatory;
        case DisturbanceClass::ImpulsiveTransient: return impulsive;
        case DisturbanceClass::Notch: return notch;
        case DisturbanceClass::Spike: return spike;
        case DisturbanceClass::SagHarmonics: return sag_harm;
        case DisturbanceClass::SwellHarmonics: return swell_harm;
        case DisturbanceClass::InterruptionHarmonics: return int_harm;
        case DisturbanceClass::FlickerHarmonics: return flicker_harm;
        case DisturbanceClass::FlickerSag: return flicker_sag;
        case DisturbanceClass::FlickerSwell: return flicker_swell;
        default: return none;
    }
}

void DisturbanceSpec::validate(const WaveformSpec& wave) const {
    const auto& ranges = param_ranges(class_id);
    for (const auto& [key, range] : ranges) {
        if (key == "duration_cycles") continue; // realized as start/end times below
        const double v = get_param(*this, key);
        if (v < range.first || v > range.second)
            throw ValidationError(std::string("parameter '") + key + "' out of range for class " +
                                  class_name(class_id));
    }
    const bool interval = has_component(class_id, DisturbanceClass::Sag) ||
                          has_component(class_id, DisturbanceClass::Swell) ||
                          has_component(class_id, DisturbanceClass::Interruption);
    if (interval) {
        const double t1 = get_param(*this, "start_time");
        const double t2 = get_param(*this, "end_time");
        if (!(0.0 <= t1 && t1 < t2 && t2 <= wave.duration_s()))
            throw ValidationError(std::string("event interval out of range for class ") +
                                  class_name(class_id));
    }
    if (class_id == DisturbanceClass::OscillatoryTransient ||
        class_id == DisturbanceClass::ImpulsiveTransient) {
        const double t1 = get_param(*this, "start_time");
        if (!(0.0 <= t1 && t1 < wave.duration_s()))
            throw ValidationError("transient start time out of range");
    }
}

std::vector<double> synth_baseline(const WaveformSpec& spec) {
    spec.validate();
    std::vector<double> out(static_cast<size_t>(spec.n_samples));
    const double w = kTwoPi * spec.frequency_hz / spec.sample_rate_hz;
    for (int n = 0; n < spec.n_samples; ++n)
        out[static_cast<size_t>(n)] = spec.amplitude_pu * std::sin(w * n + spec.phase_rad);
    return out;
}

std::vector<double> synth_clean(const WaveformSpec& wave, const DisturbanceSpec& dist) {
    wave.validate();
    dist.validate(wave);
    using D = DisturbanceClass;
    const D c = dist.class_id;
    const int n = wave.n_samples;
    const double fs = wave.sample_rate_hz;
    const double phase = wave.phase_rad;
    const double wfund = kTwoPi * wave.frequency_hz;

    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = i / fs;
        const double arg = wfund * t + phase;

        // fundamental plus any persistent harmonic content
        double carrier = std::sin(arg);
        if (has_component(c, D::Harmonics)) {
            carrier += get_param(dist, "h3") * std::sin(3.0 * arg) +
                       get_param(dist, "h5") * std::sin(5.0 * arg) +
                       get_param(dist, "h7") * std::sin(7.0 * arg);
        }

        // multiplicative envelopes
        double env = 1.0;
        if (has_component(c, D::Flicker)) {
            env *= 1.0 + get_param(dist, "flicker_mag") *
                             std::sin(kTwoPi * get_param(dist, "flicker_hz") * t +
                                      get_param(dist, "flicker_phase"));
        }
        if (has_component(c, D::Sag) || has_component(c, D::Interruption)) {
            if (t >= get_param(dist, "start_time") && t < get_param(dist, "end_time"))
                env *= 1.0 - get_param(dist, "depth");
        } else if (has_component(c, D::Swell)) {
            if (t >= get_param(dist, "start_time") && t < get_param(dist, "end_time"))
                env *= 1.0 + get_param(dist, "depth");
        }

        double v = wave.amplitude_pu * env * carrier;

        // additive events
        if (c == D::OscillatoryTransient) {
            const double t1 = get_param(dist, "start_time");
            if (t >= t1) {
                const double dt = t - t1;
                v += wave.amplitude_pu * get_param(dist, "osc_mag") *
                     std::exp(-dt / get_param(dist, "osc_tau_s")) *
                     std::sin(kTwoPi * get_param(dist, "osc_freq_hz") * dt);
            }
        } else if (c == D::ImpulsiveTransient) {
            const double t1 = get_param(dist, "start_time");
            if (t >= t1) {
                const double dt = t - t1;
                v += wave.amplitude_pu * get_param(dist, "imp_sign") * get_param(dist, "imp_mag") *
                     std::exp(-dt / get_param(dist, "imp_tau_s"));
            }
        } else if (c == D::Notch || c == D::Spike) {
            // one sub-cycle event per half cycle, phase-locked to the carrier
            const bool notch = (c == D::Notch);
            const double depth = get_param(dist, notch ? "notch_depth" : "spike_mag");
            const double width = get_param(dist, notch ? "notch_width_s" : "spike_width_s");
            const double offset = get_param(dist, notch ? "notch_offset" : "spike_offset");
            const double half = 0.5 / wave.frequency_hz;
            // phase-locked time origin: carrier zero crossing (ascending)
            const double t0 = -phase / wfund;
            double local = std::fmod(t - t0, half);
            if (local < 0) local += half;
            const double ev = offset * half;
            if (local >= ev && local < ev + width) {
                const double sgn = std::sin(arg) >= 0.0 ? 1.0 : -1.0;
                v += wave.amplitude_pu * (notch ? -depth : depth) * sgn;
            }
        }
        out[static_cast<size_t>(i)] = v;
    }
    return out;
}

SignalRecord synth_disturbed(const WaveformSpec& wave, const DisturbanceSpec& dist,
                             double snr_db, uint64_t seed) {
    const std::vector<double> clean = synth_clean(wave, dist);
    const std::vector<double> base = synth_baseline(wave);
    const int n = wave.n_samples;

    double ms = 0.0;
    for (double v : clean) ms += v * v;
    const double rms = std::sqrt(ms / n);
    const double sigma = std::isinf(snr_db) ? 0.0 : rms / std::pow(10.0, snr_db / 20.0);

    SignalRecord rec;
    rec.label = static_cast<uint8_t>(dist.class_id);
    rec.snr_db = static_cast<float>(snr_db);
    rec.wave = wave;
    rec.dist = dist;
    rec.noise_sigma = sigma;
    rec.noise_seed = seed;
    rec.x.resize(static_cast<size_t>(n));
    rec.baseline.resize(static_cast<size_t>(n));

    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const double noise = sigma > 0.0 ? sigma * rng.normal() : 0.0;
        rec.x[static_cast<size_t>(i)] = static_cast<float>(clean[static_cast<size_t>(i)] + noise);
        rec.baseline[static_cast<size_t>(i)] = static_cast<float>(base[static_cast<size_t>(i)]);
    }
    return rec;
}

GroundTruthMask ground_truth_mask(std::span<const double> clean,
                                  std::span<const double> baseline, double epsilon) {
    if (epsilon <= 0.0) throw ValidationError("ground-truth epsilon must be positive");
    if (clean.size() != baseline.size())
        throw ValidationError("ground-truth mask: length mismatch");
    GroundTruthMask out;
    out.epsilon = epsilon;
    out.mask.resize(clean.size());
    int count = 0;
    for (size_t i = 0; i < clean.size(); ++i) {
        const bool on = std::abs(clean[i] - baseline[i]) > epsilon;
        out.mask[i] = on ? 1 : 0;
        count += on ? 1 : 0;
    }
    out.disturbed_count = count;
    return out;
}

GroundTruthMask ground_truth_mask(const SignalRecord& record, double epsilon) {
    const auto clean = synth_clean(record.wave, record.dist);
    const auto base = synth_baseline(record.wave);
    return ground_truth_mask(clean, base, epsilon);
}

DisturbanceSpec draw_disturbance(DisturbanceClass c, const WaveformSpec& wave, Rng& rng) {
    using D = DisturbanceClass;
    DisturbanceSpec d;
    d.class_id = c;
    const auto& ranges = param_ranges(c);
    auto draw = [&](const char* key) {
        const auto& r = ranges.at(key);
        d.params[key] = rng.uniform(r.first, r.second);
    };

    // Draw order is fixed per class so records are reproducible from the seed.
    if (has_component(c, D::Sag) || has_component(c, D::Swell) || has_component(c, D::Interruption)) {
        draw("depth");
        const auto& dr = ranges.at("duration_cycles");
        const double dur = rng.uniform(dr.first, dr.second);
        const double margin = 0.5; // keep events off the record edges, in cycles
        const double start_cyc = rng.uniform(margin, wave.n_cycles - margin - dur);
        d.params["start_time"] = start_cyc / wave.frequency_hz;
        d.params["end_time"] = (start_cyc + dur) / wave.frequency_hz;
    }
    if (has_component(c, D::Harmonics)) {
        draw("h3");
        draw("h5");
        draw("h7");
    }
    if (has_component(c, D::Flicker)) {
        draw("flicker_mag");
        draw("flicker_hz");
        draw("flicker_phase");
    }
    if (c == D::OscillatoryTransient) {
        draw("osc_mag");
        draw("osc_freq_hz");
        draw("osc_tau_s");
        d.params["start_time"] = rng.uniform(0.5, 5.0) / wave.frequency_hz;
    }
    if (c == D::ImpulsiveTransient) {
        draw("imp_mag");
        draw("imp_tau_s");
        d.params["start_time"] = rng.uniform(0.5, 9.0) / wave.frequency_hz;
        d.params["imp_sign"] = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    }
    if (c == D::Notch) {
        draw("notch_depth");
        draw("notch_width_s");
        draw("notch_offset");
    }
    if (c == D::Spike) {
        draw("spike_mag");
        draw("spike_width_s");
        draw("spike_offset");
    }
    return d;
}

} // namespace pqx
