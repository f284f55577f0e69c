#include "pqx/dataset.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/io.hpp"
#include "pqx/rng.hpp"

namespace pqx {

namespace {

constexpr char kMagic[4] = {'P', 'Q', 'D', 'S'};
constexpr uint16_t kVersion = 1;

using ordered_json = nlohmann::ordered_json;

} // namespace

void GenConfig::validate() const {
    if (per_class < 1) throw ValidationError("gen: per-class count must be >= 1");
    if (!(snr_lo_db <= snr_hi_db)) throw ValidationError("gen: snr range inverted");
    if (epsilon <= 0.0) throw ValidationError("gen: epsilon must be positive");
    const double sum = split.train + split.val + split.test;
    if (std::abs(sum - 1.0) > 1e-9 || split.train < 0 || split.val < 0 || split.test < 0)
        throw ValidationError("gen: split fractions must be nonnegative and sum to 1");
    wave.validate();
}

void GenConfig::class_split_counts(int& n_train, int& n_val, int& n_test) const {
    n_train = static_cast<int>(std::floor(split.train * per_class));
    n_val = static_cast<int>(std::floor(split.val * per_class));
    n_test = per_class - n_train - n_val;
}

std::vector<size_t> Dataset::split_indices(Split s) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].split == s) out.push_back(i);
    return out;
}

GroundTruthMask Dataset::mask_of(size_t record_index) const {
    const SignalRecord& rec = records.at(record_index);
    GroundTruthMask m;
    m.mask = rec.mask;
    m.epsilon = epsilon;
    m.disturbed_count = 0;
    for (uint8_t b : m.mask) m.disturbed_count += b;
    return m;
}

std::string record_spec_json(const SignalRecord& rec) {
    ordered_json j;
    j["class_id"] = static_cast<int>(rec.dist.class_id);
    j["class_name"] = class_name(rec.dist.class_id);
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : rec.dist.params) params[k] = v;
    j["params"] = params;
    j["wave"] = {{"amplitude_pu", rec.wave.amplitude_pu},
                 {"frequency_hz", rec.wave.frequency_hz},
                 {"phase_rad", rec.wave.phase_rad},
                 {"sample_rate_hz", rec.wave.sample_rate_hz},
                 {"n_cycles", rec.wave.n_cycles},
                 {"n_samples", rec.wave.n_samples}};
    j["noise_sigma"] = rec.noise_sigma;
    j["noise_seed"] = rec.noise_seed;
    j["split"] = split_name(rec.split);
    return j.dump();
}

void parse_record_spec_json(SignalRecord& rec) {
    const auto j = nlohmann::json::parse(rec.spec_json);
    rec.dist.class_id = static_cast<DisturbanceClass>(j.at("class_id").get<int>());
    if (class_name(rec.dist.class_id) != j.at("class_name").get<std::string>())
        throw IoError("dataset: class_id / class_name mismatch in record spec");
    rec.dist.params.clear();
    for (const auto& [k, v] : j.at("params").items()) rec.dist.params[k] = v.get<double>();
    const auto& w = j.at("wave");
    rec.wave.amplitude_pu = w.at("amplitude_pu").get<double>();
    rec.wave.frequency_hz = w.at("frequency_hz").get<double>();
    rec.wave.phase_rad = w.at("phase_rad").get<double>();
    rec.wave.sample_rate_hz = w.at("sample_rate_hz").get<double>();
    rec.wave.n_cycles = w.at("n_cycles").get<int>();
    rec.wave.n_samples = w.at("n_samples").get<int>();
    rec.noise_sigma = j.at("noise_sigma").get<double>();
    rec.noise_seed = j.at("noise_seed").get<uint64_t>();
    rec.split = split_from_name(j.at("split").get<std::string>());
}

Dataset generate_corpus(const GenConfig& config) {
    config.validate();
    int n_train = 0, n_val = 0, n_test = 0;
    config.class_split_counts(n_train, n_val, n_test);

    Dataset ds;
    ds.n_samples = static_cast<uint32_t>(config.wave.n_samples);
    ds.sample_rate_hz = config.wave.sample_rate_hz;
    ds.epsilon = config.epsilon;
    ds.records.reserve(static_cast<size_t>(config.total_records()));

    for (int c = 0; c < kNumClasses; ++c) {
        const auto cls = static_cast<DisturbanceClass>(c);
        for (int i = 0; i < config.per_class; ++i) {
            Rng rng(mix64(config.seed, static_cast<uint64_t>(c), static_cast<uint64_t>(i)));
            WaveformSpec wave = config.wave;
            wave.phase_rad = rng.uniform(0.0, 2.0 * M_PI);
            const double snr = rng.uniform(config.snr_lo_db, config.snr_hi_db);
            const DisturbanceSpec dist = draw_disturbance(cls, wave, rng);
            const uint64_t noise_seed = rng.next_u64();

            SignalRecord rec = synth_disturbed(wave, dist, snr, noise_seed);
            rec.split = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);

            const auto clean = synth_clean(wave, dist);
            const auto base = synth_baseline(wave);
            const GroundTruthMask m = ground_truth_mask(clean, base, config.epsilon);
            rec.mask = m.mask;
            rec.spec_json = record_spec_json(rec);
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    auto f = io::open_out(path);
    io::write_magic(f, kMagic);
    io::write_pod<uint16_t>(f, kVersion);
    io::write_pod<uint32_t>(f, static_cast<uint32_t>(ds.records.size()));
    io::write_pod<uint32_t>(f, ds.n_samples);
    io::write_pod<uint16_t>(f, ds.n_classes);
    io::write_pod<double>(f, ds.sample_rate_hz);
    io::write_pod<double>(f, ds.epsilon);
    for (const SignalRecord& rec : ds.records) {
        io::write_pod<uint8_t>(f, rec.label);
        io::write_pod<float>(f, rec.snr_db);
        io::write_array(f, rec.x);
        io::write_array(f, rec.baseline);
        io::write_array(f, rec.mask);
        io::write_lp_string(f, rec.spec_json);
    }
    if (!f) throw IoError("dataset write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    auto f = io::open_in(path);
    io::expect_magic(f, kMagic, "PQDS");
    const auto version = io::read_pod<uint16_t>(f, "version");
    if (version != kVersion) throw IoError("unsupported PQDS version");
    Dataset ds;
    const auto n_records = io::read_pod<uint32_t>(f, "n_records");
    ds.n_samples = io::read_pod<uint32_t>(f, "n_samples");
    ds.n_classes = io::read_pod<uint16_t>(f, "n_classes");
    ds.sample_rate_hz = io::read_pod<double>(f, "sample_rate");
    ds.epsilon = io::read_pod<double>(f, "epsilon");
    ds.records.resize(n_records);
    for (SignalRecord& rec : ds.records) {
        rec.label = io::read_pod<uint8_t>(f, "label");
        rec.snr_db = io::read_pod<float>(f, "snr_db");
        io::read_array(f, rec.x, ds.n_samples, "x");
        io::read_array(f, rec.baseline, ds.n_samples, "baseline");
        io::read_array(f, rec.mask, ds.n_samples, "mask");
        rec.spec_json = io::read_lp_string(f, "spec json");
        parse_record_spec_json(rec);
        if (rec.label != static_cast<uint8_t>(rec.dist.class_id))
            throw IoError("dataset: record label does not match its spec");
    }
    return ds;
}

} // namespace pqx
