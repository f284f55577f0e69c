// pqx: synthetic power-quality corpus generation, CNN training, diagonal
// Laplace posteriors, occlusion explanations with uncertainty, and
// localization scoring, wired as one pipeline with per-run manifests.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pqx/bexplain.hpp"
#include "pqx/checkpoint.hpp"
#include "pqx/dataset.hpp"
#include "pqx/errors.hpp"
#include "pqx/hash.hpp"
#include "pqx/io.hpp"
#include "pqx/kmeans.hpp"
#include "pqx/laplace.hpp"
#include "pqx/manifest.hpp"
#include "pqx/metrics.hpp"
#include "pqx/network.hpp"
#include "pqx/occlusion.hpp"
#include "pqx/signal.hpp"
#include "pqx/svg.hpp"
#include "pqx/train.hpp"
#include "pqx/version.hpp"

namespace {

using nlohmann::ordered_json;

std::string run_dir_default() {
    const char* env = std::getenv("PQX_RUN_DIR");
    return env && *env ? env : ".";
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void finish_manifest(const std::string& run_dir, pqx::RunManifest m, const Timer& timer) {
    m.version = pqx::kVersion;
    m.wall_time_s = timer.seconds();
    pqx::append_manifest(run_dir, m);
}

std::vector<double> parse_csv_doubles(const std::string& csv, const char* what) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        try {
            out.push_back(std::stod(csv.substr(pos, next - pos)));
        } catch (const std::exception&) {
            throw pqx::ValidationError(std::string("bad number in ") + what + ": " + csv);
        }
        pos = next + 1;
    }
    if (out.empty()) throw pqx::ValidationError(std::string("empty ") + what);
    return out;
}

std::vector<double> parse_alphas(const std::string& csv) {
    const auto out = parse_csv_doubles(csv, "percentile list");
    for (double a : out)
        if (!(a > 0.0 && a < 100.0))
            throw pqx::ValidationError("percentiles must lie in (0,100)");
    return out;
}

pqx::Checkpoint load_ckpt_or_die(const std::string& path) { return pqx::load_checkpoint(path); }

struct OcclusionFlags {
    int window = 64;
    int stride = 8;
    std::string baseline = "zeros";
    double constant_value = 0.0;
    std::string policy = "map_prediction";

    void attach(CLI::App* cmd) {
        cmd->add_option("--window", window, "occlusion window size");
        cmd->add_option("--stride", stride, "occlusion stride");
        cmd->add_option("--baseline", baseline, "occlusion fill: zeros|nominal_sine|constant");
        cmd->add_option("--constant-value", constant_value, "fill value for --baseline constant");
        cmd->add_option("--policy", policy,
                        "target class: map_prediction|true_label|per_sample_prediction");
    }
    pqx::OcclusionConfig to_config() const {
        pqx::OcclusionConfig cfg;
        cfg.window_w = window;
        cfg.stride_v = stride;
        cfg.baseline_kind = pqx::baseline_kind_from_name(baseline);
        cfg.constant_value = constant_value;
        cfg.policy = pqx::target_policy_from_name(policy);
        return cfg;
    }
    ordered_json to_json() const {
        return {{"window", window},
                {"stride", stride},
                {"baseline", baseline},
                {"constant_value", constant_value},
                {"policy", policy}};
    }
};

int resolve_target(const pqx::OcclusionConfig& cfg, const pqx::Network& net,
                   const pqx::ModelParams& params, const pqx::SignalRecord& rec,
                   std::vector<double>& x) {
    if (cfg.policy == pqx::TargetClassPolicy::true_label) return rec.label;
    const auto probs = net.forward_one(params.theta, params.buffers, x, pqx::Mode::eval);
    return pqx::predict_class(probs);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"power-quality disturbance classification with uncertainty-aware explanations"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI config file (flags override)");
    app.set_version_flag("--version", pqx::kVersion);

    std::string run_dir = run_dir_default();
    app.add_option("--run-dir", run_dir, "manifest/lock directory (env PQX_RUN_DIR)")
        ->envname("PQX_RUN_DIR");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate the synthetic 16-class corpus");
    int gen_per_class = 200;
    std::string gen_snr = "20:50";
    uint64_t gen_seed = 0;
    double gen_epsilon = 1e-4;
    std::string gen_split = "0.8,0.1,0.1";
    std::string gen_out;
    gen->add_option("--per-class", gen_per_class, "records per class")->required();
    gen->add_option("--snr", gen_snr, "SNR range in dB as lo:hi");
    gen->add_option("--seed", gen_seed, "corpus seed");
    gen->add_option("--epsilon", gen_epsilon, "ground-truth threshold (pu)");
    gen->add_option("--split", gen_split, "train,val,test fractions");
    gen->add_option("--out", gen_out, "output dataset path")->required();

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the classifier (MAP estimation)");
    std::string train_data, train_arch = "desk", train_ckpt;
    int train_epochs = 30, train_batch = 32, train_halve = 10;
    double train_lr = 0.01, train_l2 = 1e-4;
    uint64_t train_seed = 0;
    train_cmd->add_option("--data", train_data, "dataset path")->required();
    train_cmd->add_option("--arch", train_arch, "architecture preset: desk|table1");
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--lr", train_lr, "initial learning rate");
    train_cmd->add_option("--l2", train_l2, "L2 penalty coefficient");
    train_cmd->add_option("--batch", train_batch, "batch size");
    train_cmd->add_option("--halve-every", train_halve, "epochs between learning-rate halvings");
    train_cmd->add_option("--seed", train_seed, "training seed");
    train_cmd->add_option("--ckpt", train_ckpt, "output checkpoint path")->required();

    // ---- laplace ----
    auto* la_cmd = app.add_subcommand("laplace", "fit the diagonal Laplace posterior");
    std::string la_ckpt, la_data, la_prior = "auto", la_kind = "fisher", la_out, la_grid;
    int la_tune_models = 20;
    uint64_t la_seed = 0;
    la_cmd->add_option("--ckpt", la_ckpt, "checkpoint path")->required();
    la_cmd->add_option("--data", la_data, "dataset path (curvature over the train split)")->required();
    la_cmd->add_option("--prior-precision", la_prior, "prior precision or 'auto'");
    la_cmd->add_option("--kind", la_kind, "curvature: fisher|ggn");
    la_cmd->add_option("--grid", la_grid, "auto-tune grid, comma separated (default 1e-4..1 x M)");
    la_cmd->add_option("--tune-models", la_tune_models, "sampled models per grid point");
    la_cmd->add_option("--seed", la_seed, "sampling seed for tuning");
    la_cmd->add_option("--out", la_out, "output posterior path")->required();

    // ---- explain ----
    auto* ex_cmd = app.add_subcommand("explain", "occlusion explanation for one record");
    std::string ex_ckpt, ex_la, ex_data, ex_prefix, ex_alphas = "5,25,50,75,95";
    int ex_index = 0, ex_samples = 100;
    uint64_t ex_seed = 0;
    OcclusionFlags ex_occ;
    ex_cmd->add_option("--ckpt", ex_ckpt, "checkpoint path")->required();
    ex_cmd->add_option("--la", ex_la, "posterior path (optional; enables B-explanations)");
    ex_cmd->add_option("--data", ex_data, "dataset path")->required();
    ex_cmd->add_option("--index", ex_index, "record index");
    ex_cmd->add_option("--samples", ex_samples, "ensemble size S");
    ex_cmd->add_option("--alphas", ex_alphas, "percentiles");
    ex_cmd->add_option("--seed", ex_seed, "ensemble seed");
    ex_occ.attach(ex_cmd);
    ex_cmd->add_option("--out-prefix", ex_prefix, "output path prefix")->required();

    // ---- eval ----
    auto* ev_cmd = app.add_subcommand("eval", "RMA/IoU scoring against ground-truth masks");
    std::string ev_ckpt, ev_la, ev_data, ev_split = "test", ev_alphas = "5,25,50,75,95", ev_out;
    int ev_samples = 100, ev_models = 100;
    uint64_t ev_seed = 0;
    OcclusionFlags ev_occ;
    ev_cmd->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev_cmd->add_option("--la", ev_la, "posterior path (optional)");
    ev_cmd->add_option("--data", ev_data, "dataset path")->required();
    ev_cmd->add_option("--split", ev_split, "train|val|test");
    ev_cmd->add_option("--alphas", ev_alphas, "percentiles");
    ev_cmd->add_option("--samples", ev_samples, "ensemble size S per record");
    ev_cmd->add_option("--models", ev_models, "sampled models for ensemble accuracy");
    ev_cmd->add_option("--seed", ev_seed, "evaluation seed");
    ev_occ.attach(ev_cmd);
    ev_cmd->add_option("--out", ev_out, "report CSV path (JSON written alongside)")->required();

    // ---- cluster ----
    auto* cl_cmd = app.add_subcommand("cluster", "k-means over a sampled explanation ensemble");
    std::string cl_ensemble, cl_prefix;
    int cl_k = 5;
    uint64_t cl_seed = 0;
    cl_cmd->add_option("--ensemble", cl_ensemble, "ensemble (.pqex) path")->required();
    cl_cmd->add_option("--k", cl_k, "number of clusters");
    cl_cmd->add_option("--seed", cl_seed, "k-means seed");
    cl_cmd->add_option("--out-prefix", cl_prefix, "output path prefix")->required();

    // ---- verify ----
    auto* vf_cmd = app.add_subcommand("verify", "re-hash files recorded in run manifests");
    std::string vf_manifest;
    bool vf_last = false;
    vf_cmd->add_option("--manifest", vf_manifest, "manifests.jsonl path (default <run-dir>)");
    vf_cmd->add_flag("--last", vf_last, "verify only the most recent manifest");

    CLI11_PARSE(app, argc, argv);
    const std::string cmd_name = app.get_subcommands().front()->get_name();

    try {
        Timer timer;
        pqx::RunManifest manifest;
        manifest.command = cmd_name;

        if (gen->parsed()) {
            pqx::RunLock lock(run_dir);
            pqx::GenConfig cfg;
            cfg.per_class = gen_per_class;
            const auto colon = gen_snr.find(':');
            if (colon == std::string::npos)
                throw pqx::ValidationError("--snr expects lo:hi");
            cfg.snr_lo_db = std::stod(gen_snr.substr(0, colon));
            cfg.snr_hi_db = std::stod(gen_snr.substr(colon + 1));
            cfg.seed = gen_seed;
            cfg.epsilon = gen_epsilon;
            const auto fr = parse_csv_doubles(gen_split, "split fractions");
            if (fr.size() != 3) throw pqx::ValidationError("--split expects three fractions");
            cfg.split = {fr[0], fr[1], fr[2]};

            const pqx::Dataset ds = pqx::generate_corpus(cfg);
            pqx::save_dataset(ds, gen_out);

            manifest.seed = gen_seed;
            ordered_json cj;
            cj["per_class"] = gen_per_class;
            cj["snr"] = gen_snr;
            cj["epsilon"] = gen_epsilon;
            cj["split"] = gen_split;
            cj["out"] = gen_out;
            cj["param_ranges"] = ordered_json::object();
            for (int c = 0; c < pqx::kNumClasses; ++c) {
                ordered_json rj = ordered_json::object();
                for (const auto& [k, r] : pqx::param_ranges(static_cast<pqx::DisturbanceClass>(c)))
                    rj[k] = {r.first, r.second};
                cj["param_ranges"][pqx::class_name(static_cast<pqx::DisturbanceClass>(c))] = rj;
            }
            manifest.config_json = cj.dump();
            manifest.outputs[gen_out] = pqx::hex(pqx::sha256_file(gen_out));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "gen: wrote " << ds.records.size() << " records to " << gen_out << "\n";
        } else if (train_cmd->parsed()) {
            pqx::RunLock lock(run_dir);
            const pqx::Dataset ds = pqx::load_dataset(train_data);
            pqx::ArchDescriptor arch;
            if (train_arch == "desk")
                arch = pqx::ArchDescriptor::desk(static_cast<int>(ds.n_samples), ds.n_classes);
            else if (train_arch == "table1")
                arch = pqx::ArchDescriptor::table1(static_cast<int>(ds.n_samples), ds.n_classes);
            else
                throw pqx::ValidationError("unknown architecture preset: " + train_arch);
            const pqx::Network net(arch);

            pqx::TrainConfig tc;
            tc.lr0 = train_lr;
            tc.l2_coeff = train_l2;
            tc.epochs = train_epochs;
            tc.batch_size = train_batch;
            tc.lr_halving_period_epochs = train_halve;
            tc.seed = train_seed;
            const pqx::TrainResult result = pqx::train(net, ds, tc);
            pqx::save_checkpoint({result.params, result.log}, train_ckpt);

            manifest.seed = train_seed;
            manifest.config_json = ordered_json{{"data", train_data},
                                                {"arch", train_arch},
                                                {"epochs", train_epochs},
                                                {"lr", train_lr},
                                                {"l2", train_l2},
                                                {"batch", train_batch},
                                                {"halve_every", train_halve},
                                                {"ckpt", train_ckpt}}
                                       .dump();
            manifest.inputs[train_data] = pqx::hex(pqx::sha256_file(train_data));
            manifest.outputs[train_ckpt] = pqx::hex(pqx::sha256_file(train_ckpt));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "train: best val acc " << result.log.best_val_acc << " at epoch "
                      << result.log.best_epoch << ", checkpoint " << train_ckpt << "\n";
        } else if (la_cmd->parsed()) {
            pqx::RunLock lock(run_dir);
            const pqx::Checkpoint ckpt = load_ckpt_or_die(la_ckpt);
            const pqx::Dataset ds = pqx::load_dataset(la_data);
            const pqx::Network net(ckpt.params.arch);
            const pqx::CurvatureKind kind = pqx::curvature_kind_from_name(la_kind);
            const pqx::ClassifierCurvature source(net, ckpt.params.buffers, ds, pqx::Split::train);

            double precision;
            ordered_json tune_log;
            if (la_prior == "auto") {
                std::vector<double> grid;
                if (!la_grid.empty()) {
                    grid = parse_csv_doubles(la_grid, "precision grid");
                } else {
                    const double m = static_cast<double>(source.sample_count());
                    grid = {1e-4 * m, 1e-3 * m, 1e-2 * m, 1e-1 * m, m, 10.0 * m};
                }
                const pqx::PriorTuneResult tuned = pqx::tune_prior_precision(
                    net, ckpt.params.theta, ckpt.params.buffers, source, kind, ds,
                    pqx::Split::val, grid, la_tune_models, la_seed);
                precision = tuned.prior_precision;
                for (const auto& [p, acc] : tuned.grid_accuracy)
                    tune_log.push_back({{"prior_precision", p}, {"val_accuracy", acc}});
            } else {
                precision = std::stod(la_prior);
            }

            pqx::LaplacePosterior post =
                pqx::fit_laplace(ckpt.params.theta, source, precision, kind);
            post.dataset_fingerprint = pqx::hex(pqx::sha256_file(la_data));
            pqx::save_posterior(post, la_out, pqx::sha256_file(la_ckpt));

            manifest.seed = la_seed;
            ordered_json cj{{"ckpt", la_ckpt},
                            {"data", la_data},
                            {"prior_precision", la_prior},
                            {"resolved_prior_precision", precision},
                            {"kind", la_kind},
                            {"tune_models", la_tune_models},
                            {"out", la_out}};
            if (!tune_log.empty()) cj["tuning"] = tune_log;
            manifest.config_json = cj.dump();
            manifest.inputs[la_ckpt] = pqx::hex(pqx::sha256_file(la_ckpt));
            manifest.inputs[la_data] = post.dataset_fingerprint;
            manifest.outputs[la_out] = pqx::hex(pqx::sha256_file(la_out));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "laplace: prior precision " << precision << ", posterior " << la_out
                      << "\n";
        } else if (ex_cmd->parsed()) {
            pqx::RunLock lock(run_dir);
            const pqx::Checkpoint ckpt = load_ckpt_or_die(ex_ckpt);
            const pqx::Dataset ds = pqx::load_dataset(ex_data);
            const pqx::Network net(ckpt.params.arch);
            if (ex_index < 0 || static_cast<size_t>(ex_index) >= ds.records.size())
                throw pqx::ValidationError("--index out of range");
            const pqx::SignalRecord& rec = ds.records[static_cast<size_t>(ex_index)];
            const auto alphas = parse_alphas(ex_alphas);
            const pqx::OcclusionConfig occ = ex_occ.to_config();

            std::vector<double> x(rec.x.begin(), rec.x.end());
            std::vector<double> nominal(rec.baseline.begin(), rec.baseline.end());
            const auto baseline_values = pqx::resolve_baseline(occ, x, nominal);
            const int target = resolve_target(occ, net, ckpt.params, rec, x);

            pqx::RelevanceVector map_rv = pqx::relevance_map(
                net, ckpt.params.theta, ckpt.params.buffers, x, baseline_values, target, occ);
            map_rv.model_tag = "MAP";
            pqx::io::spit(ex_prefix + ".relevance.csv", pqx::relevance_to_csv(map_rv));
            pqx::io::spit(ex_prefix + ".relevance.json", pqx::relevance_to_json(map_rv));
            manifest.outputs[ex_prefix + ".relevance.csv"] = "";
            manifest.outputs[ex_prefix + ".relevance.json"] = "";

            std::vector<pqx::HeatmapStrip> strips;
            strips.push_back({"MAP", map_rv.r});

            if (!ex_la.empty()) {
                const auto ckpt_hash = pqx::sha256_file(ex_ckpt);
                const pqx::LaplacePosterior post =
                    pqx::load_posterior(ex_la, ckpt.params.theta, &ckpt_hash);
                const int ens_target =
                    occ.policy == pqx::TargetClassPolicy::per_sample_prediction ? -1 : target;
                pqx::ExplanationEnsemble ens =
                    pqx::sample_explanations(net, post, ckpt.params.buffers, x, baseline_values,
                                             ex_samples, occ, ens_target, ex_seed);
                ens.posterior_ref = pqx::hex(pqx::sha256_file(ex_la));
                pqx::save_ensemble(ens, ex_prefix + ".ensemble.pqex");
                const pqx::BExplanation bx =
                    pqx::summarize(ens, alphas, /*with_variance=*/ex_samples >= 2);
                pqx::io::spit(ex_prefix + ".bexplanation.json", bx.to_json());
                manifest.outputs[ex_prefix + ".ensemble.pqex"] = "";
                manifest.outputs[ex_prefix + ".bexplanation.json"] = "";
                manifest.inputs[ex_la] = ens.posterior_ref;

                strips.push_back({"mean", bx.mean});
                if (!bx.variance.empty()) strips.push_back({"variance", bx.variance});
                for (double a : alphas) {
                    char label[32];
                    std::snprintf(label, sizeof(label), "alpha=%g", a);
                    strips.push_back({label, bx.percentiles.at(a)});
                }
            }
            pqx::io::spit(ex_prefix + ".svg", pqx::heatmap_svg(x, strips));
            manifest.outputs[ex_prefix + ".svg"] = "";
            for (auto& [path, digest] : manifest.outputs) digest = pqx::hex(pqx::sha256_file(path));

            manifest.seed = ex_seed;
            ordered_json cj{{"ckpt", ex_ckpt}, {"la", ex_la},          {"data", ex_data},
                            {"index", ex_index}, {"samples", ex_samples}, {"alphas", ex_alphas},
                            {"out_prefix", ex_prefix}};
            cj["occlusion"] = ex_occ.to_json();
            manifest.config_json = cj.dump();
            manifest.inputs[ex_ckpt] = pqx::hex(pqx::sha256_file(ex_ckpt));
            manifest.inputs[ex_data] = pqx::hex(pqx::sha256_file(ex_data));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "explain: record " << ex_index << " target class " << target
                      << ", outputs at " << ex_prefix << ".*\n";
        } else if (ev_cmd->parsed()) {
            pqx::RunLock lock(run_dir);
            const pqx::Checkpoint ckpt = load_ckpt_or_die(ev_ckpt);
            const pqx::Dataset ds = pqx::load_dataset(ev_data);
            const pqx::Network net(ckpt.params.arch);

            pqx::EvalConfig ec;
            ec.occlusion = ev_occ.to_config();
            ec.alphas = parse_alphas(ev_alphas);
            ec.ensemble_size = ev_samples;
            ec.accuracy_models = ev_models;
            ec.seed = ev_seed;
            ec.split = pqx::split_from_name(ev_split);

            pqx::LaplacePosterior post;
            const pqx::LaplacePosterior* post_ptr = nullptr;
            if (!ev_la.empty()) {
                const auto ckpt_hash = pqx::sha256_file(ev_ckpt);
                post = pqx::load_posterior(ev_la, ckpt.params.theta, &ckpt_hash);
                post_ptr = &post;
            }

            const pqx::EvalReport report = pqx::evaluate(net, ckpt.params, post_ptr, ds, ec);
            pqx::io::spit(ev_out, report.to_csv());
            const std::string json_path =
                std::filesystem::path(ev_out).replace_extension(".json").string();
            pqx::io::spit(json_path, report.to_json());

            manifest.seed = ev_seed;
            ordered_json cj{{"ckpt", ev_ckpt},     {"la", ev_la},         {"data", ev_data},
                            {"split", ev_split},   {"alphas", ev_alphas}, {"samples", ev_samples},
                            {"models", ev_models}, {"out", ev_out}};
            cj["occlusion"] = ev_occ.to_json();
            manifest.config_json = cj.dump();
            manifest.inputs[ev_ckpt] = pqx::hex(pqx::sha256_file(ev_ckpt));
            manifest.inputs[ev_data] = pqx::hex(pqx::sha256_file(ev_data));
            if (!ev_la.empty()) manifest.inputs[ev_la] = pqx::hex(pqx::sha256_file(ev_la));
            manifest.outputs[ev_out] = pqx::hex(pqx::sha256_file(ev_out));
            manifest.outputs[json_path] = pqx::hex(pqx::sha256_file(json_path));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "eval: MAP accuracy " << report.map_accuracy << ", report " << ev_out
                      << "\n";
        } else if (cl_cmd->parsed()) {
            pqx::RunLock lock(run_dir);
            const pqx::ExplanationEnsemble ens = pqx::load_ensemble(cl_ensemble);
            const pqx::ClusterResult res = pqx::cluster_explanations(ens, cl_k, cl_seed);
            pqx::io::spit(cl_prefix + ".cluster.json", pqx::cluster_to_json(res));
            pqx::io::spit(cl_prefix + ".cluster.svg", pqx::cluster_svg(res));

            manifest.seed = cl_seed;
            manifest.config_json = ordered_json{{"ensemble", cl_ensemble},
                                                {"k", cl_k},
                                                {"out_prefix", cl_prefix}}
                                       .dump();
            manifest.inputs[cl_ensemble] = pqx::hex(pqx::sha256_file(cl_ensemble));
            manifest.outputs[cl_prefix + ".cluster.json"] =
                pqx::hex(pqx::sha256_file(cl_prefix + ".cluster.json"));
            manifest.outputs[cl_prefix + ".cluster.svg"] =
                pqx::hex(pqx::sha256_file(cl_prefix + ".cluster.svg"));
            finish_manifest(run_dir, manifest, timer);
            std::cout << "cluster: k=" << res.k << " inertia " << res.inertia << ", outputs at "
                      << cl_prefix << ".cluster.*\n";
        } else if (vf_cmd->parsed()) {
            const std::string path = vf_manifest.empty()
                                         ? (std::filesystem::path(run_dir) / "manifests.jsonl").string()
                                         : vf_manifest;
            const auto manifests = pqx::read_manifests(path);
            if (manifests.empty()) throw pqx::IoError("no manifests found in " + path);
            size_t first = vf_last ? manifests.size() - 1 : 0;
            std::vector<std::string> problems;
            for (size_t i = first; i < manifests.size(); ++i) {
                for (const std::string& p : pqx::verify_manifest(manifests[i]))
                    problems.push_back(manifests[i].command + ": " + p);
            }
            if (!problems.empty()) {
                for (const std::string& p : problems) std::cerr << "error: verify: " << p << "\n";
                return 1;
            }
            std::cout << "verify: " << (manifests.size() - first) << " manifest(s) ok\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << cmd_name << ": " << e.what() << "\n";
        return 1;
    }
}
