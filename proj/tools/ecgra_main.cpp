// ecgra: ECG multi-label classification toolkit.
//
// Subcommands: ingest, preprocess, augment, train, predict, evaluate,
// gradcheck. Exit codes: 0 success, 1 usage/config error, 2 data error,
// 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ecgra/ecgra.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t env_seed_or(std::uint64_t fallback) {
    if (const char* env = std::getenv("ECGRA_SEED"))
        return ecgra::detail::parse_u64(env, "ECGRA_SEED");
    return fallback;
}

// Scans a runs directory for <pipeline>/<fold>/model.ckpt files.
ecgra::TrainedPool discover_pool(const fs::path& dir) {
    ecgra::TrainedPool pool;
    for (int pid = 1; pid <= 4; ++pid) {
        const fs::path pdir = dir / std::to_string(pid);
        if (!fs::is_directory(pdir)) continue;
        std::vector<int> folds;
        for (const auto& entry : fs::directory_iterator(pdir)) {
            if (!entry.is_directory()) continue;
            try {
                folds.push_back(std::stoi(entry.path().filename().string()));
            } catch (const std::exception&) {
                continue;
            }
        }
        std::sort(folds.begin(), folds.end());
        for (int f : folds) {
            const fs::path ckpt = pdir / std::to_string(f) / "model.ckpt";
            if (fs::exists(ckpt)) pool.entries.push_back({pid, f, ckpt});
        }
    }
    if (pool.entries.empty())
        throw ecgra::DataError("no checkpoints found under " + dir.string());
    return pool;
}

void cmd_ingest(const std::string& manifest, const std::string& labels, const std::string& out) {
    const ecgra::Dataset ds = ecgra::load_dataset(manifest, labels);
    std::cout << "records: " << ds.size() << '\n';
    std::cout << "ids:";
    for (const auto& r : ds.records) std::cout << ' ' << r.recording.id;
    std::cout << '\n';
    const auto counts = ds.class_counts();
    std::cout << "class counts:\n";
    for (int j = 0; j < ecgra::kNumClasses; ++j)
        std::cout << "  " << ecgra::kClassNames[j] << ' ' << counts[j] << '\n';
    const ecgra::LengthHistogram hist = ecgra::length_histogram(ds);
    std::cout << "length histogram (seconds: count):\n";
    for (int b = 1; b <= ecgra::kMaxHistogramSeconds; ++b)
        if (hist.buckets[b]) std::cout << "  " << b << ": " << hist.buckets[b] << '\n';
    if (!out.empty()) {
        ecgra::save_dataset(ds, out);
        std::cout << "wrote validated dataset to " << out << '\n';
    }
}

void cmd_preprocess(const std::string& manifest, const std::string& labels, const std::string& out,
                    int pipeline, std::size_t window, bool no_denoise, bool zscore,
                    std::size_t jobs) {
    ecgra::PipelineConfig cfg;
    if (pipeline > 0) {
        cfg = ecgra::PipelineConfig::defaults_for(pipeline);
    } else {
        cfg.pipeline_id = 2; // explicit-flag mode: free-form stage selection
        cfg.baseline_window = window;
        cfg.denoise = !no_denoise;
        cfg.normalization = zscore ? ecgra::Normalization::zscore : ecgra::Normalization::none;
    }
    const ecgra::Dataset ds = ecgra::load_dataset(manifest, labels);
    const ecgra::Dataset prepared = ecgra::preprocess_dataset(ds, cfg, jobs);
    ecgra::save_dataset(prepared, out);
    std::cout << "preprocessed " << prepared.size() << " recordings (baseline window "
              << (cfg.denoise ? std::to_string(cfg.baseline_window) : std::string("off"))
              << ", wavelet " << (cfg.denoise ? "on" : "off") << ", normalization "
              << (cfg.normalization == ecgra::Normalization::zscore ? "zscore" : "none")
              << ") -> " << out << '\n';
}

void cmd_augment(const std::string& manifest, const std::string& labels, const std::string& out,
                 const std::string& mode_name, std::size_t target, std::uint64_t seed) {
    ecgra::PlanMode mode;
    if (mode_name == "redistribute") mode = ecgra::PlanMode::redistribute;
    else if (mode_name == "balance") mode = ecgra::PlanMode::balance;
    else if (mode_name == "both") mode = ecgra::PlanMode::both;
    else throw ecgra::ConfigError("unknown augmentation mode '" + mode_name + "'");

    const ecgra::Dataset ds = ecgra::load_dataset(manifest, labels);
    const ecgra::AugmentationPlan plan = ecgra::build_plan(ds, mode);
    fs::create_directories(out);
    ecgra::write_plan_csv(plan, fs::path(out) / "plan.csv");
    const ecgra::Dataset augmented = ecgra::apply_plan(ds, plan, target, ecgra::Rng(seed));
    ecgra::save_dataset(augmented, out);
    std::cout << "plan entries: " << plan.entries.size() << ", emitted recordings: "
              << augmented.size() << " -> " << out << '\n';
}

struct TrainFlags {
    std::string config, manifest, labels, out_dir;
    std::uint64_t seed = 0;
    std::size_t jobs = 0, target_length = 0, batch_size = 0;
    int folds = 0, epochs = 0;
    std::vector<int> pipelines;
};

void cmd_train(const CLI::App* sub, const TrainFlags& flags) {
    ecgra::RunConfig cfg;
    cfg.apply_env();
    if (!flags.config.empty()) cfg.apply_file(flags.config);
    if (sub->count("--manifest")) cfg.manifest = flags.manifest;
    if (sub->count("--labels")) cfg.labels = flags.labels;
    if (sub->count("--out-dir")) cfg.out_dir = flags.out_dir;
    if (sub->count("--seed")) cfg.seed = flags.seed;
    if (sub->count("--jobs")) cfg.jobs = flags.jobs;
    if (sub->count("--folds")) cfg.folds = flags.folds;
    if (sub->count("--target-length")) cfg.target_length = flags.target_length;
    if (sub->count("--pipelines")) cfg.pipelines = flags.pipelines;
    if (sub->count("--epochs"))
        for (auto& [id, pc] : cfg.pipeline_cfgs) pc.epochs = flags.epochs;
    if (sub->count("--batch-size"))
        for (auto& [id, pc] : cfg.pipeline_cfgs) pc.batch_size = flags.batch_size;
    cfg.finalize();
    cfg.validate();
    if (cfg.manifest.empty() || cfg.labels.empty())
        throw ecgra::ConfigError("train requires --manifest and --labels (or a [data] section)");

    cfg.write_resolved();
    const ecgra::Dataset ds = ecgra::load_dataset(cfg.manifest, cfg.labels);
    const ecgra::FoldAssignment folds = ecgra::split_folds(ds, cfg.folds, cfg.seed);

    bool all_present = true;
    for (int pid : cfg.pipelines)
        for (int f = 0; f < cfg.folds && all_present; ++f)
            all_present = ecgra::detail::checkpoint_valid(
                ecgra::detail::fold_dir(cfg.out_dir, pid, f) / "model.ckpt", cfg.model);
    if (all_present) {
        std::cout << "all checkpoints present, nothing to train\n";
        return;
    }

    std::vector<ecgra::PipelineConfig> selected;
    for (int pid : cfg.pipelines) selected.push_back(cfg.pipeline_cfgs.at(pid));
    const ecgra::TrainedPool pool =
        ecgra::train_all(ds, cfg.model, selected, folds, cfg.out_dir, cfg.effective_jobs());
    std::cout << "trained pool: " << pool.entries.size() << " checkpoints under " << cfg.out_dir
              << '\n';
}

// Shared by predict/evaluate: run the ensemble over a dataset.
ecgra::PredictionSet run_ensemble(const std::string& pool_dir, const std::string& config_path,
                                  const ecgra::Dataset& ds, double tau, std::uint64_t seed,
                                  std::size_t jobs) {
    const ecgra::TrainedPool pool = discover_pool(pool_dir);
    std::map<int, ecgra::PipelineConfig> pipeline_cfgs;
    if (!config_path.empty()) {
        ecgra::RunConfig rc;
        rc.apply_env();
        rc.apply_file(config_path);
        pipeline_cfgs = rc.pipeline_cfgs;
    } else {
        for (int id = 1; id <= 4; ++id) pipeline_cfgs[id] = ecgra::PipelineConfig::defaults_for(id);
    }
    const ecgra::Ensemble ensemble = ecgra::Ensemble::load(pool, pipeline_cfgs);
    std::cout << "ensemble of " << ensemble.size() << " models\n";
    return ensemble.predict_dataset(ds, ecgra::Rng(seed).derive("predict"), tau,
                                    jobs == 0 ? ecgra::default_jobs() : jobs);
}

void cmd_predict(const std::string& pool_dir, const std::string& config_path,
                 const std::string& manifest, const std::string& labels, const std::string& out,
                 double tau, std::uint64_t seed, std::size_t jobs) {
    const ecgra::Dataset ds = labels.empty() ? ecgra::load_dataset_unlabeled(manifest)
                                             : ecgra::load_dataset(manifest, labels);
    const ecgra::PredictionSet preds = run_ensemble(pool_dir, config_path, ds, tau, seed, jobs);
    ecgra::write_predictions_csv(preds, out);
    std::cout << "wrote " << preds.ids.size() << " predictions to " << out << '\n';
}

void cmd_evaluate(const std::string& pool_dir, const std::string& predictions_path,
                  const std::string& config_path, const std::string& manifest,
                  const std::string& labels, const std::string& out, double tau,
                  std::uint64_t seed, std::size_t jobs) {
    if (labels.empty())
        throw ecgra::ConfigError(
            "evaluate requires --labels: ground-truth labels are missing for this dataset");

    std::map<std::string, ecgra::LabelSet> truths;
    for (const auto& [id, set] : ecgra::read_labels_csv(labels)) truths[id] = set;

    ecgra::PredictionSet preds;
    int num_classes = ecgra::kNumClasses;
    if (!predictions_path.empty()) {
        preds = ecgra::read_predictions_csv(predictions_path);
        num_classes = preds.probs.empty() ? ecgra::kNumClasses
                                          : static_cast<int>(preds.probs[0].size());
        for (std::size_t i = 0; i < preds.ids.size(); ++i)
            preds.labels[i] = ecgra::threshold_labels(preds.probs[i], tau);
    } else {
        if (manifest.empty())
            throw ecgra::ConfigError("evaluate needs --manifest (with --pool) or --predictions");
        const ecgra::Dataset ds = ecgra::load_dataset(manifest, labels);
        preds = run_ensemble(pool_dir, config_path, ds, tau, seed, jobs);
        const fs::path preds_out = fs::path(out).parent_path() / "predictions.csv";
        ecgra::write_predictions_csv(preds, preds_out);
        num_classes = preds.probs.empty() ? ecgra::kNumClasses
                                          : static_cast<int>(preds.probs[0].size());
    }
    // metrics cover exactly the predicted ids; every one needs a truth row
    std::map<std::string, ecgra::LabelSet> used;
    for (const auto& [id, set] : preds.label_map()) {
        const auto it = truths.find(id);
        if (it == truths.end())
            throw ecgra::DataError("no ground-truth label for id '" + id + "'");
        used[id] = it->second;
    }
    const ecgra::MetricsReport report =
        ecgra::compute_metrics(preds.label_map(), used, num_classes);
    ecgra::write_report_csv(report, out);
    std::cout << ecgra::render_report_text(report);
    std::cout << "wrote report to " << out << '\n';
}

int cmd_gradcheck(std::uint64_t seed, const std::string& json_path, const std::string& fault,
                  double tolerance) {
    ecgra::GradCheckOptions opt;
    opt.corrupt = fault;
    ecgra::BatteryReport report = ecgra::run_gradcheck_battery(seed, opt);
    report.tolerance = tolerance;

    std::string last;
    double worst = 0.0;
    bool all_pass = true;
    for (const auto& e : report.entries) {
        if (e.check != last) {
            if (!last.empty())
                std::cout << (worst < tolerance ? "pass " : "FAIL ") << last << " max "
                          << worst << '\n';
            last = e.check;
            worst = 0.0;
        }
        worst = std::max(worst, e.max_rel_error);
        if (e.max_rel_error >= tolerance) all_pass = false;
    }
    if (!last.empty())
        std::cout << (worst < tolerance ? "pass " : "FAIL ") << last << " max " << worst << '\n';

    if (!json_path.empty()) {
        json doc;
        doc["seed"] = seed;
        doc["tolerance"] = tolerance;
        doc["pass"] = all_pass;
        doc["checks"] = json::array();
        for (const auto& e : report.entries)
            doc["checks"].push_back({{"check", e.check},
                                     {"tensor", e.tensor},
                                     {"max_rel_error", e.max_rel_error},
                                     {"checked", e.checked}});
        std::ofstream out(json_path);
        if (!out) throw ecgra::DataError("cannot write " + json_path);
        out << doc.dump(2) << '\n';
    }
    std::cout << (all_pass ? "gradient checks passed" : "gradient checks FAILED") << '\n';
    return all_pass ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG multi-label classification toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print its statistics");
    std::string in_manifest, in_labels, in_out;
    ingest->add_option("--manifest", in_manifest, "manifest.csv path")->required();
    ingest->add_option("--labels", in_labels, "labels.csv path")->required();
    ingest->add_option("--out", in_out, "also write the validated dataset here");
    ingest->callback([&] { cmd_ingest(in_manifest, in_labels, in_out); });

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "Apply a pipeline's conditioning stage");
    std::string pp_manifest, pp_labels, pp_out;
    int pp_pipeline = 0;
    std::size_t pp_window = 500, pp_jobs = 0;
    bool pp_no_denoise = false, pp_zscore = false;
    prep->add_option("--manifest", pp_manifest, "manifest.csv path")->required();
    prep->add_option("--labels", pp_labels, "labels.csv path")->required();
    prep->add_option("--out", pp_out, "output dataset directory")->required();
    auto* ppl = prep->add_option("--pipeline", pp_pipeline, "pipeline id 1..4")
                    ->check(CLI::Range(1, 4));
    prep->add_option("--baseline-window", pp_window, "moving-average window (samples)")
        ->excludes(ppl);
    prep->add_flag("--no-denoise", pp_no_denoise, "skip baseline removal and wavelet shrinkage")
        ->excludes(ppl);
    prep->add_flag("--zscore", pp_zscore, "z-score each lead")->excludes(ppl);
    prep->add_option("--jobs", pp_jobs, "worker threads (0 = all cores)");
    prep->callback([&] {
        cmd_preprocess(pp_manifest, pp_labels, pp_out, pp_pipeline, pp_window, pp_no_denoise,
                       pp_zscore, pp_jobs == 0 ? ecgra::default_jobs() : pp_jobs);
    });

    // augment
    auto* aug = app.add_subcommand("augment", "Build and apply an augmentation plan");
    std::string ag_manifest, ag_labels, ag_out, ag_mode = "both";
    std::size_t ag_target = ecgra::kDefaultTargetLength;
    std::uint64_t ag_seed = env_seed_or(0);
    aug->add_option("--manifest", ag_manifest, "manifest.csv path")->required();
    aug->add_option("--labels", ag_labels, "labels.csv path")->required();
    aug->add_option("--out", ag_out, "output dataset directory")->required();
    aug->add_option("--mode", ag_mode, "redistribute | balance | both");
    aug->add_option("--target-length", ag_target, "unified length in samples");
    aug->add_option("--seed", ag_seed, "window placement seed");
    aug->callback([&] { cmd_augment(ag_manifest, ag_labels, ag_out, ag_mode, ag_target, ag_seed); });

    // train
    auto* train = app.add_subcommand("train", "Train the cross-validated pipeline pool");
    TrainFlags tf;
    train->add_option("--config", tf.config, "sectioned key=value config file");
    train->add_option("--manifest", tf.manifest, "manifest.csv path");
    train->add_option("--labels", tf.labels, "labels.csv path");
    train->add_option("--out-dir", tf.out_dir, "runs directory");
    train->add_option("--seed", tf.seed, "master seed");
    train->add_option("--jobs", tf.jobs, "worker threads (0 = all cores)");
    train->add_option("--folds", tf.folds, "cross-validation folds");
    train->add_option("--target-length", tf.target_length, "unified length in samples");
    train->add_option("--epochs", tf.epochs, "override epochs for every pipeline");
    train->add_option("--batch-size", tf.batch_size, "override batch size for every pipeline");
    train->add_option("--pipelines", tf.pipelines, "pipelines to run")->delimiter(',');
    train->callback([&] { cmd_train(train, tf); });

    // predict
    auto* pred = app.add_subcommand("predict", "Ensemble predictions for a dataset");
    std::string pr_pool = "runs", pr_config, pr_manifest, pr_labels, pr_out = "predictions.csv";
    double pr_tau = 0.5;
    std::uint64_t pr_seed = env_seed_or(0);
    std::size_t pr_jobs = 0;
    pred->add_option("--pool", pr_pool, "runs directory with checkpoints");
    pred->add_option("--config", pr_config, "config file for pipeline stages");
    pred->add_option("--manifest", pr_manifest, "manifest.csv path")->required();
    pred->add_option("--labels", pr_labels, "labels.csv (optional for predict)");
    pred->add_option("--out", pr_out, "predictions.csv output path");
    pred->add_option("--tau", pr_tau, "decision threshold")->check(CLI::Range(0.0, 1.0));
    pred->add_option("--seed", pr_seed, "window placement seed");
    pred->add_option("--jobs", pr_jobs, "worker threads (0 = all cores)");
    pred->callback([&] {
        cmd_predict(pr_pool, pr_config, pr_manifest, pr_labels, pr_out, pr_tau, pr_seed, pr_jobs);
    });

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Metric report for predictions vs ground truth");
    std::string ev_pool = "runs", ev_preds, ev_config, ev_manifest, ev_labels,
                ev_out = "report.csv";
    double ev_tau = 0.5;
    std::uint64_t ev_seed = env_seed_or(0);
    std::size_t ev_jobs = 0;
    eval->add_option("--pool", ev_pool, "runs directory with checkpoints");
    eval->add_option("--predictions", ev_preds, "reuse an existing predictions.csv");
    eval->add_option("--config", ev_config, "config file for pipeline stages");
    eval->add_option("--manifest", ev_manifest, "manifest.csv path");
    eval->add_option("--labels", ev_labels, "labels.csv path with ground truth");
    eval->add_option("--out", ev_out, "report.csv output path");
    eval->add_option("--tau", ev_tau, "decision threshold")->check(CLI::Range(0.0, 1.0));
    eval->add_option("--seed", ev_seed, "window placement seed");
    eval->add_option("--jobs", ev_jobs, "worker threads (0 = all cores)");
    eval->callback([&] {
        cmd_evaluate(ev_pool, ev_preds, ev_config, ev_manifest, ev_labels, ev_out, ev_tau,
                     ev_seed, ev_jobs);
    });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference checks of every primitive");
    std::uint64_t gc_seed = 7;
    std::string gc_json, gc_fault;
    double gc_tol = 1e-3;
    gc->add_option("--seed", gc_seed, "battery seed");
    gc->add_option("--json", gc_json, "write a JSON report here");
    gc->add_option("--inject-fault", gc_fault,
                   "corrupt gradients of tensors whose name contains this substring");
    gc->add_option("--tolerance", gc_tol, "max relative error allowed");
    gc->callback([&] { rc = cmd_gradcheck(gc_seed, gc_json, gc_fault, gc_tol); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const ecgra::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ecgra::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const ecgra::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
