#include <catch2/catch_amalgamated.hpp>

#include <ecgra/ecgra.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace ecgra;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("ecgra_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

struct CliResult {
    int code = -1;
    std::string out, err;
};

// Runs the installed binary through the shell, capturing both streams.
CliResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path();
    const fs::path out = dir / ("ecgra_cli_out_" + std::to_string(++counter));
    const fs::path err = dir / ("ecgra_cli_err_" + std::to_string(counter));
    const std::string cmd = (env.empty() ? "" : env + " ") + std::string("\"") + ECGRA_CLI_PATH +
                            "\" " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

// 12-lead dataset on disk; same two-tone construction as the train tests.
fs::path write_cli_dataset(const std::string& name, int n, std::size_t len,
                           std::uint64_t seed, std::size_t long_one = 0) {
    Dataset ds;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        Dataset::Record r;
        r.recording.id = "c" + std::to_string(i);
        r.recording.fs = 100.0;
        r.recording.leads.resize(12);
        const int kind = i % 3;
        r.labels = LabelSet::from_bits(kind == 0 ? 1u : kind == 1 ? 2u : 3u);
        const std::size_t this_len = (i == 0 && long_one) ? long_one : len;
        for (auto& lead : r.recording.leads) {
            lead.resize(this_len);
            for (std::size_t t = 0; t < this_len; ++t) {
                const double x = static_cast<double>(t) / 100.0;
                double v = 0.0;
                if (kind != 1) v += std::sin(2.0 * M_PI * 2.0 * x);
                if (kind != 0) v += 0.8 * std::sin(2.0 * M_PI * 11.0 * x);
                lead[t] = v + 0.05 * rng.gaussian();
            }
        }
        ds.records.push_back(std::move(r));
    }
    const fs::path dir = fresh_dir(name);
    save_dataset(ds, dir);
    return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST_CASE("ingest prints counts and the clamped length histogram", "[cli]") {
    // first recording stretched to 45 s: it must land in the top (30 s) bucket
    const fs::path dir = write_cli_dataset("cli_ingest", 5, 600, 3, 4500);
    const auto r = run_cli("ingest --manifest " + q(dir / "manifest.csv") + " --labels " +
                           q(dir / "labels.csv"));
    INFO(r.err);
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("records: 5") != std::string::npos);
    REQUIRE(r.out.find("Normal 3") != std::string::npos); // kinds 0 and 2
    REQUIRE(r.out.find("AF 3") != std::string::npos);     // kinds 1 and 2
    REQUIRE(r.out.find("30: 1") != std::string::npos);    // the 45 s outlier
    REQUIRE(r.out.find("6: 4") != std::string::npos);     // four 6 s recordings
    fs::remove_all(dir);
}

TEST_CASE("ingest rejects a broken manifest with exit code 2", "[cli]") {
    const fs::path dir = write_cli_dataset("cli_broken", 2, 400, 5);
    // claim the wrong length for c0
    std::string manifest = slurp(dir / "manifest.csv");
    const auto pos = manifest.find(",400");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 4, ",399");
    {
        std::ofstream out(dir / "manifest.csv");
        out << manifest;
    }
    const auto r = run_cli("ingest --manifest " + q(dir / "manifest.csv") + " --labels " +
                           q(dir / "labels.csv"));
    REQUIRE(r.code == 2);
    REQUIRE(r.err.find("data error") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("usage problems exit with code 1", "[cli]") {
    REQUIRE(run_cli("frobnicate").code == 1);
    REQUIRE(run_cli("ingest").code == 1); // missing required options
    REQUIRE(run_cli("").code == 1);      // a subcommand is required
    const auto help = run_cli("--help");
    REQUIRE(help.code == 0);
    REQUIRE(help.out.find("ingest") != std::string::npos);
}

TEST_CASE("preprocess pipeline four equals a plain z-score", "[cli]") {
    const fs::path dir = write_cli_dataset("cli_prep", 3, 600, 7);
    const fs::path out = fs::temp_directory_path() / "ecgra_test_cli_prep_out";
    fs::remove_all(out);
    const auto r = run_cli("preprocess --manifest " + q(dir / "manifest.csv") + " --labels " +
                           q(dir / "labels.csv") + " --out " + q(out) + " --pipeline 4");
    INFO(r.err);
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("normalization zscore") != std::string::npos);

    const Dataset raw = load_dataset(dir / "manifest.csv", dir / "labels.csv");
    const Dataset processed = load_dataset(out / "manifest.csv", out / "labels.csv");
    REQUIRE(processed.size() == raw.size());
    for (std::size_t i = 0; i < raw.records.size(); ++i)
        REQUIRE(processed.records[i].recording.leads ==
                zscore_normalize(raw.records[i].recording).leads);
    fs::remove_all(dir);
    fs::remove_all(out);
}

TEST_CASE("augment writes a plan and is reproducible under a fixed seed", "[cli]") {
    const fs::path dir = write_cli_dataset("cli_aug", 6, 600, 9);
    const fs::path out1 = fs::temp_directory_path() / "ecgra_test_cli_aug1";
    const fs::path out2 = fs::temp_directory_path() / "ecgra_test_cli_aug2";
    const fs::path out3 = fs::temp_directory_path() / "ecgra_test_cli_aug3";
    for (const auto& d : {out1, out2, out3}) fs::remove_all(d);

    const std::string base = "augment --manifest " + q(dir / "manifest.csv") + " --labels " +
                             q(dir / "labels.csv") + " --mode both --target-length 64";
    const auto r1 = run_cli(base + " --out " + q(out1) + " --seed 123");
    INFO(r1.err);
    REQUIRE(r1.code == 0);
    REQUIRE(fs::exists(out1 / "plan.csv"));
    const AugmentationPlan plan = read_plan_csv(out1 / "plan.csv");
    REQUIRE_FALSE(plan.entries.empty());
    const Dataset augmented = load_dataset(out1 / "manifest.csv", out1 / "labels.csv");
    std::size_t planned = 0;
    for (const auto& e : plan.entries) planned += e.copies;
    REQUIRE(augmented.size() == planned);
    for (const auto& rec : augmented.records) REQUIRE(rec.recording.length() == 64);

    // same seed via flag, then via the environment, must give identical bytes
    const auto r2 = run_cli(base + " --out " + q(out2) + " --seed 123");
    REQUIRE(r2.code == 0);
    REQUIRE(slurp(out1 / "manifest.csv") == slurp(out2 / "manifest.csv"));
    const auto r3 = run_cli(base + " --out " + q(out3), "ECGRA_SEED=123");
    REQUIRE(r3.code == 0);
    for (const auto& rec : augmented.records) {
        std::string fname = rec.recording.id;
        std::replace(fname.begin(), fname.end(), '#', '_');
        fname += ".csv";
        REQUIRE(slurp(out1 / fname) == slurp(out2 / fname));
        REQUIRE(slurp(out1 / fname) == slurp(out3 / fname));
    }
    for (const auto& d : {dir, out1, out2, out3}) fs::remove_all(d);
}

TEST_CASE("train, resume, predict and evaluate work end to end", "[cli]") {
    const fs::path dir = write_cli_dataset("cli_train", 6, 600, 11);
    const fs::path runs = fs::temp_directory_path() / "ecgra_test_cli_runs";
    fs::remove_all(runs);
    const fs::path cfg_path = dir / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "[run]\n"
               "seed = 5\n"
               "target_length = 64\n"
               "folds = 2\n"
               "pipelines = 1\n"
               "\n"
               "[model]\n"
               "num_modules = 2\n"
               "base_channels = 4\n"
               "channel_growth = 4\n"
               "kernel = 5\n"
               "attention_dim = 4\n"
               "dropout = 0.1\n"
               "\n"
               "[pipeline1]\n"
               "epochs = 2\n"
               "batch_size = 4\n"
               "lr = 0.005\n";
    }

    const std::string data_args = " --manifest " + q(dir / "manifest.csv") + " --labels " +
                                  q(dir / "labels.csv");
    const auto train1 = run_cli("train --config " + q(cfg_path) + data_args + " --out-dir " +
                                q(runs));
    INFO(train1.err);
    REQUIRE(train1.code == 0);
    REQUIRE(train1.out.find("trained pool: 2 checkpoints") != std::string::npos);
    REQUIRE(fs::exists(runs / "1" / "0" / "model.ckpt"));
    REQUIRE(fs::exists(runs / "1" / "1" / "model.ckpt"));
    REQUIRE(fs::exists(runs / "1" / "0" / "loss.csv"));

    // the resolved configuration is echoed for the record
    const std::string resolved = slurp(runs / "config.resolved");
    REQUIRE(resolved.find("[run]") != std::string::npos);
    REQUIRE(resolved.find("seed = 5") != std::string::npos);
    REQUIRE(resolved.find("folds = 2") != std::string::npos);
    REQUIRE(resolved.find("target_length = 64") != std::string::npos);
    REQUIRE(resolved.find("base_channels = 4") != std::string::npos);

    const auto train2 = run_cli("train --config " + q(cfg_path) + data_args + " --out-dir " +
                                q(runs));
    REQUIRE(train2.code == 0);
    REQUIRE(train2.out.find("all checkpoints present, nothing to train") != std::string::npos);

    // predictions for the same records
    const fs::path preds_csv = runs / "predictions.csv";
    const auto pred = run_cli("predict --pool " + q(runs) + " --config " + q(cfg_path) +
                              data_args + " --out " + q(preds_csv) + " --seed 5");
    INFO(pred.err);
    REQUIRE(pred.code == 0);
    REQUIRE(pred.out.find("ensemble of 2 models") != std::string::npos);
    const PredictionSet preds = read_predictions_csv(preds_csv);
    REQUIRE(preds.ids.size() == 6);
    REQUIRE(preds.probs[0].size() == 9);

    // rerunning the prediction is byte-stable
    const fs::path preds2_csv = runs / "predictions2.csv";
    const auto pred2 = run_cli("predict --pool " + q(runs) + " --config " + q(cfg_path) +
                               data_args + " --out " + q(preds2_csv) + " --seed 5");
    REQUIRE(pred2.code == 0);
    REQUIRE(slurp(preds_csv) == slurp(preds2_csv));

    // evaluation from the stored predictions; lowering tau can only raise recall
    const fs::path rep5 = runs / "report5.csv";
    const fs::path rep3 = runs / "report3.csv";
    const auto ev5 = run_cli("evaluate --predictions " + q(preds_csv) + " --labels " +
                             q(dir / "labels.csv") + " --out " + q(rep5) + " --tau 0.5");
    INFO(ev5.err);
    REQUIRE(ev5.code == 0);
    REQUIRE(ev5.out.find("overall F1") != std::string::npos);
    const auto ev3 = run_cli("evaluate --predictions " + q(preds_csv) + " --labels " +
                             q(dir / "labels.csv") + " --out " + q(rep3) + " --tau 0.3");
    REQUIRE(ev3.code == 0);
    const MetricsReport at5 = read_report_csv(rep5);
    const MetricsReport at3 = read_report_csv(rep3);
    REQUIRE(at5.num_classes() == 9);
    for (int j = 0; j < 9; ++j)
        REQUIRE(at3.scores[j].recall >= at5.scores[j].recall - 1e-9);

    // evaluate straight from the pool as well
    const fs::path rep_pool = runs / "report_pool.csv";
    const auto evp = run_cli("evaluate --pool " + q(runs) + " --config " + q(cfg_path) +
                             data_args + " --out " + q(rep_pool) + " --seed 5");
    REQUIRE(evp.code == 0);
    REQUIRE(fs::exists(rep_pool));
    REQUIRE(fs::exists(runs / "predictions.csv")); // side output of pool evaluation

    // ground truth is not optional
    const auto noref = run_cli("evaluate --predictions " + q(preds_csv) + " --out " + q(rep5));
    REQUIRE(noref.code == 1);
    REQUIRE(noref.err.find("config error") != std::string::npos);

    // an empty pool directory is a data problem
    const fs::path empty = fresh_dir("cli_empty_pool");
    const auto nopool = run_cli("predict --pool " + q(empty) + data_args + " --out " +
                                q(runs / "nope.csv"));
    REQUIRE(nopool.code == 2);
    fs::remove_all(dir);
    fs::remove_all(runs);
    fs::remove_all(empty);
}

TEST_CASE("gradcheck passes clean and catches an injected fault", "[cli]") {
    const fs::path dir = fresh_dir("cli_gradcheck");
    const fs::path json_path = dir / "gradcheck.json";
    const auto ok = run_cli("gradcheck --seed 3 --json " + q(json_path));
    INFO(ok.err);
    REQUIRE(ok.code == 0);
    REQUIRE(ok.out.find("gradient checks passed") != std::string::npos);
    REQUIRE(ok.out.find("pass conv1d") != std::string::npos);
    REQUIRE(ok.out.find("pass model") != std::string::npos);
    const std::string doc = slurp(json_path);
    REQUIRE(doc.find("\"pass\": true") != std::string::npos);
    REQUIRE(doc.find("\"max_rel_error\"") != std::string::npos);

    const auto bad = run_cli("gradcheck --seed 3 --inject-fault conv1d.weight");
    REQUIRE(bad.code == 3);
    REQUIRE(bad.out.find("gradient checks FAILED") != std::string::npos);
    REQUIRE(bad.out.find("FAIL conv1d") != std::string::npos);
    fs::remove_all(dir);
}
