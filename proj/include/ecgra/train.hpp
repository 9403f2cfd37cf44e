#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecgra/augment.hpp"
#include "ecgra/baseline.hpp"
#include "ecgra/checkpoint.hpp"
#include "ecgra/csv.hpp"
#include "ecgra/dataset.hpp"
#include "ecgra/error.hpp"
#include "ecgra/metrics.hpp"
#include "ecgra/model.hpp"
#include "ecgra/parallel.hpp"
#include "ecgra/rng.hpp"
#include "ecgra/wavelet.hpp"

namespace ecgra {

// ---------------------------------------------------------------------------
// Multi-label binary cross-entropy, mean over batch and classes.

// Probabilities in, loss plus gradient with respect to the pre-sigmoid
// logits out. The gradient of the mean BCE through a sigmoid
// is simply (p - t) / (batch * classes).
template <typename T>
inline std::pair<double, Tensor<T>> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets) {
    if (!probs.same_shape(targets))
        throw ConfigError("bce_loss: probs " + probs.shape_string() + " vs targets " +
                          targets.shape_string());
    const double n = static_cast<double>(probs.numel());
    const double clamp = 1e-7;
    double loss = 0.0;
    Tensor<T> grad(probs.shape);
    for (std::size_t i = 0; i < probs.numel(); ++i) {
        const double p_raw = static_cast<double>(probs.data[i]);
        const double t = static_cast<double>(targets.data[i]);
        if (!std::isfinite(p_raw) || !std::isfinite(t))
            throw NumericError("bce_loss: non-finite input at index " + std::to_string(i));
        const double p = std::clamp(p_raw, clamp, 1.0 - clamp);
        loss += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        grad.data[i] = static_cast<T>((p_raw - t) / n);
    }
    return {loss / n, grad};
}

// Same objective evaluated directly from logits (log1p form, stable for any
// magnitude). Used by the training loop.
template <typename T>
inline std::pair<double, Tensor<T>> bce_with_logits(const Tensor<T>& logits,
                                                    const Tensor<T>& targets) {
    if (!logits.same_shape(targets))
        throw ConfigError("bce_with_logits: logits " + logits.shape_string() + " vs targets " +
                          targets.shape_string());
    const double n = static_cast<double>(logits.numel());
    double loss = 0.0;
    Tensor<T> grad(logits.shape);
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        const double z = static_cast<double>(logits.data[i]);
        const double t = static_cast<double>(targets.data[i]);
        if (!std::isfinite(z) || !std::isfinite(t))
            throw NumericError("bce_with_logits: non-finite input at index " + std::to_string(i));
        // softplus(z) - t*z, computed on the safe side of the exponential
        const double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += sp - t * z;
        grad.data[i] = static_cast<T>((sigmoid_scalar(z) - t) / n);
    }
    return {loss / n, grad};
}

// ---------------------------------------------------------------------------
// Adaptive-moment optimizer with bias correction.

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
class Adam {
  public:
    Adam() = default;
    explicit Adam(std::vector<ParamRef<T>> refs, AdamHyper hyper = {})
        : refs_(std::move(refs)), hyper_(hyper) {
        refs_.erase(std::remove_if(refs_.begin(), refs_.end(),
                                   [](const ParamRef<T>& p) { return !p.trainable; }),
                    refs_.end());
        for (const auto& p : refs_) {
            m_.emplace_back(p.value->shape);
            v_.emplace_back(p.value->shape);
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(hyper_.beta1, t_);
        const double bc2 = 1.0 - std::pow(hyper_.beta2, t_);
        for (std::size_t r = 0; r < refs_.size(); ++r) {
            auto& w = refs_[r].value->data;
            const auto& g = refs_[r].grad->data;
            auto& m = m_[r].data;
            auto& v = v_[r].data;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                if (!std::isfinite(gi))
                    throw NumericError("adam: non-finite gradient in tensor '" + refs_[r].name +
                                       "'");
                const double mi = hyper_.beta1 * m[i] + (1.0 - hyper_.beta1) * gi;
                const double vi = hyper_.beta2 * v[i] + (1.0 - hyper_.beta2) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                w[i] -= static_cast<T>(hyper_.lr * (mi / bc1) /
                                       (std::sqrt(vi / bc2) + hyper_.eps));
            }
        }
    }

    long long steps() const { return t_; }

  private:
    std::vector<ParamRef<T>> refs_;
    std::vector<Tensor<T>> m_, v_;
    AdamHyper hyper_;
    long long t_ = 0;
};

// ---------------------------------------------------------------------------
// Pipeline configuration (the four training recipes).

enum class Normalization { none, zscore };
enum class Balancing { balanced, imbalanced };

struct PipelineConfig {
    int pipeline_id = 1;
    std::size_t baseline_window = 250;
    bool denoise = true;
    Normalization normalization = Normalization::none;
    Balancing balancing = Balancing::balanced;
    std::string aux_manifest; // optional extra training-only data (pipeline 2)
    std::string aux_labels;
    std::string init_from;    // checkpoint source directory (pipeline 3)
    AdamHyper optimizer;
    int epochs = 30;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;

    static PipelineConfig defaults_for(int id) {
        PipelineConfig cfg;
        cfg.pipeline_id = id;
        switch (id) {
            case 1:
                cfg.baseline_window = 250;
                break;
            case 2:
                cfg.baseline_window = 500;
                break;
            case 3:
                cfg.baseline_window = 500;
                cfg.balancing = Balancing::imbalanced;
                break;
            case 4:
                cfg.baseline_window = 500;
                cfg.denoise = false;
                cfg.normalization = Normalization::zscore;
                break;
            default:
                throw ConfigError("pipeline id must be 1..4, got " + std::to_string(id));
        }
        return cfg;
    }

    void validate() const {
        if (pipeline_id < 1 || pipeline_id > 4)
            throw ConfigError("pipeline id must be 1..4, got " + std::to_string(pipeline_id));
        if (pipeline_id == 1 && baseline_window != 250)
            throw ConfigError("pipeline 1 uses baseline window 250");
        if (pipeline_id >= 2 && baseline_window != 500)
            throw ConfigError("pipeline " + std::to_string(pipeline_id) +
                              " uses baseline window 500");
        if (pipeline_id == 4 && (denoise || normalization != Normalization::zscore))
            throw ConfigError("pipeline 4 replaces denoising with z-score normalization");
        if (pipeline_id == 3 && init_from.empty())
            throw ConfigError("pipeline 3 requires init_from (pipeline 2 checkpoints)");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    }
};

// The per-recording conditioning stage of a pipeline: denoise (baseline
// removal + wavelet shrinkage) and/or z-score.
inline EcgRecording preprocess_recording(const EcgRecording& rec, const PipelineConfig& cfg) {
    EcgRecording out = rec;
    if (cfg.denoise) {
        DenoiseParams dp;
        dp.baseline_window = cfg.baseline_window;
        out = denoise(out, dp);
    }
    if (cfg.normalization == Normalization::zscore) out = zscore_normalize(out);
    return out;
}

inline Dataset preprocess_dataset(const Dataset& ds, const PipelineConfig& cfg,
                                  std::size_t jobs = 1) {
    Dataset out = ds;
    parallel_for(out.records.size(), jobs, [&](std::size_t i) {
        out.records[i].recording = preprocess_recording(ds.records[i].recording, cfg);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Batch assembly.

namespace detail {

struct TrainItem {
    const Dataset::Record* rec;
    std::size_t cut_len; // truncate to this many samples first (0 = keep)
};

inline std::vector<TrainItem> expand_plan(const Dataset& ds, const AugmentationPlan& plan) {
    std::unordered_map<std::string, const Dataset::Record*> index;
    for (const auto& r : ds.records) index[r.recording.id] = &r;
    std::vector<TrainItem> items;
    for (const auto& e : plan.entries) {
        const auto it = index.find(e.id);
        if (it == index.end())
            throw DataError("plan references unknown id '" + e.id + "'");
        for (std::size_t c = 0; c < e.copies; ++c)
            items.push_back({it->second, e.target_length});
    }
    return items;
}

// Windows one recording into row b of a (B, leads, target) float tensor.
inline void materialize(const EcgRecording& rec, std::size_t cut_len, std::size_t target,
                        Rng rng, Tensor<float>& batch, std::size_t b) {
    std::vector<std::vector<double>> leads = rec.leads;
    if (cut_len > 0 && cut_len < (leads.empty() ? 0 : leads[0].size()))
        leads = truncate_random(leads, cut_len, rng);
    const std::size_t len = leads.empty() ? 0 : leads[0].size();
    if (len < target)
        leads = pad_random(leads, target, rng);
    else if (len > target)
        leads = truncate_random(leads, target, rng);
    for (std::size_t l = 0; l < leads.size(); ++l)
        for (std::size_t t = 0; t < target; ++t)
            batch(b, l, t) = static_cast<float>(leads[l][t]);
}

inline Tensor<float> targets_of(const std::vector<const Dataset::Record*>& recs,
                                int num_classes) {
    Tensor<float> t({recs.size(), static_cast<std::size_t>(num_classes)});
    for (std::size_t i = 0; i < recs.size(); ++i)
        for (int j = 0; j < num_classes; ++j) t(i, j) = recs[i]->labels.test(j) ? 1.0f : 0.0f;
    return t;
}

} // namespace detail

// Every base id in `train` must be absent from `val` (augmented replicas
// inherit their source's base id).
inline void verify_no_leakage(const Dataset& train, const Dataset& val) {
    std::set<std::string> val_ids;
    for (const auto& r : val.records) val_ids.insert(base_id(r.recording.id));
    for (const auto& r : train.records)
        if (val_ids.count(base_id(r.recording.id)))
            throw DataError("validation leakage: base id '" + base_id(r.recording.id) +
                            "' appears in both train and validation sets");
}

// Deterministic validation-set predictions: window placement depends only on
// (rng, recording id), never on epoch or batch order.
template <typename ModelT>
inline PredictionSet predict_eval(ModelT& model, const Dataset& ds, const Rng& rng, double tau,
                                  std::size_t batch_size = 16) {
    const ModelConfig& cfg = model.config();
    PredictionSet preds;
    const Rng windows = rng.derive("eval_window");
    for (std::size_t start = 0; start < ds.records.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, ds.records.size() - start);
        Tensor<float> batch({n, cfg.num_leads, cfg.input_length});
        for (std::size_t i = 0; i < n; ++i)
            detail::materialize(ds.records[start + i].recording, 0, cfg.input_length,
                                windows.derive(ds.records[start + i].recording.id), batch, i);
        const auto out = model.forward(batch);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> p(static_cast<std::size_t>(cfg.num_classes));
            for (std::size_t j = 0; j < p.size(); ++j)
                p[j] = static_cast<double>(out.probs(i, j));
            preds.ids.push_back(ds.records[start + i].recording.id);
            preds.labels.push_back(threshold_labels(p, tau));
            preds.probs.push_back(std::move(p));
        }
    }
    return preds;
}

inline std::map<std::string, LabelSet> truth_map(const Dataset& ds) {
    std::map<std::string, LabelSet> out;
    for (const auto& r : ds.records) out[r.recording.id] = r.labels;
    return out;
}

// ---------------------------------------------------------------------------
// One cross-validation fold.

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_f1 = 0.0;
};

struct FoldOutcome {
    EcgResNet<float> model; // parameters of the best-validation-F1 epoch
    std::vector<EpochStats> trace;
    double best_val_f1 = 0.0;
    int best_epoch = 0;
};

// Trains on `train` for the configured epochs, validating each epoch on
// `val`; keeps the parameters of the epoch with the best validation overall
// F1 at threshold 0.5. `init` (pipeline 3) starts from an existing model
// instead of fresh random weights. Data in `train`/`val` must already be
// preprocessed per the pipeline.
inline FoldOutcome train_fold(const Dataset& train, const Dataset& val, const ModelConfig& mcfg,
                              const PipelineConfig& pcfg,
                              const EcgResNet<float>* init = nullptr) {
    if (train.records.empty() || val.records.empty())
        throw DataError("train_fold: empty " +
                        std::string(train.records.empty() ? "training" : "validation") + " split");
    verify_no_leakage(train, val);

    const Rng root = Rng(pcfg.seed).derive("train_fold").derive(pcfg.pipeline_id);

    FoldOutcome out;
    out.model = init ? *init : EcgResNet<float>(mcfg);
    if (!init) out.model.init(Rng(root.derive("init").next_u64()));
    EcgResNet<float>& model = out.model;

    Adam<float> adam(model.parameters(), pcfg.optimizer);

    const AugmentationPlan plan = pcfg.balancing == Balancing::balanced
                                      ? build_combined_plan(train)
                                      : AugmentationPlan{}; // imbalanced: raw distribution
    std::vector<detail::TrainItem> items;
    if (pcfg.balancing == Balancing::balanced) {
        items = detail::expand_plan(train, plan);
    } else {
        for (const auto& r : train.records) items.push_back({&r, 0});
    }

    EcgResNet<float> best = model;
    const auto truths = truth_map(val);

    for (int epoch = 1; epoch <= pcfg.epochs; ++epoch) {
        const Rng erng = root.derive("epoch").derive(epoch);
        std::vector<std::size_t> order(items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        {
            Rng shuffle_rng = erng.derive("order");
            shuffle_rng.shuffle(order);
        }

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += pcfg.batch_size) {
            const std::size_t n = std::min(pcfg.batch_size, order.size() - start);
            Tensor<float> batch({n, mcfg.num_leads, mcfg.input_length});
            std::vector<const Dataset::Record*> recs(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t item = order[start + i];
                recs[i] = items[item].rec;
                detail::materialize(recs[i]->recording, items[item].cut_len, mcfg.input_length,
                                    erng.derive("window").derive(item), batch, i);
            }
            const Tensor<float> targets = detail::targets_of(recs, mcfg.num_classes);
            Rng drop_rng = erng.derive("dropout").derive(start);
            const auto fwd = model.forward(batch, true, drop_rng);
            auto [loss, grad] = bce_with_logits(fwd.logits, targets);
            if (!std::isfinite(loss))
                throw NumericError("train_fold: loss diverged at epoch " + std::to_string(epoch));
            model.zero_grad();
            model.backward(grad);
            adam.step();
            loss_sum += loss;
            ++batches;
        }

        const PredictionSet preds = predict_eval(model, val, root.derive("val"), 0.5);
        const MetricsReport report = compute_metrics(preds.label_map(), truths, mcfg.num_classes);

        EpochStats stats{epoch, loss_sum / static_cast<double>(batches), report.overall};
        out.trace.push_back(stats);
        if (out.trace.size() == 1 || stats.val_f1 > out.best_val_f1) {
            out.best_val_f1 = stats.val_f1;
            out.best_epoch = epoch;
            best = model;
        }
    }
    out.model = best;
    return out;
}

// ---------------------------------------------------------------------------
// Pipelines over the shared fold assignment.

struct PoolEntry {
    int pipeline_id = 0;
    int fold = 0;
    std::filesystem::path checkpoint;
};

struct TrainedPool {
    std::vector<PoolEntry> entries;
    FoldAssignment folds;
};

namespace detail {

inline std::filesystem::path fold_dir(const std::filesystem::path& runs_dir, int pipeline,
                                      int fold) {
    return runs_dir / std::to_string(pipeline) / std::to_string(fold);
}

inline void write_trace(const std::vector<EpochStats>& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write loss trace " + path.string());
    out << "epoch,train_loss,val_f1\n";
    for (const auto& e : trace)
        out << e.epoch << ',' << csv::format_double(e.train_loss) << ','
            << csv::format_double(e.val_f1) << '\n';
}

// True when a checkpoint exists and loads cleanly against this model config.
inline bool checkpoint_valid(const std::filesystem::path& path, const ModelConfig& mcfg) {
    if (!std::filesystem::exists(path)) return false;
    try {
        EcgResNet<float> model = load_checkpoint<float>(path);
        return model.config().to_text() == mcfg.to_text();
    } catch (const Error&) {
        return false;
    }
}

} // namespace detail

// Trains all folds of one pipeline. Preprocessing runs once on the full
// dataset (and on the auxiliary dataset if the pipeline has one); fold f
// then trains on every other fold (plus all auxiliary records) and validates
// on fold f. Existing valid checkpoints are kept (resume).
inline std::vector<PoolEntry> run_pipeline(const Dataset& raw, const FoldAssignment& folds,
                                           const ModelConfig& mcfg, const PipelineConfig& pcfg,
                                           const std::filesystem::path& runs_dir,
                                           std::size_t jobs = 1) {
    pcfg.validate();
    mcfg.validate();

    const Dataset prepared = preprocess_dataset(raw, pcfg, jobs);
    Dataset aux;
    if (!pcfg.aux_manifest.empty()) {
        aux = preprocess_dataset(load_dataset(pcfg.aux_manifest, pcfg.aux_labels), pcfg, jobs);
        // auxiliary ids must not shadow main-dataset ids (leakage would hide)
        for (const auto& r : aux.records)
            if (prepared.find(r.recording.id))
                throw DataError("auxiliary dataset reuses id '" + r.recording.id + "'");
    }

    std::vector<PoolEntry> entries;
    for (int f = 0; f < folds.num_folds; ++f) {
        const auto dir = detail::fold_dir(runs_dir, pcfg.pipeline_id, f);
        std::filesystem::create_directories(dir);
        const auto ckpt_path = dir / "model.ckpt";
        if (detail::checkpoint_valid(ckpt_path, mcfg)) {
            entries.push_back({pcfg.pipeline_id, f, ckpt_path});
            continue;
        }

        Dataset train_ds, val_ds;
        train_ds.manifest_path = prepared.manifest_path;
        for (const auto& r : prepared.records)
            (folds.fold(r.recording.id) == f ? val_ds : train_ds).records.push_back(r);
        for (const auto& r : aux.records) train_ds.records.push_back(r);

        std::optional<EcgResNet<float>> init;
        if (pcfg.pipeline_id == 3) {
            const auto src = std::filesystem::path(pcfg.init_from) / "2" / std::to_string(f) /
                             "model.ckpt";
            if (!std::filesystem::exists(src))
                throw ConfigError("pipeline 3 fold " + std::to_string(f) +
                                  ": missing pipeline 2 checkpoint " + src.string());
            init = load_checkpoint<float>(src);
        }

        PipelineConfig fold_cfg = pcfg;
        fold_cfg.seed = Rng(pcfg.seed).derive("fold_seed").derive(f).next_u64();
        FoldOutcome outcome = train_fold(train_ds, val_ds, mcfg, fold_cfg, init ? &*init : nullptr);

        save_checkpoint(outcome.model, ckpt_path);
        detail::write_trace(outcome.trace, dir / "loss.csv");
        entries.push_back({pcfg.pipeline_id, f, ckpt_path});
    }
    return entries;
}

// Runs the requested pipelines in id order (3 after 2 by construction) and
// assembles the checkpoint pool.
inline TrainedPool train_all(const Dataset& raw, const ModelConfig& mcfg,
                             const std::vector<PipelineConfig>& pipelines,
                             const FoldAssignment& folds, const std::filesystem::path& runs_dir,
                             std::size_t jobs = 1) {
    TrainedPool pool;
    pool.folds = folds;
    std::vector<PipelineConfig> ordered = pipelines;
    std::sort(ordered.begin(), ordered.end(),
              [](const PipelineConfig& a, const PipelineConfig& b) {
                  return a.pipeline_id < b.pipeline_id;
              });
    for (const auto& pcfg : ordered) {
        const auto entries = run_pipeline(raw, folds, mcfg, pcfg, runs_dir, jobs);
        pool.entries.insert(pool.entries.end(), entries.begin(), entries.end());
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Ensemble inference: each pool member preprocesses the raw recording with
// its own pipeline's conditioning stage, then the sigmoid outputs are
// averaged with equal weight.

class Ensemble {
  public:
    Ensemble() = default;

    void add(EcgResNet<float> model, PipelineConfig cfg) {
        members_.push_back({std::move(model), std::move(cfg)});
    }

    static Ensemble load(const TrainedPool& pool,
                         const std::map<int, PipelineConfig>& pipeline_cfgs) {
        Ensemble e;
        for (const auto& entry : pool.entries) {
            const auto it = pipeline_cfgs.find(entry.pipeline_id);
            if (it == pipeline_cfgs.end())
                throw ConfigError("no pipeline config for pool entry (pipeline " +
                                  std::to_string(entry.pipeline_id) + ")");
            e.add(load_checkpoint<float>(entry.checkpoint), it->second);
        }
        return e;
    }

    std::size_t size() const { return members_.size(); }
    const ModelConfig& model_config() const { return members_.at(0).model.config(); }

    // Mean of the members' per-class probabilities for one raw recording.
    // Each class's values are sorted before summation so the result does not
    // depend on the order members were added in, down to the last bit.
    std::vector<double> predict(const EcgRecording& raw, const Rng& rng) const {
        if (members_.empty()) throw ConfigError("ensemble is empty");
        const ModelConfig& mcfg = model_config();
        const std::size_t k = static_cast<std::size_t>(mcfg.num_classes);
        std::vector<std::vector<double>> per_class(k);
        const Rng window = rng.derive("eval_window").derive(raw.id);
        for (const auto& member : members_) {
            const EcgRecording prepared = preprocess_recording(raw, member.config);
            Tensor<float> batch({1, mcfg.num_leads, mcfg.input_length});
            detail::materialize(prepared, 0, mcfg.input_length, window, batch, 0);
            // forward caches are mutable state; keep the member const to callers
            auto& model = const_cast<EcgResNet<float>&>(member.model);
            const auto out = model.forward(batch);
            for (std::size_t j = 0; j < k; ++j)
                per_class[j].push_back(static_cast<double>(out.probs(0, j)));
        }
        std::vector<double> acc(k, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            std::sort(per_class[j].begin(), per_class[j].end());
            for (double v : per_class[j]) acc[j] += v;
            acc[j] /= static_cast<double>(members_.size());
        }
        return acc;
    }

    // Predictions for a whole dataset; `jobs` only affects wall time, not
    // results (every recording has its own substream and output slot, and
    // each worker runs on a private copy of the models to keep their forward
    // caches race-free).
    PredictionSet predict_dataset(const Dataset& ds, const Rng& rng, double tau,
                                  std::size_t jobs = 1) const {
        const std::size_t n = ds.records.size();
        PredictionSet preds;
        preds.ids.resize(n);
        preds.probs.resize(n);
        preds.labels.resize(n);
        const std::size_t chunks = std::max<std::size_t>(1, std::min(jobs, std::max<std::size_t>(n, 1)));
        std::vector<Ensemble> clones;
        clones.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c)
            clones.push_back(c == 0 ? *this : clones[0]);
        parallel_for(chunks, chunks, [&](std::size_t c) {
            for (std::size_t i = c; i < n; i += chunks) {
                const auto p = clones[c].predict(ds.records[i].recording, rng);
                preds.ids[i] = ds.records[i].recording.id;
                preds.labels[i] = threshold_labels(p, tau);
                preds.probs[i] = p;
            }
        });
        return preds;
    }

  private:
    struct Member {
        EcgResNet<float> model;
        PipelineConfig config;
    };
    std::vector<Member> members_;
};

} // namespace ecgra
