#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ecgra/csv.hpp"
#include "ecgra/error.hpp"
#include "ecgra/model.hpp"
#include "ecgra/parallel.hpp"
#include "ecgra/train.hpp"

namespace ecgra {

// Sectioned key=value file:
//   [section]
//   key = value        # comment
// Returned as section -> key -> value; later duplicates overwrite.
inline std::map<std::string, std::map<std::string, std::string>> parse_config_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']' || stripped.size() < 3)
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed section header '" + stripped + "'");
            section = stripped.substr(1, stripped.size() - 2);
            sections[section];
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + stripped + "'");
        const std::string key = csv::strip(stripped.substr(0, eq));
        const std::string value = csv::strip(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        sections[section][key] = value;
    }
    return sections;
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected unsigned integer, got '" + text + "'");
    }
}

inline double parse_dbl(const std::string& text, const std::string& what) {
    return csv::parse_double(text, what);
}

inline bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    throw ConfigError(what + ": expected true/false, got '" + text + "'");
}

} // namespace detail

// Effective settings of one invocation. Defaults < ECGRA_SEED (seed only) <
// config file < command-line flags; the CLI applies the flag layer.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t target_length = kDefaultTargetLength;
    std::string out_dir = "runs";
    double tau = 0.5;
    std::size_t jobs = 0; // 0 = all cores
    int folds = 10;
    std::vector<int> pipelines = {1, 2, 3, 4};
    std::string manifest;
    std::string labels;
    ModelConfig model;
    std::map<int, PipelineConfig> pipeline_cfgs;

    RunConfig() {
        for (int id = 1; id <= 4; ++id) pipeline_cfgs[id] = PipelineConfig::defaults_for(id);
    }

    std::size_t effective_jobs() const { return jobs == 0 ? default_jobs() : jobs; }

    // Lowest-priority seed source.
    void apply_env() {
        if (const char* env = std::getenv("ECGRA_SEED"))
            seed = detail::parse_u64(env, "ECGRA_SEED");
    }

    void apply_file(const std::filesystem::path& path) {
        const auto sections = parse_config_file(path);
        for (const auto& [name, entries] : sections) {
            if (name == "run") {
                for (const auto& [key, value] : entries) apply_run_key(key, value);
            } else if (name == "data") {
                for (const auto& [key, value] : entries) {
                    if (key == "manifest") manifest = value;
                    else if (key == "labels") labels = value;
                    else throw ConfigError("config [data]: unknown key '" + key + "'");
                }
            } else if (name == "model") {
                for (const auto& [key, value] : entries) apply_model_key(key, value);
            } else if (name.rfind("pipeline", 0) == 0 && name.size() == 9) {
                const int id = name[8] - '0';
                if (id < 1 || id > 4)
                    throw ConfigError("config: unknown section '" + name + "'");
                for (const auto& [key, value] : entries)
                    apply_pipeline_key(pipeline_cfgs[id], key, value, name);
            } else {
                throw ConfigError("config: unknown section '" + name + "'");
            }
        }
        finalize();
    }

    // Ties the dependent values together; call after the last override.
    void finalize() {
        model.input_length = target_length;
        for (auto& [id, cfg] : pipeline_cfgs) {
            cfg.seed = seed;
            if (id == 3 && cfg.init_from.empty()) cfg.init_from = out_dir;
        }
    }

    void validate() const {
        if (folds < 2) throw ConfigError("folds must be >= 2");
        if (tau < 0.0 || tau > 1.0) throw ConfigError("tau must be in [0,1]");
        if (pipelines.empty()) throw ConfigError("at least one pipeline must be selected");
        for (int id : pipelines)
            if (id < 1 || id > 4)
                throw ConfigError("pipeline selection " + std::to_string(id) + " outside 1..4");
        model.validate();
    }

    std::string resolved_text() const {
        std::ostringstream out;
        out << "[run]\n"
            << "seed = " << seed << '\n'
            << "target_length = " << target_length << '\n'
            << "out_dir = " << out_dir << '\n'
            << "tau = " << csv::format_double(tau) << '\n'
            << "jobs = " << jobs << '\n'
            << "folds = " << folds << '\n'
            << "pipelines = ";
        for (std::size_t i = 0; i < pipelines.size(); ++i)
            out << (i ? "," : "") << pipelines[i];
        out << "\n\n[data]\nmanifest = " << manifest << "\nlabels = " << labels << "\n\n[model]\n";
        out << "num_classes = " << model.num_classes << '\n'
            << "num_modules = " << model.num_modules << '\n'
            << "base_channels = " << model.base_channels << '\n'
            << "channel_growth = " << model.channel_growth << '\n'
            << "kernel = " << model.kernel << '\n'
            << "attention_dim = " << model.attention_dim << '\n'
            << "dropout = " << csv::format_double(model.dropout) << '\n';
        for (const auto& [id, cfg] : pipeline_cfgs) {
            out << "\n[pipeline" << id << "]\n"
                << "baseline_window = " << cfg.baseline_window << '\n'
                << "denoise = " << (cfg.denoise ? "true" : "false") << '\n'
                << "normalization = "
                << (cfg.normalization == Normalization::zscore ? "zscore" : "none") << '\n'
                << "balancing = "
                << (cfg.balancing == Balancing::balanced ? "balanced" : "imbalanced") << '\n'
                << "epochs = " << cfg.epochs << '\n'
                << "batch_size = " << cfg.batch_size << '\n'
                << "lr = " << csv::format_double(cfg.optimizer.lr) << '\n';
            if (!cfg.aux_manifest.empty()) out << "aux_manifest = " << cfg.aux_manifest << '\n';
            if (!cfg.aux_labels.empty()) out << "aux_labels = " << cfg.aux_labels << '\n';
            if (!cfg.init_from.empty()) out << "init_from = " << cfg.init_from << '\n';
        }
        return out.str();
    }

    void write_resolved() const {
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / "config.resolved";
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path.string());
        out << resolved_text();
    }

  private:
    void apply_run_key(const std::string& key, const std::string& value) {
        if (key == "seed") seed = detail::parse_u64(value, "config seed");
        else if (key == "target_length")
            target_length = detail::parse_u64(value, "config target_length");
        else if (key == "out_dir") out_dir = value;
        else if (key == "tau") tau = detail::parse_dbl(value, "config tau");
        else if (key == "jobs") jobs = detail::parse_u64(value, "config jobs");
        else if (key == "folds") folds = static_cast<int>(detail::parse_u64(value, "config folds"));
        else if (key == "pipelines") {
            pipelines.clear();
            for (const auto& tok : csv::split(value))
                pipelines.push_back(
                    static_cast<int>(detail::parse_u64(csv::strip(tok), "config pipelines")));
        } else {
            throw ConfigError("config [run]: unknown key '" + key + "'");
        }
    }

    void apply_model_key(const std::string& key, const std::string& value) {
        if (key == "num_classes")
            model.num_classes = static_cast<int>(detail::parse_u64(value, "config num_classes"));
        else if (key == "num_modules") model.num_modules = detail::parse_u64(value, key);
        else if (key == "base_channels") model.base_channels = detail::parse_u64(value, key);
        else if (key == "channel_growth") model.channel_growth = detail::parse_u64(value, key);
        else if (key == "kernel") model.kernel = detail::parse_u64(value, key);
        else if (key == "attention_dim") model.attention_dim = detail::parse_u64(value, key);
        else if (key == "dropout") model.dropout = detail::parse_dbl(value, key);
        else throw ConfigError("config [model]: unknown key '" + key + "'");
    }

    void apply_pipeline_key(PipelineConfig& cfg, const std::string& key, const std::string& value,
                            const std::string& section) {
        const std::string what = "config [" + section + "] " + key;
        if (key == "baseline_window") cfg.baseline_window = detail::parse_u64(value, what);
        else if (key == "denoise") cfg.denoise = detail::parse_bool(value, what);
        else if (key == "normalization") {
            if (value == "none") cfg.normalization = Normalization::none;
            else if (value == "zscore") cfg.normalization = Normalization::zscore;
            else throw ConfigError(what + ": expected none|zscore");
        } else if (key == "balancing") {
            if (value == "balanced") cfg.balancing = Balancing::balanced;
            else if (value == "imbalanced") cfg.balancing = Balancing::imbalanced;
            else throw ConfigError(what + ": expected balanced|imbalanced");
        } else if (key == "aux_manifest") cfg.aux_manifest = value;
        else if (key == "aux_labels") cfg.aux_labels = value;
        else if (key == "init_from") cfg.init_from = value;
        else if (key == "epochs") cfg.epochs = static_cast<int>(detail::parse_u64(value, what));
        else if (key == "batch_size") cfg.batch_size = detail::parse_u64(value, what);
        else if (key == "lr") cfg.optimizer.lr = detail::parse_dbl(value, what);
        else throw ConfigError(what + ": unknown key");
    }
};

} // namespace ecgra
