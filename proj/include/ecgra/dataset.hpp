#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecgra/csv.hpp"
#include "ecgra/error.hpp"
#include "ecgra/recording.hpp"
#include "ecgra/rng.hpp"

namespace ecgra {

// An ECG dataset held in memory: recordings plus their label sets.
// Immutable once loaded; safe to share between threads.
struct Dataset {
    struct Record {
        EcgRecording recording;
        LabelSet labels;
    };

    std::vector<Record> records;
    std::string manifest_path;

    std::size_t size() const { return records.size(); }

    const Record* find(std::string_view id) const {
        for (const auto& r : records)
            if (r.recording.id == id) return &r;
        return nullptr;
    }

    // Count of recordings carrying class j (multi-label recordings count
    // toward every class they carry).
    std::vector<std::size_t> class_counts(int num_classes = kNumClasses) const {
        std::vector<std::size_t> counts(num_classes, 0);
        for (const auto& r : records)
            for (int j = 0; j < num_classes; ++j)
                if (r.labels.test(j)) ++counts[j];
        return counts;
    }
};

// ---------------------------------------------------------------------------
// Signal file IO: <id>.csv, one row per sample, 12 comma-separated columns in
// lead order, decimal text in millivolts.

inline std::vector<std::vector<double>> read_signal_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open signal file " + path.string());
    std::vector<std::vector<double>> leads(kNumLeads);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        const auto cells = csv::split(stripped);
        if (cells.size() != static_cast<std::size_t>(kNumLeads))
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(kNumLeads) + " columns, got " +
                            std::to_string(cells.size()));
        for (int l = 0; l < kNumLeads; ++l)
            leads[l].push_back(
                csv::parse_double(cells[l], path.string() + ":" + std::to_string(lineno)));
    }
    return leads;
}

inline void write_signal_csv(const std::filesystem::path& path,
                             const std::vector<std::vector<double>>& leads) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write signal file " + path.string());
    const std::size_t len = leads.empty() ? 0 : leads[0].size();
    std::string line;
    for (std::size_t t = 0; t < len; ++t) {
        line.clear();
        for (int l = 0; l < kNumLeads; ++l) {
            if (l) line += ',';
            line += csv::format_double(leads[l][t]);
        }
        line += '\n';
        out << line;
    }
    if (!out)
        throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset load/save.
//
// manifest.csv: header `id,path,fs,length`, one row per record; `path` is
// relative to the manifest's directory unless absolute.
// labels.csv:   header `id,labels`, labels joined by `|`, empty = no label.

// labels.csv as an ordered id -> LabelSet list (order = file order).
inline std::vector<std::pair<std::string, LabelSet>> read_labels_csv(
    const std::filesystem::path& labels_path) {
    std::ifstream lf(labels_path);
    if (!lf)
        throw DataError("cannot open labels file " + labels_path.string());
    std::vector<std::pair<std::string, LabelSet>> out;
    std::unordered_map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lf, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (lineno == 1) {
            if (stripped != "id,labels")
                throw DataError(labels_path.string() + ": expected header 'id,labels'");
            continue;
        }
        const auto cells = csv::split(stripped);
        if (cells.size() != 2)
            throw DataError(labels_path.string() + ":" + std::to_string(lineno) +
                            ": expected 2 columns");
        const std::string& id = cells[0];
        if (seen.count(id))
            throw DataError(labels_path.string() + ":" + std::to_string(lineno) +
                            ": duplicate id '" + id + "'");
        seen[id] = true;
        try {
            out.emplace_back(id, LabelSet::parse(cells[1]));
        } catch (const DataError& e) {
            throw DataError(labels_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline Dataset load_dataset(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& labels_path) {
    std::ifstream mf(manifest_path);
    if (!mf)
        throw DataError("cannot open manifest " + manifest_path.string());

    std::unordered_map<std::string, LabelSet> labels;
    std::vector<std::string> label_order;
    for (auto& [id, set] : read_labels_csv(labels_path)) {
        labels[id] = set;
        label_order.push_back(id);
    }

    Dataset ds;
    ds.manifest_path = manifest_path.string();
    const std::filesystem::path dir = manifest_path.parent_path();

    std::unordered_map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(mf, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (lineno == 1) {
            if (stripped != "id,path,fs,length")
                throw DataError(manifest_path.string() + ": expected header 'id,path,fs,length'");
            continue;
        }
        const auto cells = csv::split(stripped);
        if (cells.size() != 4)
            throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                            ": expected 4 columns");
        const std::string& id = cells[0];
        if (seen.count(id))
            throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                            ": duplicate id '" + id + "'");
        seen[id] = true;
        const auto it = labels.find(id);
        if (it == labels.end())
            throw DataError("id '" + id + "' present in manifest but missing from " +
                            labels_path.string());

        std::filesystem::path sig(cells[1]);
        if (sig.is_relative()) sig = dir / sig;

        EcgRecording rec;
        rec.id = id;
        rec.fs = csv::parse_double(cells[2], manifest_path.string() + ":" + std::to_string(lineno));
        rec.leads = read_signal_csv(sig);
        const long long declared =
            csv::parse_int(cells[3], manifest_path.string() + ":" + std::to_string(lineno));
        if (declared != static_cast<long long>(rec.length()))
            throw DataError("recording '" + id + "': manifest declares length " +
                            std::to_string(declared) + " but file has " +
                            std::to_string(rec.length()));
        rec.validate();
        ds.records.push_back({std::move(rec), it->second});
    }

    for (const auto& id : label_order)
        if (!seen.count(id))
            throw DataError("id '" + id + "' present in " + labels_path.string() +
                            " but missing from manifest");
    return ds;
}

// Loads a manifest without any labels file (all label sets empty). Used for
// prediction on unlabeled data.
inline Dataset load_dataset_unlabeled(const std::filesystem::path& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf)
        throw DataError("cannot open manifest " + manifest_path.string());
    Dataset ds;
    ds.manifest_path = manifest_path.string();
    const std::filesystem::path dir = manifest_path.parent_path();
    std::unordered_map<std::string, bool> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(mf, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (lineno == 1) {
            if (stripped != "id,path,fs,length")
                throw DataError(manifest_path.string() + ": expected header 'id,path,fs,length'");
            continue;
        }
        const auto cells = csv::split(stripped);
        if (cells.size() != 4)
            throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                            ": expected 4 columns");
        const std::string& id = cells[0];
        if (seen.count(id))
            throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                            ": duplicate id '" + id + "'");
        seen[id] = true;
        std::filesystem::path sig(cells[1]);
        if (sig.is_relative()) sig = dir / sig;
        EcgRecording rec;
        rec.id = id;
        rec.fs = csv::parse_double(cells[2], manifest_path.string() + ":" + std::to_string(lineno));
        rec.leads = read_signal_csv(sig);
        const long long declared =
            csv::parse_int(cells[3], manifest_path.string() + ":" + std::to_string(lineno));
        if (declared != static_cast<long long>(rec.length()))
            throw DataError("recording '" + id + "': manifest declares length " +
                            std::to_string(declared) + " but file has " +
                            std::to_string(rec.length()));
        rec.validate();
        ds.records.push_back({std::move(rec), LabelSet{}});
    }
    return ds;
}

// Writes manifest.csv, labels.csv and one signal file per record into `dir`.
// Round trip is bit-exact: format_double emits shortest round-trip decimals.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir / "manifest.csv");
    std::ofstream lf(dir / "labels.csv");
    if (!mf || !lf)
        throw DataError("cannot write dataset to " + dir.string());
    mf << "id,path,fs,length\n";
    lf << "id,labels\n";
    for (const auto& r : ds.records) {
        std::string fname = r.recording.id;
        std::replace(fname.begin(), fname.end(), '#', '_'); // replica ids in filenames
        fname += ".csv";
        write_signal_csv(dir / fname, r.recording.leads);
        mf << r.recording.id << ',' << fname << ',' << csv::format_double(r.recording.fs) << ','
           << r.recording.length() << '\n';
        lf << r.recording.id << ',' << r.labels.to_string() << '\n';
    }
    if (!mf || !lf)
        throw DataError("write failed in " + dir.string());
}

// ---------------------------------------------------------------------------
// Fold assignment.

// id -> fold index in 0..k-1. A pure function of (sorted id set, seed), so
// every pipeline sees the same split and augmented replicas (looked up via
// base_id) can never leak across the train/validation boundary.
struct FoldAssignment {
    std::map<std::string, int> fold_of;
    int num_folds = 0;
    std::uint64_t seed = 0;

    int fold(std::string_view id) const {
        const auto it = fold_of.find(base_id(id));
        if (it == fold_of.end())
            throw DataError("id '" + std::string(id) + "' has no fold assignment");
        return it->second;
    }

    std::vector<std::size_t> fold_sizes() const {
        std::vector<std::size_t> sizes(num_folds, 0);
        for (const auto& [id, f] : fold_of) ++sizes[f];
        return sizes;
    }
};

inline FoldAssignment split_folds(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2)
        throw ConfigError("split_folds: k must be at least 2");
    if (ds.records.empty())
        throw DataError("split_folds: dataset is empty");
    if (static_cast<std::size_t>(k) > ds.size())
        throw ConfigError("split_folds: k = " + std::to_string(k) + " exceeds dataset size " +
                          std::to_string(ds.size()));

    std::vector<std::string> ids;
    ids.reserve(ds.size());
    for (const auto& r : ds.records) ids.push_back(r.recording.id);
    std::sort(ids.begin(), ids.end());

    Rng rng = Rng(seed).derive("split_folds");
    rng.shuffle(ids);

    FoldAssignment fa;
    fa.num_folds = k;
    fa.seed = seed;
    for (std::size_t i = 0; i < ids.size(); ++i)
        fa.fold_of[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    return fa;
}

} // namespace ecgra
