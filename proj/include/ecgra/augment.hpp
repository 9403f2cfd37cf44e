#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ecgra/csv.hpp"
#include "ecgra/dataset.hpp"
#include "ecgra/error.hpp"
#include "ecgra/recording.hpp"
#include "ecgra/rng.hpp"

namespace ecgra {

inline constexpr int kMaxHistogramSeconds = 30;

// Recording-length distribution at 1-second resolution. Lengths above 30 s
// count as 30 s (they get truncated to the target length anyway); lengths
// under 1 s clamp to bucket 1.
struct LengthHistogram {
    std::array<std::size_t, kMaxHistogramSeconds + 1> buckets{}; // index 1..30 used

    std::size_t total() const {
        return std::accumulate(buckets.begin(), buckets.end(), std::size_t{0});
    }

    void add(const EcgRecording& rec) { ++buckets[bucket_of(rec)]; }

    static int bucket_of(const EcgRecording& rec) {
        const int whole = static_cast<int>(std::floor(rec.seconds()));
        return std::clamp(whole, 1, kMaxHistogramSeconds);
    }

    std::array<double, kMaxHistogramSeconds + 1> normalized() const {
        std::array<double, kMaxHistogramSeconds + 1> out{};
        const double n = static_cast<double>(total());
        if (n == 0) return out;
        for (int b = 1; b <= kMaxHistogramSeconds; ++b)
            out[b] = static_cast<double>(buckets[b]) / n;
        return out;
    }
};

inline LengthHistogram length_histogram(const Dataset& ds) {
    LengthHistogram h;
    for (const auto& r : ds.records) h.add(r.recording);
    return h;
}

// Per-class histogram; a multi-label recording counts toward every class it
// carries.
inline LengthHistogram class_length_histogram(const Dataset& ds, int cls) {
    LengthHistogram h;
    for (const auto& r : ds.records)
        if (r.labels.test(cls)) h.add(r.recording);
    return h;
}

// ---------------------------------------------------------------------------
// Random windowing.

// Pads all 12 leads to `target` with zeros; the left pad length is one
// uniform draw shared by every lead, so leads stay aligned. Original samples
// appear verbatim at the chosen offset.
inline std::vector<std::vector<double>> pad_random(const std::vector<std::vector<double>>& leads,
                                                   std::size_t target, Rng& rng) {
    const std::size_t len = leads.empty() ? 0 : leads[0].size();
    if (len > target)
        throw DataError("pad_random: signal length " + std::to_string(len) + " exceeds target " +
                        std::to_string(target));
    const std::size_t left = static_cast<std::size_t>(rng.uniform_below(target - len + 1));
    std::vector<std::vector<double>> out(leads.size());
    for (std::size_t l = 0; l < leads.size(); ++l) {
        out[l].assign(target, 0.0);
        std::copy(leads[l].begin(), leads[l].end(), out[l].begin() + left);
    }
    return out;
}

// Cuts a contiguous window of `target` samples at one uniform start offset
// shared by every lead.
inline std::vector<std::vector<double>> truncate_random(
    const std::vector<std::vector<double>>& leads, std::size_t target, Rng& rng) {
    const std::size_t len = leads.empty() ? 0 : leads[0].size();
    if (len < target)
        throw DataError("truncate_random: signal length " + std::to_string(len) +
                        " below target " + std::to_string(target));
    const std::size_t start = static_cast<std::size_t>(rng.uniform_below(len - target + 1));
    std::vector<std::vector<double>> out(leads.size());
    for (std::size_t l = 0; l < leads.size(); ++l)
        out[l].assign(leads[l].begin() + start, leads[l].begin() + start + target);
    return out;
}

// Pad or truncate to exactly `target` samples.
inline EcgRecording unify_length(const EcgRecording& rec, std::size_t target, Rng& rng) {
    EcgRecording out = rec;
    if (rec.length() < target)
        out.leads = pad_random(rec.leads, target, rng);
    else if (rec.length() > target)
        out.leads = truncate_random(rec.leads, target, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Augmentation plans.

enum class PlanMode { redistribute, balance, both };

// One planned emission: `copies` replicas of recording `id`, each first cut
// to `target_length` samples (equal to the source length for plain
// replication) and then padded/truncated to the batch target.
struct PlanEntry {
    std::string id;
    std::size_t target_length = 0;
    std::size_t copies = 1;
};

struct AugmentationPlan {
    std::vector<PlanEntry> entries;
    PlanMode mode = PlanMode::redistribute;

    std::size_t total_copies() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.copies;
        return n;
    }
};

// Plan CSV `id,target_length,copies` for auditability.
inline void write_plan_csv(const AugmentationPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write plan file " + path.string());
    out << "id,target_length,copies\n";
    for (const auto& e : plan.entries)
        out << e.id << ',' << e.target_length << ',' << e.copies << '\n';
}

inline AugmentationPlan read_plan_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open plan file " + path.string());
    AugmentationPlan plan;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (lineno == 1) {
            if (stripped != "id,target_length,copies")
                throw DataError(path.string() + ": expected header 'id,target_length,copies'");
            continue;
        }
        const auto cells = csv::split(stripped);
        if (cells.size() != 3)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
        PlanEntry e;
        e.id = cells[0];
        e.target_length = static_cast<std::size_t>(
            csv::parse_int(cells[1], path.string() + ":" + std::to_string(lineno)));
        e.copies = static_cast<std::size_t>(
            csv::parse_int(cells[2], path.string() + ":" + std::to_string(lineno)));
        plan.entries.push_back(std::move(e));
    }
    return plan;
}

namespace detail {

struct ClassMember {
    std::size_t record_index;
    int bucket;
    std::size_t length;
    double fs;
};

// Members of a class sorted by id for deterministic plans.
inline std::vector<ClassMember> class_members(const Dataset& ds, int cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.records.size(); ++i)
        if (ds.records[i].labels.test(cls)) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return ds.records[a].recording.id < ds.records[b].recording.id;
    });
    std::vector<ClassMember> out;
    for (std::size_t i : idx)
        out.push_back({i, LengthHistogram::bucket_of(ds.records[i].recording),
                       ds.records[i].recording.length(), ds.records[i].recording.fs});
    return out;
}

// Shortest cut that still lands in second-bucket b for sampling rate fs.
inline std::size_t bucket_cut_length(int b, double fs) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(b) * fs));
}

// Largest-remainder apportionment of `total` into integer counts
// proportional to `weights`; zero weights get zero.
inline std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    if (wsum <= 0.0 || total == 0) return counts;

    std::vector<std::pair<double, std::size_t>> frac; // (fractional part, index)
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        const double exact = static_cast<double>(total) * weights[i] / wsum;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        frac.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(frac.begin(), frac.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; r = (r + 1) % frac.size()) {
        ++counts[frac[r].second];
        ++assigned;
    }
    return counts;
}

} // namespace detail

// Builds the plan that reshapes every class's length distribution to the
// global one. Only the class's own recordings are used: under-represented
// buckets are filled by replicating same-length members, and buckets where
// the class has no member at all are synthesized by truncating a longer
// member of that class. Buckets no member is long enough to reach are
// dropped from that class's target and the target renormalized. Classes the
// dataset does not contain are skipped.
inline AugmentationPlan build_redistribution_plan(const Dataset& ds) {
    const LengthHistogram global = length_histogram(ds);
    const auto gnorm = global.normalized();

    std::map<std::string, std::size_t> copies_of; // plain replications, own length
    std::vector<PlanEntry> truncations;
    for (const auto& r : ds.records) copies_of[r.recording.id] = 1;

    for (int cls = 0; cls < kNumClasses; ++cls) {
        const auto members = detail::class_members(ds, cls);
        if (members.empty()) continue;

        std::array<std::vector<std::size_t>, kMaxHistogramSeconds + 1> by_bucket{};
        for (std::size_t m = 0; m < members.size(); ++m)
            by_bucket[members[m].bucket].push_back(m);

        // target weights: global shape minus buckets this class cannot reach
        std::vector<double> weights(kMaxHistogramSeconds + 1, 0.0);
        for (int b = 1; b <= kMaxHistogramSeconds; ++b) {
            if (gnorm[b] <= 0.0) continue;
            bool reachable = !by_bucket[b].empty();
            for (std::size_t m = 0; !reachable && m < members.size(); ++m)
                reachable = members[m].length >= detail::bucket_cut_length(b, members[m].fs);
            if (reachable) weights[b] = gnorm[b];
        }

        // smallest augmented size whose apportionment keeps every existing
        // member (no bucket shrinks below its current membership)
        std::size_t n_target = members.size();
        std::vector<std::size_t> counts;
        while (true) {
            counts = detail::apportion(weights, n_target);
            bool ok = true;
            for (int b = 1; b <= kMaxHistogramSeconds && ok; ++b)
                ok = counts[b] >= by_bucket[b].size();
            if (ok) break;
            ++n_target;
        }

        for (int b = 1; b <= kMaxHistogramSeconds; ++b) {
            std::size_t deficit = counts[b] - by_bucket[b].size();
            if (deficit == 0) continue;
            if (!by_bucket[b].empty()) {
                // replicate existing members of this bucket round-robin
                for (std::size_t i = 0; deficit > 0; ++i, --deficit) {
                    const auto& mem = members[by_bucket[b][i % by_bucket[b].size()]];
                    ++copies_of[ds.records[mem.record_index].recording.id];
                }
            } else {
                // no member of this length: truncate longer members
                std::vector<std::size_t> sources;
                for (std::size_t m = 0; m < members.size(); ++m)
                    if (members[m].length >= detail::bucket_cut_length(b, members[m].fs))
                        sources.push_back(m);
                for (std::size_t i = 0; deficit > 0; ++i, --deficit) {
                    const auto& mem = members[sources[i % sources.size()]];
                    truncations.push_back({ds.records[mem.record_index].recording.id,
                                           detail::bucket_cut_length(b, mem.fs), 1});
                }
            }
        }
    }

    AugmentationPlan plan;
    plan.mode = PlanMode::redistribute;
    for (const auto& r : ds.records)
        plan.entries.push_back(
            {r.recording.id, r.recording.length(), copies_of[r.recording.id]});

    std::sort(truncations.begin(), truncations.end(), [](const PlanEntry& a, const PlanEntry& b) {
        return std::tie(a.id, a.target_length) < std::tie(b.id, b.target_length);
    });
    for (std::size_t i = 0; i < truncations.size();) {
        std::size_t j = i, copies = 0;
        while (j < truncations.size() && truncations[j].id == truncations[i].id &&
               truncations[j].target_length == truncations[i].target_length)
            copies += truncations[j++].copies;
        plan.entries.push_back({truncations[i].id, truncations[i].target_length, copies});
        i = j;
    }
    return plan;
}

// Replication counts that bring every class's post-augmentation count to
// within one recording of the largest class. Greedy: repeatedly add one copy
// of a recording of the current minority class, preferring recordings with
// the fewest other labels so multi-label additions do not inflate classes
// that are already at the maximum. Classes absent from the dataset are
// skipped.
inline AugmentationPlan build_balancing_plan(const Dataset& ds) {
    std::vector<long long> counts(kNumClasses, 0);
    for (const auto& r : ds.records)
        for (int j = 0; j < kNumClasses; ++j)
            if (r.labels.test(j)) ++counts[j];

    std::map<std::string, std::size_t> copies_of;
    for (const auto& r : ds.records) copies_of[r.recording.id] = 1;

    // per-class member lists: fewest labels first, then id order
    std::array<std::vector<std::size_t>, kNumClasses> members{};
    for (int cls = 0; cls < kNumClasses; ++cls) {
        for (std::size_t i = 0; i < ds.records.size(); ++i)
            if (ds.records[i].labels.test(cls)) members[cls].push_back(i);
        std::sort(members[cls].begin(), members[cls].end(), [&](std::size_t a, std::size_t b) {
            const int ca = ds.records[a].labels.count();
            const int cb = ds.records[b].labels.count();
            if (ca != cb) return ca < cb;
            return ds.records[a].recording.id < ds.records[b].recording.id;
        });
    }
    std::array<std::size_t, kNumClasses> cursor{}; // round-robin per class

    const auto present = [&](int j) { return !members[j].empty(); };
    const auto spread_ok = [&] {
        long long lo = -1, hi = -1;
        for (int j = 0; j < kNumClasses; ++j) {
            if (!present(j)) continue;
            if (lo < 0 || counts[j] < lo) lo = counts[j];
            if (hi < 0 || counts[j] > hi) hi = counts[j];
        }
        return hi - lo <= 1;
    };

    // cap guards against label graphs where exact balance is unreachable
    const std::size_t iteration_cap = 16 * ds.size() + 64;
    for (std::size_t it = 0; !spread_ok() && it < iteration_cap; ++it) {
        int minority = -1;
        for (int j = 0; j < kNumClasses; ++j)
            if (present(j) && (minority < 0 || counts[j] < counts[minority])) minority = j;
        const auto& pool = members[minority];
        const std::size_t pick = pool[cursor[minority] % pool.size()];
        ++cursor[minority];
        ++copies_of[ds.records[pick].recording.id];
        for (int j = 0; j < kNumClasses; ++j)
            if (ds.records[pick].labels.test(j)) ++counts[j];
    }

    AugmentationPlan plan;
    plan.mode = PlanMode::balance;
    for (const auto& r : ds.records)
        plan.entries.push_back({r.recording.id, r.recording.length(), copies_of[r.recording.id]});
    return plan;
}

// Redistribution followed by balancing of the redistributed counts; entry
// copies compose via a balancing pass over the virtual post-redistribution
// dataset.
inline AugmentationPlan build_combined_plan(const Dataset& ds) {
    const AugmentationPlan redist = build_redistribution_plan(ds);

    Dataset virt; // one stub record per planned copy, labels only
    for (const auto& e : redist.entries) {
        const Dataset::Record* src = ds.find(e.id);
        for (std::size_t c = 0; c < e.copies; ++c) {
            Dataset::Record r;
            r.recording.id =
                e.id + "@" + std::to_string(e.target_length) + "@" + std::to_string(c);
            r.recording.fs = src->recording.fs;
            r.recording.leads.assign(kNumLeads, std::vector<double>(1, 0.0));
            r.labels = src->labels;
            virt.records.push_back(std::move(r));
        }
    }
    const AugmentationPlan extra = build_balancing_plan(virt);

    std::map<std::pair<std::string, std::size_t>, std::size_t> total; // (id, len) -> copies
    for (const auto& v : extra.entries) {
        const std::size_t at1 = v.id.find('@');
        const std::size_t at2 = v.id.rfind('@');
        const std::string source_id = v.id.substr(0, at1);
        const std::size_t len = static_cast<std::size_t>(
            std::stoull(v.id.substr(at1 + 1, at2 - at1 - 1)));
        total[{source_id, len}] += v.copies;
    }

    AugmentationPlan plan;
    plan.mode = PlanMode::both;
    for (const auto& [key, copies] : total)
        plan.entries.push_back({key.first, key.second, copies});
    return plan;
}

inline AugmentationPlan build_plan(const Dataset& ds, PlanMode mode) {
    switch (mode) {
        case PlanMode::redistribute: return build_redistribution_plan(ds);
        case PlanMode::balance: return build_balancing_plan(ds);
        case PlanMode::both: return build_combined_plan(ds);
    }
    throw ConfigError("build_plan: unknown mode");
}

// Materializes a plan: each planned copy is truncated to its entry length
// (when shorter than the source), then padded/truncated to `target`. Every
// copy draws from its own rng substream, so parallel and serial application
// agree and replicas of one recording land in different windows. Replica k
// of a source id is renamed "<id>#k" (the first copy keeps the bare id).
inline Dataset apply_plan(const Dataset& ds, const AugmentationPlan& plan, std::size_t target,
                          const Rng& rng) {
    std::unordered_map<std::string, const Dataset::Record*> index;
    for (const auto& r : ds.records) index[r.recording.id] = &r;

    Dataset out;
    out.manifest_path = ds.manifest_path;
    std::map<std::string, std::size_t> emitted; // per base id

    const Rng stream = rng.derive("apply_plan");
    for (std::size_t e = 0; e < plan.entries.size(); ++e) {
        const auto& entry = plan.entries[e];
        const auto it = index.find(entry.id);
        if (it == index.end())
            throw DataError("apply_plan: plan references unknown id '" + entry.id + "'");
        const Dataset::Record* src = it->second;
        if (entry.target_length > src->recording.length())
            throw DataError("apply_plan: entry for '" + entry.id + "' wants length " +
                            std::to_string(entry.target_length) + " but source has " +
                            std::to_string(src->recording.length()));
        for (std::size_t c = 0; c < entry.copies; ++c) {
            Rng sub = stream.derive(e).derive(c);
            EcgRecording copy = src->recording;
            if (entry.target_length > 0 && entry.target_length < copy.length())
                copy.leads = truncate_random(copy.leads, entry.target_length, sub);
            copy = unify_length(copy, target, sub);
            const std::size_t k = emitted[entry.id]++;
            copy.id = k == 0 ? entry.id : entry.id + "#" + std::to_string(k);
            out.records.push_back({std::move(copy), src->labels});
        }
    }
    return out;
}

} // namespace ecgra
