#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ecgra/csv.hpp"
#include "ecgra/error.hpp"
#include "ecgra/recording.hpp"
#include "ecgra/tensor.hpp"

namespace ecgra {

// Label j is predicted when its probability reaches tau; an empty prediction
// set is allowed.
inline LabelSet threshold_labels(const std::vector<double>& probs, double tau = 0.5) {
    LabelSet out;
    for (std::size_t j = 0; j < probs.size(); ++j)
        if (probs[j] >= tau) out.set(static_cast<int>(j));
    return out;
}

struct ClassCounts {
    long long tp = 0, fp = 0, tn = 0, fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

// Per-class confusion counts over two id-keyed label maps.
inline std::vector<ClassCounts> confusion_counts(const std::map<std::string, LabelSet>& predictions,
                                                 const std::map<std::string, LabelSet>& truths,
                                                 int num_classes = kNumClasses) {
    if (predictions.size() != truths.size())
        throw DataError("confusion_counts: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(truths.size()) + " truths");
    std::vector<ClassCounts> counts(num_classes);
    for (const auto& [id, pred] : predictions) {
        const auto it = truths.find(id);
        if (it == truths.end())
            throw DataError("confusion_counts: id '" + id + "' has no ground truth");
        for (int j = 0; j < num_classes; ++j) {
            const bool in_truth = it->second.test(j);
            const bool in_pred = pred.test(j);
            if (in_truth && in_pred) ++counts[j].tp;
            else if (!in_truth && in_pred) ++counts[j].fp;
            else if (in_truth && !in_pred) ++counts[j].fn;
            else ++counts[j].tn;
        }
    }
    return counts;
}

struct ClassScores {
    double precision = 0.0, recall = 0.0, f1 = 0.0, accuracy = 0.0;
};

// Precision TP/(TP+FP), recall TP/(TP+FN), F1 2TP/(2TP+FP+FN); any
// zero-denominator case scores 0.
inline ClassScores precision_recall_f1(const ClassCounts& c) {
    ClassScores s;
    if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (2 * c.tp + c.fp + c.fn > 0)
        s.f1 = static_cast<double>(2 * c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    if (c.total() > 0) s.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return s;
}

// Arithmetic mean of the per-class F1 scores. The expected arity defaults to
// the nine diagnostic classes.
inline double overall_f1(const std::vector<double>& per_class_f1,
                         std::size_t expected = kNumClasses) {
    if (per_class_f1.size() != expected)
        throw ConfigError("overall_f1: expected " + std::to_string(expected) + " values, got " +
                          std::to_string(per_class_f1.size()));
    double sum = 0.0;
    for (double v : per_class_f1) sum += v;
    return sum / static_cast<double>(per_class_f1.size());
}

struct MetricsReport {
    std::vector<ClassCounts> counts;
    std::vector<ClassScores> scores;
    double overall = 0.0;
    std::size_t num_samples = 0;

    int num_classes() const { return static_cast<int>(counts.size()); }
};

inline MetricsReport compute_metrics(const std::map<std::string, LabelSet>& predictions,
                                     const std::map<std::string, LabelSet>& truths,
                                     int num_classes = kNumClasses) {
    MetricsReport report;
    report.counts = confusion_counts(predictions, truths, num_classes);
    std::vector<double> f1s;
    for (const auto& c : report.counts) {
        report.scores.push_back(precision_recall_f1(c));
        f1s.push_back(report.scores.back().f1);
    }
    report.overall = overall_f1(f1s, static_cast<std::size_t>(num_classes));
    report.num_samples = predictions.size();
    return report;
}

// ---------------------------------------------------------------------------
// Report files.

inline std::string class_display_name(int j) {
    if (j >= 0 && j < kNumClasses) return std::string(kClassNames[j]);
    return "C" + std::to_string(j);
}

inline void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report " + path.string());
    out << "class,tp,fp,tn,fn,precision,recall,f1,accuracy\n";
    ClassCounts sum;
    double psum = 0, rsum = 0;
    for (int j = 0; j < report.num_classes(); ++j) {
        const auto& c = report.counts[j];
        const auto& s = report.scores[j];
        out << class_display_name(j) << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn
            << ',' << csv::format_fixed(s.precision, 6) << ',' << csv::format_fixed(s.recall, 6)
            << ',' << csv::format_fixed(s.f1, 6) << ',' << csv::format_fixed(s.accuracy, 6)
            << '\n';
        sum.tp += c.tp;
        sum.fp += c.fp;
        sum.tn += c.tn;
        sum.fn += c.fn;
        psum += s.precision;
        rsum += s.recall;
    }
    const double n = report.num_classes();
    const double macc = report.num_samples && report.num_classes()
                            ? static_cast<double>(sum.tp + sum.tn) / static_cast<double>(sum.total())
                            : 0.0;
    out << "Total," << sum.tp << ',' << sum.fp << ',' << sum.tn << ',' << sum.fn << ','
        << csv::format_fixed(psum / n, 6) << ',' << csv::format_fixed(rsum / n, 6) << ','
        << csv::format_fixed(report.overall, 6) << ',' << csv::format_fixed(macc, 6) << '\n';
}

inline std::string render_report_text(const MetricsReport& report) {
    std::ostringstream out;
    out << "class        tp    fp    tn    fn  precision  recall      f1\n";
    char line[160];
    for (int j = 0; j < report.num_classes(); ++j) {
        const auto& c = report.counts[j];
        const auto& s = report.scores[j];
        std::snprintf(line, sizeof(line), "%-8s %6lld %5lld %5lld %5lld   %8.4f %7.4f %7.4f\n",
                      class_display_name(j).c_str(), c.tp, c.fp, c.tn, c.fn, s.precision, s.recall,
                      s.f1);
        out << line;
    }
    std::snprintf(line, sizeof(line), "overall F1 %.6f over %zu recordings\n", report.overall,
                  report.num_samples);
    out << line;
    return out.str();
}

// Parses a report.csv written by write_report_csv (round-trip checks).
inline MetricsReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path.string());
    MetricsReport report;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        if (lineno == 1) continue; // header
        const auto cells = csv::split(stripped);
        if (cells.size() != 9)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 9 columns");
        if (cells[0] == "Total") {
            report.overall = csv::parse_double(cells[7], path.string());
            continue;
        }
        ClassCounts c;
        c.tp = csv::parse_int(cells[1], path.string());
        c.fp = csv::parse_int(cells[2], path.string());
        c.tn = csv::parse_int(cells[3], path.string());
        c.fn = csv::parse_int(cells[4], path.string());
        ClassScores s;
        s.precision = csv::parse_double(cells[5], path.string());
        s.recall = csv::parse_double(cells[6], path.string());
        s.f1 = csv::parse_double(cells[7], path.string());
        s.accuracy = csv::parse_double(cells[8], path.string());
        report.counts.push_back(c);
        report.scores.push_back(s);
    }
    if (!report.counts.empty()) report.num_samples = static_cast<std::size_t>(report.counts[0].total());
    return report;
}

// ---------------------------------------------------------------------------
// predictions.csv: `id,p0..p<k-1>,labels` with the thresholded label names.

struct PredictionSet {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> probs; // per id, num_classes values
    std::vector<LabelSet> labels;

    std::map<std::string, LabelSet> label_map() const {
        std::map<std::string, LabelSet> out;
        for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = labels[i];
        return out;
    }
};

inline void write_predictions_csv(const PredictionSet& preds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions " + path.string());
    const std::size_t k = preds.probs.empty() ? kNumClasses : preds.probs[0].size();
    out << "id";
    for (std::size_t j = 0; j < k; ++j) out << ",p" << j;
    out << ",labels\n";
    for (std::size_t i = 0; i < preds.ids.size(); ++i) {
        out << preds.ids[i];
        for (double p : preds.probs[i]) out << ',' << csv::format_double(p);
        out << ',' << preds.labels[i].to_string() << '\n';
    }
}

inline PredictionSet read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions " + path.string());
    PredictionSet preds;
    std::string line;
    std::size_t lineno = 0;
    std::size_t k = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = csv::strip(line);
        if (stripped.empty()) continue;
        const auto cells = csv::split(stripped);
        if (lineno == 1) {
            if (cells.size() < 3 || cells.front() != "id" || cells.back() != "labels")
                throw DataError(path.string() + ": expected header 'id,p0..,labels'");
            k = cells.size() - 2;
            for (std::size_t j = 0; j < k; ++j)
                if (cells[j + 1] != "p" + std::to_string(j))
                    throw DataError(path.string() + ": expected header 'id,p0..,labels', found column '" +
                                    cells[j + 1] + "'");
            continue;
        }
        if (cells.size() != k + 2)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(k + 2) + " columns");
        preds.ids.push_back(cells[0]);
        std::vector<double> p(k);
        for (std::size_t j = 0; j < k; ++j) {
            p[j] = csv::parse_double(cells[j + 1], path.string() + ":" + std::to_string(lineno));
            if (!(p[j] >= 0.0 && p[j] <= 1.0))
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": probability " +
                                cells[j + 1] + " outside [0,1]");
        }
        preds.probs.push_back(std::move(p));
        preds.labels.push_back(LabelSet::parse(cells[k + 1]));
    }
    return preds;
}

} // namespace ecgra
