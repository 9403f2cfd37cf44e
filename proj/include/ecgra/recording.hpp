#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecgra/error.hpp"

namespace ecgra {

inline constexpr int kNumLeads = 12;
inline constexpr int kNumClasses = 9;
inline constexpr int kDefaultTargetLength = 15000; // 30 s at 500 Hz

// Conventional 12-lead order.
inline constexpr std::array<std::string_view, kNumLeads> kLeadNames = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

// Fixed class index order; metrics and the sigmoid head index classes 0..8
// in exactly this order.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "Normal", "AF", "FDAVB", "CRBBB", "LAFB", "PVC", "PAC", "ER", "TWC"};

inline std::optional<int> class_index(std::string_view name) {
    for (int j = 0; j < kNumClasses; ++j)
        if (kClassNames[j] == name) return j;
    return std::nullopt;
}

// Subset of the 9 diagnostic classes, as a 9-bit vector.
class LabelSet {
public:
    LabelSet() = default;

    static LabelSet from_bits(std::uint16_t bits) {
        LabelSet s;
        s.bits_ = static_cast<std::uint16_t>(bits & ((1u << kNumClasses) - 1u));
        return s;
    }

    // Parses "AF|PVC"; empty string means no label.
    static LabelSet parse(std::string_view text) {
        LabelSet s;
        if (text.empty()) return s;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = text.find('|', start);
            const std::string_view tok = text.substr(
                start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
            const auto idx = class_index(tok);
            if (!idx)
                throw DataError("unknown label '" + std::string(tok) + "'");
            s.set(*idx);
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return s;
    }

    void set(int j, bool on = true) {
        if (on)
            bits_ = static_cast<std::uint16_t>(bits_ | (1u << j));
        else
            bits_ = static_cast<std::uint16_t>(bits_ & ~(1u << j));
    }
    bool test(int j) const { return (bits_ >> j) & 1u; }
    std::uint16_t bits() const { return bits_; }
    bool empty() const { return bits_ == 0; }

    int count() const {
        int n = 0;
        for (int j = 0; j < kNumClasses; ++j) n += test(j);
        return n;
    }

    std::string to_string() const {
        std::string out;
        for (int j = 0; j < kNumClasses; ++j) {
            if (!test(j)) continue;
            if (!out.empty()) out += '|';
            out += kClassNames[j];
        }
        return out;
    }

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::uint16_t bits_ = 0;
};

// One subject's 12-lead signal matrix, amplitudes in millivolts.
struct EcgRecording {
    std::string id;
    double fs = 500.0;
    std::vector<std::vector<double>> leads; // kNumLeads rows of equal length

    std::size_t length() const { return leads.empty() ? 0 : leads[0].size(); }
    double seconds() const { return static_cast<double>(length()) / fs; }

    void validate() const {
        if (leads.size() != static_cast<std::size_t>(kNumLeads))
            throw DataError("recording '" + id + "': expected " + std::to_string(kNumLeads) +
                            " leads, got " + std::to_string(leads.size()));
        const std::size_t len = length();
        if (len < 1)
            throw DataError("recording '" + id + "': empty signal");
        if (!(fs > 0.0))
            throw DataError("recording '" + id + "': sampling frequency must be positive");
        for (std::size_t l = 0; l < leads.size(); ++l) {
            if (leads[l].size() != len)
                throw DataError("recording '" + id + "': lead " + std::string(kLeadNames[l]) +
                                " has length " + std::to_string(leads[l].size()) +
                                ", expected " + std::to_string(len));
            for (double v : leads[l])
                if (!std::isfinite(v))
                    throw DataError("recording '" + id + "': non-finite sample in lead " +
                                    std::string(kLeadNames[l]));
        }
    }
};

// Replica ids are "<base>#k"; fold assignment and leakage checks key on the
// base id so augmented copies always travel with their source recording.
inline std::string base_id(std::string_view id) {
    const std::size_t pos = id.find('#');
    return std::string(pos == std::string_view::npos ? id : id.substr(0, pos));
}

} // namespace ecgra
