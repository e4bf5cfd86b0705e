#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hedlm {

inline constexpr std::size_t kSamplesPerRecord = 180;
inline constexpr std::size_t kSegmentLength = 60;
inline constexpr std::size_t kSegmentsPerRecord = 3;
inline constexpr std::size_t kFeaturesPerSegment = 10;
inline constexpr std::size_t kFeatureCount = kSegmentsPerRecord * kFeaturesPerSegment;

enum class Label { Fatigue, NonFatigue };

/// All errors thrown by the library carry a module-qualified message,
/// e.g. "dataset: row 3: expected 180 sample columns, got 179".
class Error : public std::runtime_error {
public:
    Error(const std::string& module, const std::string& message)
        : std::runtime_error(module + ": " + message) {}
};

inline std::string to_string(Label label) {
    return label == Label::Fatigue ? "fatigue" : "non-fatigue";
}

inline std::string ascii_lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

/// Parses "fatigue" / "non-fatigue" (case-insensitive). Throws on any other token.
inline Label label_from_token(const std::string& token) {
    const std::string t = ascii_lower(token);
    if (t == "fatigue") return Label::Fatigue;
    if (t == "non-fatigue") return Label::NonFatigue;
    throw Error("types", "unknown label token '" + token + "'");
}

struct SignalRecord {
    std::string user_id;
    std::uint64_t row_index = 0;
    std::vector<double> samples;  // exactly kSamplesPerRecord finite magnitudes
    std::optional<Label> label;   // present for pool records, absent for targets
};

struct UserSubset {
    std::string user_id;
    std::vector<SignalRecord> records;          // row_index strictly increasing
    std::pair<std::uint64_t, std::uint64_t> source_range{0, 0};
};

}  // namespace hedlm
