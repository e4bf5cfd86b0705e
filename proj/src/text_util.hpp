#pragma once

#include <cstdio>
#include <string>

#include "hedlm/types.hpp"

namespace hedlm::detail {

// Prompt-facing numeric rendering: fixed 4 decimal places.
inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string display_label(Label label) {
    return label == Label::Fatigue ? "Fatigue" : "Non-Fatigue";
}

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace hedlm::detail
