#include "hedlm/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace hedlm::prompt {

using nlohmann::json;

std::string to_string(Comparator cmp) {
    switch (cmp) {
        case Comparator::Greater: return ">";
        case Comparator::Less: return "<";
        case Comparator::GreaterEqual: return ">=";
    }
    return "?";
}

Comparator comparator_from_token(const std::string& token) {
    if (token == ">") return Comparator::Greater;
    if (token == "<") return Comparator::Less;
    if (token == ">=") return Comparator::GreaterEqual;
    throw Error("prompt", "unknown comparator '" + token + "'");
}

bool rule_satisfied(const ThresholdRule& rule, const features::FeatureVector& fv) {
    const double value = fv.at(rule.segment, rule.feature);
    switch (rule.cmp) {
        case Comparator::Greater: return value > rule.threshold;
        case Comparator::Less: return value < rule.threshold;
        case Comparator::GreaterEqual: return value >= rule.threshold;
    }
    return false;
}

std::vector<ThresholdRule> DomainKnowledge::rules_for(Label cls) const {
    std::vector<ThresholdRule> out;
    for (const auto& rule : rules) {
        if (rule.cls == cls) out.push_back(rule);
    }
    return out;
}

namespace {

using features::FeatureId;

DomainKnowledge make_default_dk() {
    DomainKnowledge dk;
    dk.text =
        "The classification of fatigue and non-fatigue is determined by evaluating specific "
        "features across three segments (Seg1, Seg2, and Seg3). The key features and their "
        "thresholds are described below:\n"
        "\n"
        "Segment 1 (Seg1):\n"
        "- Fatigue:\n"
        "  - Mean Acceleration: Values above 0.44 are indicative of fatigue.\n"
        "  - Standard Deviation: Values above 0.28 suggest less variability, consistent with fatigue.\n"
        "  - Energy in Low Band: Values above 650 reflect high energy expenditure, associated with fatigue.\n"
        "  - Skewness: Values above 0.75 highlight asymmetrical signal distributions often seen in fatigue patterns.\n"
        "  - Kurtosis: Values near or above -0.05 indicate sharper signal distributions, consistent with fatigue.\n"
        "- Non-Fatigue:\n"
        "  - Mean Acceleration: Values below 0.40 indicate lower activity, typical of non-fatigue.\n"
        "  - Standard Deviation: Values below 0.27 reflect greater variability in motion.\n"
        "  - Energy in Low Band: Values below 600 signify lower energy expenditure.\n"
        "  - Skewness: Values below 0.70 align with stable signal distributions.\n"
        "  - Kurtosis: Values below -0.10 suggest flatter distributions, typical of non-fatigue.\n"
        "\n"
        "Segment 2 (Seg2):\n"
        "- Fatigue:\n"
        "  - Energy in Low Band: Values above 700 reflect significant energy levels.\n"
        "  - Skewness: Values above 1.5 indicate highly skewed signal distributions, consistent with fatigue.\n"
        "- Non-Fatigue:\n"
        "  - Energy in Low Band: Values below 600 signify reduced energy activity.\n"
        "  - Skewness: Values below 1.2 represent stable signal distributions.\n"
        "\n"
        "Segment 3 (Seg3):\n"
        "- Fatigue:\n"
        "  - Standard Deviation: Values above 0.30 indicate signal stability, often linked to fatigue.\n"
        "  - Energy in Low Band: Values above 800 reflect increased energy expenditure, characteristic of fatigue.\n"
        "- Non-Fatigue:\n"
        "  - Standard Deviation: Values below 0.28 suggest greater variability in motion.\n"
        "  - Energy in Low Band: Values below 750 signify reduced energy activity.\n"
        "\n"
        "Conclusion:\n"
        "- Fatigue: Key features like Mean Acceleration, Standard Deviation, and Energy in Low Band "
        "tend to have higher values, supported by asymmetrical and sharp signal distributions "
        "(Skewness and Kurtosis).\n"
        "- Non-Fatigue: Features show lower values with stable and flat signal distributions, "
        "indicating more consistent and balanced energy patterns.\n"
        "\n"
        "Key Principles:\n"
        "1. Evaluate each feature in all segments against the thresholds defined above.\n"
        "2. If any feature in any segment clearly meets the fatigue criteria, classify the label as \"fatigue\".\n"
        "3. If all features in all segments align with non-fatigue criteria, classify the label as \"non-fatigue\".\n"
        "4. Use a chain-of-thought process to evaluate all features collectively, but return only the "
        "final label: \"fatigue\" or \"non-fatigue\".";

    const auto F = Label::Fatigue;
    const auto N = Label::NonFatigue;
    const auto GT = Comparator::Greater;
    const auto LT = Comparator::Less;
    const auto GE = Comparator::GreaterEqual;
    dk.rules = {
        {1, FeatureId::Mean, F, GT, 0.44},
        {1, FeatureId::Std, F, GT, 0.28},
        {1, FeatureId::EnergyLowBand, F, GT, 650.0},
        {1, FeatureId::Skewness, F, GT, 0.75},
        {1, FeatureId::Kurtosis, F, GE, -0.05},
        {1, FeatureId::Mean, N, LT, 0.40},
        {1, FeatureId::Std, N, LT, 0.27},
        {1, FeatureId::EnergyLowBand, N, LT, 600.0},
        {1, FeatureId::Skewness, N, LT, 0.70},
        {1, FeatureId::Kurtosis, N, LT, -0.10},
        {2, FeatureId::EnergyLowBand, F, GT, 700.0},
        {2, FeatureId::Skewness, F, GT, 1.5},
        {2, FeatureId::EnergyLowBand, N, LT, 600.0},
        {2, FeatureId::Skewness, N, LT, 1.2},
        {3, FeatureId::Std, F, GT, 0.30},
        {3, FeatureId::EnergyLowBand, F, GT, 800.0},
        {3, FeatureId::Std, N, LT, 0.28},
        {3, FeatureId::EnergyLowBand, N, LT, 750.0},
    };
    return dk;
}

}  // namespace

const DomainKnowledge& default_domain_knowledge() {
    static const DomainKnowledge dk = make_default_dk();
    return dk;
}

DomainKnowledge load_domain_knowledge(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error("prompt", "cannot open domain-knowledge file '" + json_path + "'");
    json parsed;
    try {
        in >> parsed;
    } catch (const json::exception& e) {
        throw Error("prompt", "invalid domain-knowledge JSON: " + std::string(e.what()));
    }
    DomainKnowledge dk;
    try {
        dk.text = parsed.at("text").get<std::string>();
        for (const auto& r : parsed.at("rules")) {
            ThresholdRule rule;
            rule.segment = r.at("segment").get<int>();
            if (rule.segment < 1 || rule.segment > 3) {
                throw Error("prompt", "rule segment out of range: " + std::to_string(rule.segment));
            }
            rule.feature = features::feature_id_from_key(r.at("feature").get<std::string>());
            rule.cls = label_from_token(r.at("class").get<std::string>());
            rule.cmp = comparator_from_token(r.at("comparator").get<std::string>());
            rule.threshold = r.at("threshold").get<double>();
            if (!std::isfinite(rule.threshold)) throw Error("prompt", "rule threshold must be finite");
            dk.rules.push_back(rule);
        }
    } catch (const json::exception& e) {
        throw Error("prompt", "malformed domain-knowledge document: " + std::string(e.what()));
    }
    return dk;
}

void save_domain_knowledge(const DomainKnowledge& dk, const std::string& json_path) {
    json rules = json::array();
    for (const auto& rule : dk.rules) {
        rules.push_back({{"segment", rule.segment},
                         {"feature", features::feature_key(rule.feature)},
                         {"class", to_string(rule.cls)},
                         {"comparator", to_string(rule.cmp)},
                         {"threshold", rule.threshold}});
    }
    const json doc = {{"text", dk.text}, {"rules", rules}};
    std::ofstream out(json_path);
    if (!out) throw Error("prompt", "cannot write domain-knowledge file '" + json_path + "'");
    out << doc.dump(2) << "\n";
}

Shot shot_from(const ScoredCandidate& sc) {
    Shot shot;
    shot.features = sc.candidate.features;
    shot.label = sc.label();
    shot.distance = sc.candidate.distance;
    shot.score = sc.score;
    shot.reason = sc.reason;
    return shot;
}

Shot shot_from(const knn::DistanceCandidate& dc) {
    Shot shot;
    shot.features = dc.features;
    shot.label = dc.label();
    shot.distance = dc.distance;
    return shot;
}

llm::ChatRequest build_dk_prompt(const FeatureSummary& summary, const llm::PromptOptions& options) {
    std::set<int> segments;
    for (const auto& entry : summary.entries) segments.insert(entry.segment);
    if (!segments.contains(1) || !segments.contains(2) || !segments.contains(3)) {
        throw Error("prompt", "feature summary must cover all 3 segments");
    }

    std::string table = "segment,class";
    for (int f = 0; f < static_cast<int>(kFeaturesPerSegment); ++f) {
        table += "," + features::feature_key(static_cast<features::FeatureId>(f));
    }
    table += "\n";
    for (const auto& entry : summary.entries) {
        table += std::to_string(entry.segment) + "," + to_string(entry.cls);
        for (double v : entry.feature_means) table += "," + detail::fixed4(v);
        table += "\n";
    }

    std::string text;
    text += "#Attachment File:\n" + table;
    text +=
        "#Instruction:\n"
        "Based on the attached file, please analyze carefully to create a domain of knowledge in "
        "the following format:\n"
        "\n"
        "domain_knowledge = \"\"\"\n"
        "The classification of fatigue and non-fatigue is determined by evaluating specific "
        "features across three segments (Seg1, Seg2, and Seg3). The key features and their "
        "thresholds are described below:\n"
        "\n"
        "Segment 1 (Seg1):\n"
        "- Fatigue:\n"
        "  - Mean Acceleration:\n"
        "  - Standard Deviation:\n"
        "  - Energy in Low Band:\n"
        "  - Skewness:\n"
        "  - Kurtosis:\n"
        "- Non-Fatigue:\n"
        "  - Mean Acceleration:\n"
        "  - Standard Deviation:\n"
        "  - Energy in Low Band:\n"
        "  - Skewness:\n"
        "  - Kurtosis:\n"
        "\n"
        "Segment 2 (Seg2):\n"
        "- Fatigue:\n"
        "  - Energy in Low Band:\n"
        "  - Skewness:\n"
        "- Non-Fatigue:\n"
        "  - Energy in Low Band:\n"
        "  - Skewness:\n"
        "\n"
        "Segment 3 (Seg3):\n"
        "- Fatigue:\n"
        "  - Standard Deviation:\n"
        "  - Energy in Low Band:\n"
        "- Non-Fatigue:\n"
        "  - Standard Deviation:\n"
        "  - Energy in Low Band:\n"
        "\n"
        "Conclusion:\n"
        "- Fatigue: Key features like Mean Acceleration, Standard Deviation, and Energy in Low Band "
        "tend to have lower values, supported by asymmetrical and sharp signal distributions "
        "(Skewness and Kurtosis).\n"
        "- Non-Fatigue: Features show higher values with stable and flat signal distributions, "
        "indicating more intense and consistent energy patterns.\n"
        "\n"
        "Key Principles:\n"
        "1. Evaluate each feature in all segments against the thresholds defined above.\n"
        "2. If any feature in any segment clearly meets the fatigue criteria, classify the label as \"fatigue\".\n"
        "3. If all features in all segments align with non-fatigue criteria, classify the label as \"non-fatigue\".\n"
        "4. Use a chain-of-thought process to evaluate all features collectively, but return only the "
        "final label: \"fatigue\" or \"non-fatigue\".\n"
        "\"\"\"\n"
        "\n"
        "#Question:\n"
        "Please create domain knowledge according to the format.\n";

    llm::ChatRequest req;
    req.model = options.model;
    req.temperature = options.temperature;
    req.messages.push_back({"user", text});
    return req;
}

namespace {

// Total order over scored candidates: score desc, distance asc, row asc.
bool scored_before(const ScoredCandidate& x, const ScoredCandidate& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.candidate.distance != y.candidate.distance) return x.candidate.distance < y.candidate.distance;
    return x.row_index() < y.row_index();
}

}  // namespace

std::vector<ScoredCandidate> rerank(std::vector<ScoredCandidate> scored, int top_k) {
    if (scored.empty()) throw Error("prompt", "rerank requires at least one scored candidate");
    if (top_k < 1) throw Error("prompt", "top_k must be >= 1");
    std::sort(scored.begin(), scored.end(), scored_before);
    scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(top_k)));
    return scored;
}

ShotPair select_shots(const std::vector<ScoredCandidate>& topk) {
    if (topk.size() < 2) throw Error("prompt", "need at least 2 candidates to build a shot pair");

    const ScoredCandidate* best_fatigue = nullptr;
    const ScoredCandidate* best_nonfatigue = nullptr;
    for (const auto& c : topk) {
        auto& slot = (c.label() == Label::Fatigue) ? best_fatigue : best_nonfatigue;
        if (slot == nullptr || scored_before(c, *slot)) slot = &c;
    }

    ShotPair pair;
    if (best_fatigue && best_nonfatigue) {
        const ScoredCandidate* a = best_fatigue;
        const ScoredCandidate* b = best_nonfatigue;
        if (scored_before(*b, *a)) std::swap(a, b);
        pair.first = shot_from(*a);
        pair.second = shot_from(*b);
        pair.balanced = true;
    } else {
        std::vector<ScoredCandidate> ordered = topk;
        std::sort(ordered.begin(), ordered.end(), scored_before);
        pair.first = shot_from(ordered[0]);
        pair.second = shot_from(ordered[1]);
        pair.balanced = false;
    }
    return pair;
}

namespace {

std::string example_segment_sentence(const features::FeatureVector& fv, int segment,
                                     const std::string& label_name) {
    using features::FeatureId;
    auto v = [&](FeatureId id) { return detail::fixed4(fv.at(segment, id)); };
    return "Segment " + std::to_string(segment) + ": Features such as Mean " + v(FeatureId::Mean) +
           ", Std " + v(FeatureId::Std) + ", Max " + v(FeatureId::Max) + ", Min " + v(FeatureId::Min) +
           ", and Peak-to-Peak " + v(FeatureId::PeakToPeak) +
           " provide key insights into activity levels. RMS " + v(FeatureId::Rms) +
           " is consistent with " + label_name + " thresholds. Skew " + v(FeatureId::Skewness) +
           " and Kurtosis " + v(FeatureId::Kurtosis) + " support the " + label_name +
           " classification. Dominant Frequency " + v(FeatureId::DominantFrequency) +
           " and Energy in Low Band " + v(FeatureId::EnergyLowBand) + " suggest high activity levels.";
}

std::string newdata_segment_sentence(const features::FeatureVector& fv, int segment) {
    using features::FeatureId;
    auto v = [&](FeatureId id) { return detail::fixed4(fv.at(segment, id)); };
    return "Segment " + std::to_string(segment) + ": Features such as Mean " + v(FeatureId::Mean) +
           ", Std " + v(FeatureId::Std) + ", Max " + v(FeatureId::Max) + ", Min " + v(FeatureId::Min) +
           ", and Peak-to-Peak " + v(FeatureId::PeakToPeak) +
           " provide key insights into activity levels. RMS " + v(FeatureId::Rms) +
           " indicates overall activity magnitude. Skew " + v(FeatureId::Skewness) +
           " and Kurtosis " + v(FeatureId::Kurtosis) +
           " reveal distribution characteristics of the signal. Dominant Frequency " +
           v(FeatureId::DominantFrequency) + " and Energy in Low Band " + v(FeatureId::EnergyLowBand) +
           " will be evaluated to determine their relevance to the classification.";
}

}  // namespace

PromptBundle build_fewshot_prompt(std::span<const Shot> shots, const features::FeatureVector& target,
                                  const DomainKnowledge& dk, const llm::PromptOptions& options) {
    if (shots.empty()) throw Error("prompt", "few-shot prompt needs at least one shot");

    std::string body;
    body += "#Instruction: Perform step-by-step numeric comparison internally, don't reveal it.\n";
    body += "#Context:\n";
    for (std::size_t i = 0; i < shots.size(); ++i) {
        const Shot& shot = shots[i];
        const std::string label_name = detail::display_label(shot.label);
        const std::string subj = shot.features.user_id + "#" + std::to_string(shot.features.row_index);
        body += "Example " + std::to_string(i + 1) + " | Subj " + subj + ", Label=" + label_name;
        if (shot.score) {
            body += ", Score=" + detail::fixed4(*shot.score);
            body += "\nReason: " + shot.reason + "\n";
        } else {
            body += "\n";
        }
        body += "\n";
        for (int s = 1; s <= static_cast<int>(kSegmentsPerRecord); ++s) {
            body += example_segment_sentence(shot.features, s, label_name) + "\n\n";
        }
        body += "Conclusion: The overall pattern in features across segments supports the "
                "classification of " + label_name + ".\n";
        body += "Label: " + label_name + ".\n\n";
    }

    const std::string target_id = target.user_id + "#" + std::to_string(target.row_index);
    body += "New Data | Subject " + target_id + ", Unlabeled\n";
    for (int s = 1; s <= static_cast<int>(kSegmentsPerRecord); ++s) {
        body += newdata_segment_sentence(target, s) + "\n\n";
    }

    body +=
        "#Task:\n"
        "Based on the provided examples and the new data:\n"
        "1. Compare the new data's features with the provided examples.\n"
        "2. Evaluate which example the new data most closely matches.\n"
        "3. Based on the closeness and domain knowledge, classify the new data as 'fatigue' or "
        "'non-fatigue'.\n"
        "4. Use reasoning internally to justify your classification, but return only the final "
        "label: 'fatigue' or 'non-fatigue'.\n"
        "\n"
        "#Question:\n"
        "Please classify the new data using the provided examples and domain knowledge. Return "
        "only 'fatigue' or 'non-fatigue' as the final label.\n";

    PromptBundle bundle;
    bundle.dk = dk;
    bundle.shots.assign(shots.begin(), shots.end());
    bundle.target = target;

    const std::string dk_block = "#Domain Knowledge: " + dk.text + "\n";
    bundle.request.model = options.model;
    bundle.request.temperature = options.temperature;
    if (options.dk_as_system_message) {
        bundle.rendered = dk_block + body;
        bundle.request.messages.push_back({"system", dk_block});
        bundle.request.messages.push_back({"user", body});
    } else {
        bundle.rendered = dk_block + body;
        bundle.request.messages.push_back({"user", bundle.rendered});
    }
    return bundle;
}

Label parse_label(const std::string& text) {
    const std::string lower = ascii_lower(detail::trim(text));
    if (lower == "fatigue") return Label::Fatigue;
    if (lower == "non-fatigue") return Label::NonFatigue;

    std::size_t count_nonfatigue = 0;
    std::size_t pos = 0;
    while ((pos = lower.find("non-fatigue", pos)) != std::string::npos) {
        ++count_nonfatigue;
        pos += 11;
    }
    std::size_t count_fatigue = 0;
    pos = 0;
    while ((pos = lower.find("fatigue", pos)) != std::string::npos) {
        const bool inside_nonfatigue = pos >= 4 && lower.compare(pos - 4, 4, "non-") == 0;
        if (!inside_nonfatigue) ++count_fatigue;
        pos += 7;
    }

    if (count_fatigue > count_nonfatigue) return Label::Fatigue;
    if (count_nonfatigue > count_fatigue) return Label::NonFatigue;
    throw AmbiguousLabel("reply mentions fatigue " + std::to_string(count_fatigue) +
                         " and non-fatigue " + std::to_string(count_nonfatigue) +
                         " times; cannot decide");
}

}  // namespace hedlm::prompt
