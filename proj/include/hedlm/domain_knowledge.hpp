#pragma once

#include <string>
#include <vector>

#include "hedlm/features.hpp"
#include "hedlm/types.hpp"

namespace hedlm::prompt {

enum class Comparator { Greater, Less, GreaterEqual };

std::string to_string(Comparator cmp);
Comparator comparator_from_token(const std::string& token);

/// One per-segment feature threshold, e.g. "segment 1 mean > 0.44 => fatigue".
struct ThresholdRule {
    int segment = 1;  // 1..3
    features::FeatureId feature = features::FeatureId::Mean;
    Label cls = Label::Fatigue;
    Comparator cmp = Comparator::Greater;
    double threshold = 0.0;
};

bool rule_satisfied(const ThresholdRule& rule, const features::FeatureVector& fv);

/// Prose block inserted into prompts plus the structured rules derived from it.
struct DomainKnowledge {
    std::string text;
    std::vector<ThresholdRule> rules;

    std::vector<ThresholdRule> rules_for(Label cls) const;
};

/// The shipped default: per-segment thresholds for running-fatigue magnitude
/// signals (seg1 fatigue mean > 0.44, std > 0.28, energy > 650, ...).
const DomainKnowledge& default_domain_knowledge();

DomainKnowledge load_domain_knowledge(const std::string& json_path);
void save_domain_knowledge(const DomainKnowledge& dk, const std::string& json_path);

}  // namespace hedlm::prompt
