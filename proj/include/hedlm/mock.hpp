#pragma once

#include <span>
#include <string>

#include "hedlm/domain_knowledge.hpp"
#include "hedlm/features.hpp"
#include "hedlm/llm.hpp"

namespace hedlm::llm {

/// Deterministic offline relevance score: 0.5 * sim + 0.5 * synergy.
/// sim compares the two vectors dimension-wise after rescaling each dimension
/// by its representable range; synergy is the fraction of the labeled class's
/// domain-knowledge rules satisfied by the target.
RelevanceResult mock_score(const features::FeatureVector& labeled, Label label,
                           const features::FeatureVector& target,
                           const prompt::DomainKnowledge& dk);

struct MockShotView {
    const features::FeatureVector* features = nullptr;
    Label label = Label::Fatigue;
};

/// Deterministic offline stand-in for the final few-shot reply: the label of
/// the shot whose mock relevance against the target is highest, rendered as
/// the canonical single token ("fatigue" / "non-fatigue").
std::string mock_fewshot_reply(std::span<const MockShotView> shots,
                               const features::FeatureVector& target,
                               const prompt::DomainKnowledge& dk);

}  // namespace hedlm::llm
