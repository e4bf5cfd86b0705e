#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedlm/chat.hpp"
#include "hedlm/domain_knowledge.hpp"
#include "hedlm/features.hpp"
#include "hedlm/knn.hpp"
#include "hedlm/llm.hpp"

namespace hedlm::prompt {

/// A distance candidate annotated with its LLM relevance score and reason.
struct ScoredCandidate {
    knn::DistanceCandidate candidate;
    double score = 0.0;  // in [0,1]
    std::string reason;

    Label label() const { return candidate.label(); }
    std::uint64_t row_index() const { return candidate.features.row_index; }
};

/// One labeled example that goes into a few-shot prompt. The relevance score
/// is absent for the random / distance baselines, which skip the scoring stage.
struct Shot {
    features::FeatureVector features;
    Label label = Label::Fatigue;
    double distance = 0.0;
    std::optional<double> score;
    std::string reason;
};

Shot shot_from(const ScoredCandidate& sc);
Shot shot_from(const knn::DistanceCandidate& dc);

struct ShotPair {
    Shot first;
    Shot second;
    bool balanced = false;  // true when the two labels differ
};

struct PromptBundle {
    DomainKnowledge dk;
    std::vector<Shot> shots;
    features::FeatureVector target;
    std::string rendered;
    llm::ChatRequest request;
};

/// Per-class, per-segment feature means used as the inline attachment
/// stand-in of the domain-knowledge acquisition prompt.
struct FeatureSummary {
    struct Entry {
        int segment = 1;
        Label cls = Label::Fatigue;
        std::array<double, kFeaturesPerSegment> feature_means{};
    };
    std::vector<Entry> entries;
};

/// Renders the domain-knowledge acquisition prompt (inline summary table,
/// instruction with the required output skeleton, question). Requires the
/// summary to cover all three segments.
llm::ChatRequest build_dk_prompt(const FeatureSummary& summary,
                                 const llm::PromptOptions& options = {});

/// Sorted by score descending, ties by ascending distance then ascending
/// row_index; first min(top_k, size) returned. Throws on empty input.
std::vector<ScoredCandidate> rerank(std::vector<ScoredCandidate> scored, int top_k);

/// The highest-scored representative of each label when both occur (ordered by
/// score descending); otherwise the top two with balanced = false.
ShotPair select_shots(const std::vector<ScoredCandidate>& topk);

/// Renders the few-shot prediction prompt: domain knowledge, instruction, one
/// example block per shot (score/reason when present, three segment feature
/// sentences, label conclusion), the new-data block, the 4-item task list, and
/// the single-token question.
PromptBundle build_fewshot_prompt(std::span<const Shot> shots,
                                  const features::FeatureVector& target,
                                  const DomainKnowledge& dk,
                                  const llm::PromptOptions& options = {});

class AmbiguousLabel : public Error {
public:
    explicit AmbiguousLabel(const std::string& message) : Error("prompt", message) {}
};

/// Exact single-token match after trimming and case-folding; otherwise counts
/// standalone occurrences ("fatigue" inside "non-fatigue" is not counted) and
/// the higher count wins. A tie or zero count throws AmbiguousLabel.
Label parse_label(const std::string& text);

}  // namespace hedlm::prompt
