#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hedlm/config.hpp"
#include "hedlm/eval.hpp"
#include "hedlm/llm.hpp"
#include "hedlm/mock.hpp"
#include "hedlm/prompt.hpp"
#include "hedlm/types.hpp"

namespace hedlm::pipeline {

enum class Method { Hedlm, Random, Distance };

std::string to_string(Method method);
Method method_from_token(const std::string& token);

class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual llm::RelevanceResult score(const features::FeatureVector& labeled, Label label,
                                       const features::FeatureVector& target,
                                       const prompt::DomainKnowledge& dk) = 0;
};

class LabelPredictor {
public:
    virtual ~LabelPredictor() = default;
    /// attempt 1 is the initial ask; attempt 2 repeats the question after an
    /// ambiguous reply (prior_reply carries the first answer).
    virtual std::string reply(const prompt::PromptBundle& bundle, int attempt,
                              const std::string& prior_reply) = 0;
};

std::unique_ptr<RelevanceScorer> make_mock_scorer();
std::unique_ptr<LabelPredictor> make_mock_predictor();
std::unique_ptr<RelevanceScorer> make_live_scorer(std::shared_ptr<llm::ChatClient> client,
                                                  const PipelineConfig& cfg);
std::unique_ptr<LabelPredictor> make_live_predictor(std::shared_ptr<llm::ChatClient> client,
                                                    const PipelineConfig& cfg);

struct PredictionRecord {
    std::string user_id;
    std::uint64_t row_index = 0;
    Method method = Method::Hedlm;
    std::vector<prompt::Shot> shots;
    Label predicted = Label::NonFatigue;
    std::optional<Label> truth;
    std::string raw_reply;
    bool ambiguous_fallback = false;
    double elapsed_ms = 0.0;  // not part of the audit line
};

/// Stable JSON-lines serialization for audit logs. Identical runs produce
/// byte-identical lines, so volatile fields (timing) are excluded.
std::string audit_json_line(const PredictionRecord& rec);

/// Core prediction on precomputed feature vectors. The pool must be labeled
/// and must not contain the target's row_index.
PredictionRecord predict_from_features(const features::FeatureVector& target,
                                       std::span<const features::FeatureVector> pool,
                                       Method method, const PipelineConfig& cfg,
                                       const prompt::DomainKnowledge& dk,
                                       RelevanceScorer& scorer, LabelPredictor& predictor);

PredictionRecord hedlm_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                               const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                               RelevanceScorer& scorer, LabelPredictor& predictor);
PredictionRecord random_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                                const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                LabelPredictor& predictor);
PredictionRecord distance_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                                  const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                  LabelPredictor& predictor);

struct UserEvalResult {
    std::string user_id;
    std::vector<PredictionRecord> predictions;  // in subset order
    eval::ConfusionMatrix confusion;
    double macro_f1 = 0.0;
};

/// Leave-one-out over the subset: each record in turn is the target with the
/// rest as its support pool. Requires >= 3 records and both classes present.
/// Per-target predictions run in parallel when cfg.jobs != 1; results are
/// collected in subset order either way.
UserEvalResult run_user_evaluation(const UserSubset& subset, Method method,
                                   const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                   RelevanceScorer& scorer, LabelPredictor& predictor);

}  // namespace hedlm::pipeline
