#include "hedlm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <omp.h>

#include "hedlm/batch.hpp"
#include "hedlm/dataset.hpp"

namespace hedlm {

void PipelineConfig::validate() const {
    if (distance_k < 1) throw Error("pipeline", "distance_k must be >= 1");
    if (top_k < 1 || top_k > distance_k) {
        throw Error("pipeline", "top_k must satisfy 1 <= top_k <= distance_k");
    }
    if (n_shots < 1) throw Error("pipeline", "n_shots must be >= 1");
    if (filter.order < 1) throw Error("pipeline", "filter order must be >= 1");
    if (!(filter.cutoff_hz > 0.0) || filter.cutoff_hz >= filter.sample_rate_hz / 2.0) {
        throw Error("pipeline", "filter cutoff must lie strictly below the Nyquist frequency");
    }
    if (!(low_band_hz > 0.0) || low_band_hz >= filter.sample_rate_hz / 2.0) {
        throw Error("pipeline", "low_band_hz must lie strictly below the Nyquist frequency");
    }
    if (temperature < 0.0 || temperature > 2.0) throw Error("pipeline", "temperature must be in [0,2]");
}

}  // namespace hedlm

namespace hedlm::pipeline {

std::string to_string(Method method) {
    switch (method) {
        case Method::Hedlm: return "hedlm";
        case Method::Random: return "random";
        case Method::Distance: return "distance";
    }
    return "?";
}

Method method_from_token(const std::string& token) {
    const std::string t = ascii_lower(token);
    if (t == "hedlm") return Method::Hedlm;
    if (t == "random") return Method::Random;
    if (t == "distance") return Method::Distance;
    throw Error("pipeline", "unknown method '" + token + "'");
}

namespace {

// Deterministic per-target random stream, stable under any threading.
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t bounded_draw(std::uint64_t& state, std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    while (true) {
        const std::uint64_t x = splitmix64(state);
        if (x < limit) return x % n;
    }
}

llm::PromptOptions prompt_options(const PipelineConfig& cfg) {
    llm::PromptOptions opts;
    opts.dk_as_system_message = cfg.dk_as_system_message;
    opts.model = cfg.model;
    opts.temperature = cfg.temperature;
    return opts;
}

class MockScorer final : public RelevanceScorer {
public:
    llm::RelevanceResult score(const features::FeatureVector& labeled, Label label,
                               const features::FeatureVector& target,
                               const prompt::DomainKnowledge& dk) override {
        return llm::mock_score(labeled, label, target, dk);
    }
};

class MockPredictor final : public LabelPredictor {
public:
    std::string reply(const prompt::PromptBundle& bundle, int /*attempt*/,
                      const std::string& /*prior_reply*/) override {
        std::vector<llm::MockShotView> views;
        views.reserve(bundle.shots.size());
        for (const auto& shot : bundle.shots) views.push_back({&shot.features, shot.label});
        return llm::mock_fewshot_reply(views, bundle.target, bundle.dk);
    }
};

class LiveScorer final : public RelevanceScorer {
public:
    LiveScorer(std::shared_ptr<llm::ChatClient> client, const PipelineConfig& cfg)
        : client_(std::move(client)), opts_(prompt_options(cfg)) {}

    llm::RelevanceResult score(const features::FeatureVector& labeled, Label label,
                               const features::FeatureVector& target,
                               const prompt::DomainKnowledge& dk) override {
        const auto request = llm::build_scoring_prompt(labeled, label, target, dk, opts_);
        auto completion = client_->complete(request);
        try {
            return to_result(completion);
        } catch (const Error&) {
            // One retry with an explicit format reminder, then a neutral score
            // so a single unparseable reply cannot sink the whole run.
        }
        auto retry = request;
        retry.messages.back().content +=
            "\n\nYour previous reply could not be parsed. Respond with exactly:\n"
            "SCORE: <float 0..1>\nREASON: <one line>\n";
        completion = client_->complete(retry);
        try {
            return to_result(completion);
        } catch (const Error&) {
            llm::RelevanceResult fallback;
            fallback.score = 0.5;
            fallback.reason = "unparseable reply; neutral fallback";
            fallback.raw = completion.text;
            fallback.source = completion.source;
            return fallback;
        }
    }

private:
    static llm::RelevanceResult to_result(const llm::CompletionResult& completion) {
        const auto parsed = llm::parse_score(completion.text);
        llm::RelevanceResult result;
        result.score = parsed.score;
        result.reason = parsed.reason;
        result.raw = completion.text;
        result.source = completion.source;
        return result;
    }

    std::shared_ptr<llm::ChatClient> client_;
    llm::PromptOptions opts_;
};

class LivePredictor final : public LabelPredictor {
public:
    explicit LivePredictor(std::shared_ptr<llm::ChatClient> client) : client_(std::move(client)) {}

    std::string reply(const prompt::PromptBundle& bundle, int attempt,
                      const std::string& prior_reply) override {
        if (attempt <= 1) return client_->complete(bundle.request).text;
        auto retry = bundle.request;
        retry.messages.back().content += "\n\nYour previous reply was: '" + prior_reply +
                                         "'.\nReturn only 'fatigue' or 'non-fatigue'.\n";
        return client_->complete(retry).text;
    }

private:
    std::shared_ptr<llm::ChatClient> client_;
};

std::vector<knn::DistanceCandidate> retrieve_candidates(const features::FeatureVector& target,
                                                        std::span<const features::FeatureVector> pool,
                                                        const PipelineConfig& cfg, int k) {
    if (!cfg.zscore_features) return knn::nearest_candidates(target, pool, k);

    // Standardize each dimension over the pool for the distance ranking only;
    // candidates keep their raw features for prompting.
    std::array<double, kFeatureCount> mean{}, sd{};
    for (const auto& fv : pool) {
        for (std::size_t d = 0; d < kFeatureCount; ++d) mean[d] += fv.values[d];
    }
    for (double& m : mean) m /= static_cast<double>(pool.size());
    for (const auto& fv : pool) {
        for (std::size_t d = 0; d < kFeatureCount; ++d) {
            const double diff = fv.values[d] - mean[d];
            sd[d] += diff * diff;
        }
    }
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(pool.size()));

    auto standardize = [&](const features::FeatureVector& fv) {
        features::FeatureVector z = fv;
        for (std::size_t d = 0; d < kFeatureCount; ++d) {
            if (sd[d] > 0.0) z.values[d] = (z.values[d] - mean[d]) / sd[d];
        }
        return z;
    };

    std::vector<features::FeatureVector> zpool;
    zpool.reserve(pool.size());
    std::unordered_map<std::uint64_t, const features::FeatureVector*> raw_by_row;
    for (const auto& fv : pool) {
        zpool.push_back(standardize(fv));
        raw_by_row[fv.row_index] = &fv;
    }
    auto candidates = knn::nearest_candidates(standardize(target), zpool, k);
    for (auto& c : candidates) c.features = *raw_by_row.at(c.features.row_index);
    return candidates;
}

std::vector<prompt::Shot> hedlm_shots(const features::FeatureVector& target,
                                      std::span<const features::FeatureVector> pool,
                                      const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                      RelevanceScorer& scorer) {
    const auto candidates = retrieve_candidates(target, pool, cfg, cfg.distance_k);

    std::vector<prompt::ScoredCandidate> scored;
    scored.reserve(candidates.size());
    for (const auto& candidate : candidates) {
        const auto result = scorer.score(candidate.features, candidate.label(), target, dk);
        scored.push_back({candidate, result.score, result.reason});
    }
    auto top = prompt::rerank(std::move(scored), cfg.top_k);

    std::vector<prompt::Shot> shots;
    if (top.size() < 2) {
        // The spec'd refill: bring the distance ranking back in before shot
        // selection when the scored list alone cannot make a pair.
        for (const auto& candidate : candidates) {
            if (!top.empty() && candidate.features.row_index == top.front().row_index()) continue;
            top.push_back({candidate, 0.0, ""});
            if (top.size() >= 2) break;
        }
    }
    if (cfg.n_shots == 1) {
        shots.push_back(prompt::shot_from(top.front()));
        return shots;
    }
    const auto pair = prompt::select_shots(top);
    shots.push_back(pair.first);
    shots.push_back(pair.second);
    // n_shots beyond 2: keep appending the remaining candidates in rerank order.
    for (const auto& sc : top) {
        if (static_cast<int>(shots.size()) >= cfg.n_shots) break;
        const bool used = std::any_of(shots.begin(), shots.end(), [&](const prompt::Shot& s) {
            return s.features.row_index == sc.row_index();
        });
        if (!used) shots.push_back(prompt::shot_from(sc));
    }
    return shots;
}

std::vector<prompt::Shot> random_shots(const features::FeatureVector& target,
                                       std::span<const features::FeatureVector> pool,
                                       const PipelineConfig& cfg) {
    std::uint64_t state = cfg.seed;
    state ^= fnv1a(target.user_id) + 0x9E3779B97F4A7C15ull;
    state ^= target.row_index * 0xBF58476D1CE4E5B9ull;
    splitmix64(state);

    const std::size_t want = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(cfg.n_shots));
    std::vector<std::size_t> chosen;
    while (chosen.size() < want) {
        const auto i = static_cast<std::size_t>(bounded_draw(state, pool.size()));
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    }

    std::vector<prompt::Shot> shots;
    for (const auto i : chosen) {
        knn::DistanceCandidate candidate{pool[i], knn::euclidean(target, pool[i])};
        shots.push_back(prompt::shot_from(candidate));
    }
    return shots;
}

std::vector<prompt::Shot> distance_shots(const features::FeatureVector& target,
                                         std::span<const features::FeatureVector> pool,
                                         const PipelineConfig& cfg) {
    const auto nearest = retrieve_candidates(target, pool, cfg, cfg.n_shots);
    std::vector<prompt::Shot> shots;
    shots.reserve(nearest.size());
    for (const auto& candidate : nearest) shots.push_back(prompt::shot_from(candidate));
    return shots;
}

}  // namespace

std::unique_ptr<RelevanceScorer> make_mock_scorer() { return std::make_unique<MockScorer>(); }
std::unique_ptr<LabelPredictor> make_mock_predictor() { return std::make_unique<MockPredictor>(); }

std::unique_ptr<RelevanceScorer> make_live_scorer(std::shared_ptr<llm::ChatClient> client,
                                                  const PipelineConfig& cfg) {
    return std::make_unique<LiveScorer>(std::move(client), cfg);
}

std::unique_ptr<LabelPredictor> make_live_predictor(std::shared_ptr<llm::ChatClient> client,
                                                    const PipelineConfig&) {
    return std::make_unique<LivePredictor>(std::move(client));
}

std::string audit_json_line(const PredictionRecord& rec) {
    using nlohmann::json;
    json shots = json::array();
    for (const auto& shot : rec.shots) {
        json entry = {{"user_id", shot.features.user_id},
                      {"row_index", shot.features.row_index},
                      {"label", to_string(shot.label)},
                      {"distance", shot.distance},
                      {"reason", shot.reason}};
        if (shot.score) entry["score"] = *shot.score;
        shots.push_back(entry);
    }
    json line = {{"user_id", rec.user_id},
                 {"row_index", rec.row_index},
                 {"method", to_string(rec.method)},
                 {"predicted", to_string(rec.predicted)},
                 {"raw_reply", rec.raw_reply},
                 {"ambiguous_fallback", rec.ambiguous_fallback},
                 {"shots", shots}};
    if (rec.truth) line["truth"] = to_string(*rec.truth);
    return line.dump();
}

PredictionRecord predict_from_features(const features::FeatureVector& target,
                                       std::span<const features::FeatureVector> pool, Method method,
                                       const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                       RelevanceScorer& scorer, LabelPredictor& predictor) {
    cfg.validate();
    if (pool.size() < 2) throw Error("pipeline", "support pool must contain at least 2 records");
    for (const auto& fv : pool) {
        if (fv.row_index == target.row_index) {
            throw Error("pipeline", "target row " + std::to_string(target.row_index) +
                                        " must not appear in its own support pool");
        }
    }

    const auto started = std::chrono::steady_clock::now();

    std::vector<prompt::Shot> shots;
    switch (method) {
        case Method::Hedlm: shots = hedlm_shots(target, pool, cfg, dk, scorer); break;
        case Method::Random: shots = random_shots(target, pool, cfg); break;
        case Method::Distance: shots = distance_shots(target, pool, cfg); break;
    }

    const auto bundle = prompt::build_fewshot_prompt(shots, target, dk, prompt_options(cfg));

    PredictionRecord rec;
    rec.user_id = target.user_id;
    rec.row_index = target.row_index;
    rec.method = method;
    rec.shots = shots;
    rec.truth = target.label;

    std::string reply = predictor.reply(bundle, 1, "");
    try {
        rec.predicted = prompt::parse_label(reply);
    } catch (const prompt::AmbiguousLabel&) {
        const std::string retry_reply = predictor.reply(bundle, 2, reply);
        reply += "\n---\n" + retry_reply;
        try {
            rec.predicted = prompt::parse_label(retry_reply);
        } catch (const prompt::AmbiguousLabel&) {
            // Deterministic last resort: the label of the most salient shot.
            rec.predicted = shots.front().label;
            rec.ambiguous_fallback = true;
        }
    }
    rec.raw_reply = reply;

    for (const auto& shot : rec.shots) {
        if (shot.features.row_index == rec.row_index && shot.features.user_id == rec.user_id) {
            throw Error("pipeline", "leakage: target row " + std::to_string(rec.row_index) +
                                        " appeared among its own shots");
        }
    }

    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

namespace {

PredictionRecord predict_from_records(const SignalRecord& target,
                                      const std::vector<SignalRecord>& pool, Method method,
                                      const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                      RelevanceScorer& scorer, LabelPredictor& predictor) {
    if (pool.size() < 2) throw Error("pipeline", "support pool must contain at least 2 records");
    const auto coeffs =
        dsp::design_butterworth(cfg.filter.order, cfg.filter.cutoff_hz, cfg.filter.sample_rate_hz);
    const auto target_fv = features::extract_feature_vector(target, cfg, coeffs);
    std::vector<features::FeatureVector> pool_fvs;
    pool_fvs.reserve(pool.size());
    for (const auto& rec : pool) {
        if (!rec.label) {
            throw Error("pipeline", "pool row " + std::to_string(rec.row_index) + " is unlabeled");
        }
        pool_fvs.push_back(features::extract_feature_vector(rec, cfg, coeffs));
    }
    return predict_from_features(target_fv, pool_fvs, method, cfg, dk, scorer, predictor);
}

}  // namespace

PredictionRecord hedlm_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                               const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                               RelevanceScorer& scorer, LabelPredictor& predictor) {
    return predict_from_records(target, pool, Method::Hedlm, cfg, dk, scorer, predictor);
}

PredictionRecord random_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                                const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                LabelPredictor& predictor) {
    auto scorer = make_mock_scorer();  // unused by the random path
    return predict_from_records(target, pool, Method::Random, cfg, dk, *scorer, predictor);
}

PredictionRecord distance_predict(const SignalRecord& target, const std::vector<SignalRecord>& pool,
                                  const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                  LabelPredictor& predictor) {
    auto scorer = make_mock_scorer();  // unused by the distance path
    return predict_from_records(target, pool, Method::Distance, cfg, dk, *scorer, predictor);
}

UserEvalResult run_user_evaluation(const UserSubset& subset, Method method,
                                   const PipelineConfig& cfg, const prompt::DomainKnowledge& dk,
                                   RelevanceScorer& scorer, LabelPredictor& predictor) {
    cfg.validate();
    if (subset.records.size() < 3) {
        throw Error("pipeline", "user '" + subset.user_id + "' has fewer than 3 records");
    }
    bool has_fatigue = false, has_nonfatigue = false;
    for (const auto& rec : subset.records) {
        if (!rec.label) {
            throw Error("pipeline", "evaluation requires labels; row " +
                                        std::to_string(rec.row_index) + " is unlabeled");
        }
        (rec.label == Label::Fatigue ? has_fatigue : has_nonfatigue) = true;
    }
    if (!has_fatigue || !has_nonfatigue) {
        throw Error("pipeline", "user '" + subset.user_id + "' has a single-class subset");
    }

    const auto all_features = batch::extract_features(subset.records, cfg, cfg.jobs);
    const std::int64_t n = static_cast<std::int64_t>(subset.records.size());

    UserEvalResult result;
    result.user_id = subset.user_id;
    result.predictions.resize(subset.records.size());

    std::exception_ptr error;
    const int threads = cfg.jobs <= 0 ? omp_get_max_threads() : cfg.jobs;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            std::vector<features::FeatureVector> pool;
            pool.reserve(all_features.size() - 1);
            for (std::int64_t j = 0; j < n; ++j) {
                if (j != i) pool.push_back(all_features[j]);
            }
            result.predictions[i] =
                predict_from_features(all_features[i], pool, method, cfg, dk, scorer, predictor);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    for (const auto& prediction : result.predictions) {
        result.confusion.add(*prediction.truth, prediction.predicted);
    }
    result.macro_f1 = eval::macro_f1(result.confusion);
    return result;
}

}  // namespace hedlm::pipeline
