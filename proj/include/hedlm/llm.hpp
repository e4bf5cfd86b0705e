#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "hedlm/chat.hpp"
#include "hedlm/domain_knowledge.hpp"
#include "hedlm/features.hpp"

namespace hedlm::llm {

enum class ResultSource { Live, Cache, Mock };

struct RelevanceResult {
    double score = 0.0;  // in [0,1]
    std::string reason;
    std::string raw;
    ResultSource source = ResultSource::Mock;
};

struct ParsedScore {
    double score = 0.0;
    std::string reason;
    bool clamped = false;  // true when the reply's value fell outside [0,1]
};

/// Extracts the first case-insensitive `SCORE:` float and the following
/// `REASON:` text. Out-of-range scores are clamped and flagged. Throws when no
/// score can be parsed.
ParsedScore parse_score(const std::string& text);

struct PromptOptions {
    bool dk_as_system_message = false;
    std::string model = "gpt-4o-mini";
    double temperature = 0.3;
};

/// Renders the relevance-scoring prompt: domain knowledge, instruction, the
/// labeled and new subjects' per-segment feature blocks (4 decimal places),
/// the relevancy guidance, and the SCORE:/REASON: output contract.
ChatRequest build_scoring_prompt(const features::FeatureVector& labeled, Label label,
                                 const features::FeatureVector& target,
                                 const prompt::DomainKnowledge& dk,
                                 const PromptOptions& options = {});

// --- transport ---------------------------------------------------------

struct TransportReply {
    bool transport_ok = false;  // false: connection-level failure
    int status = 0;
    std::string body;
    std::string error;  // transport-level error text when !transport_ok
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportReply post_chat(const std::string& body_json) = 0;
};

struct TransportConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;  // bearer token; the CLI reads HEDLM_API_KEY
    int timeout_s = 60;
    int max_retries = 3;
    int backoff_initial_ms = 250;
    std::string cache_dir;  // empty: caching disabled
};

std::unique_ptr<Transport> make_http_transport(const TransportConfig& cfg);

/// Append-only JSON-lines response cache keyed by a 64-bit hash of the
/// canonical request. Stored requests are verified on lookup, so a hash
/// collision or edited entry surfaces as a corruption error.
class ResponseCache {
public:
    explicit ResponseCache(std::string directory);

    std::optional<std::string> lookup(const std::string& key, const std::string& canonical_request);
    void store(const std::string& key, const std::string& canonical_request,
               const std::string& response);

private:
    std::string path_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::pair<std::string, std::string>> entries_;
};

std::string request_cache_key(const std::string& canonical_request);

struct CompletionResult {
    std::string text;
    ResultSource source = ResultSource::Live;
};

/// Chat-completion client with retry, exponential backoff, and optional
/// on-disk caching. Safe for concurrent use.
class ChatClient {
public:
    ChatClient(TransportConfig cfg, std::unique_ptr<Transport> transport = nullptr);

    /// Returns the assistant message content. Consults the cache first;
    /// retries transient transport failures (connection errors, 429, 5xx).
    CompletionResult complete(const ChatRequest& req);

    std::uint64_t requests_sent() const { return requests_sent_; }

private:
    TransportConfig cfg_;
    std::unique_ptr<Transport> transport_;
    std::unique_ptr<ResponseCache> cache_;
    std::atomic<std::uint64_t> requests_sent_{0};
};

}  // namespace hedlm::llm
