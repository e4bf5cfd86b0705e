#include "hedlm/llm.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace hedlm::llm {

using nlohmann::json;

std::string canonical_request_json(const ChatRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"content", m.content}, {"role", m.role}});
    }
    const json body = {{"messages", messages}, {"model", req.model}, {"temperature", req.temperature}};
    return body.dump();
}

namespace {

void validate_request(const ChatRequest& req) {
    if (req.messages.empty()) throw Error("llm", "chat request has no messages");
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw Error("llm", "temperature must be in [0,2]");
    }
    for (const auto& m : req.messages) {
        if (m.role != "system" && m.role != "user") {
            throw Error("llm", "unsupported message role '" + m.role + "'");
        }
    }
}

std::string segment_feature_line(const features::FeatureVector& fv, int segment) {
    std::string line = "Segment" + std::to_string(segment) + " => ";
    for (int f = 0; f < static_cast<int>(kFeaturesPerSegment); ++f) {
        const auto id = static_cast<features::FeatureId>(f);
        if (f > 0) line += ", ";
        line += features::feature_display_name(id) + "=" + detail::fixed4(fv.at(segment, id));
    }
    return line;
}

std::string subject_block(const std::string& header, const features::FeatureVector& fv) {
    std::string block = header + "\n";
    for (int s = 1; s <= static_cast<int>(kSegmentsPerRecord); ++s) {
        block += segment_feature_line(fv, s) + "\n";
    }
    return block;
}

std::string lower_copy(const std::string& s) { return ascii_lower(s); }

}  // namespace

ChatRequest build_scoring_prompt(const features::FeatureVector& labeled, Label label,
                                 const features::FeatureVector& target,
                                 const prompt::DomainKnowledge& dk, const PromptOptions& options) {
    const std::string labeled_id = labeled.user_id + "#" + std::to_string(labeled.row_index);
    const std::string target_id = target.user_id + "#" + std::to_string(target.row_index);

    std::string body;
    body += "#Instruction: Perform step-by-step numeric comparison internally, don't reveal it.\n";
    body += "#Context:\n";
    body += subject_block("[Labeled Subject | ID=" + labeled_id + ", Label=" + detail::display_label(label) + "]",
                          labeled);
    body += "\n";
    body += subject_block("[New Subject | ID=" + target_id + ", Label=?]", target);
    body += "\n";
    body +=
        "[Guidance for Relevancy Scoring]:\n"
        "1. Check the numeric difference (Mean, Std, RMS, etc.) between segments.\n"
        "   The smaller the difference => higher relevance (0..1).\n"
        "2. Check if the labeled subject label (Fatigue vs Non-Fatigue) matches the numeric pattern of the new subject.\n"
        "   For example, if the labeled subject was Fatigue and the new data appears to have fatigue characteristics (high RMS, etc.), the relevance can increase.\n"
        "3. Use range 0.0..1.0:\n"
        "   - 0.0 => very different & context labels do not match.\n"
        "   - 1.0 => very similar & context labels match.\n"
        "4. Output format:\n"
        "   SCORE: <float>\n"
        "   REASON: <briefly alluding to (a) numeric differences, (b) label context>\n"
        "   Only concise, without chain-of-thought details.\n"
        "\n"
        "#Question:\n"
        "Please compare the numeric data segment by segment. If the differences in Mean, Std, RMS etc. are very small => high relevance.\n"
        "Also check whether the labeled subject labels (Fatigue/Non-Fatigue) are aligned with the numeric pattern of the new subject.\n"
        "Output format:\n"
        "SCORE: <float 0..1>\n"
        "REASON: <1-2 lines about numeric differences & label context match>\n"
        "Do not display long reasoning.\n"
        "\n"
        "Example:\n"
        "SCORE: 0.90\n"
        "REASON: 'Segment1-2 very similar in RMS, label=Fatigue matches high RMS pattern.'\n";

    ChatRequest req;
    req.model = options.model;
    req.temperature = options.temperature;
    const std::string dk_block = "#Domain Knowledge: " + dk.text + "\n";
    if (options.dk_as_system_message) {
        req.messages.push_back({"system", dk_block});
        req.messages.push_back({"user", body});
    } else {
        req.messages.push_back({"user", dk_block + body});
    }
    return req;
}

ParsedScore parse_score(const std::string& text) {
    const std::string lower = lower_copy(text);
    std::size_t search = 0;
    while (true) {
        const std::size_t pos = lower.find("score:", search);
        if (pos == std::string::npos) {
            throw Error("llm", "no parseable SCORE in reply");
        }
        const std::size_t value_begin = pos + 6;
        std::size_t line_end = text.find('\n', value_begin);
        if (line_end == std::string::npos) line_end = text.size();
        const std::string value_text = text.substr(value_begin, line_end - value_begin);

        const char* begin = value_text.c_str();
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end != begin) {
            ParsedScore parsed;
            parsed.score = value;
            if (value < 0.0 || value > 1.0) {
                parsed.clamped = true;
                parsed.score = std::min(1.0, std::max(0.0, value));
            }
            const std::size_t rpos = lower.find("reason:", line_end);
            if (rpos != std::string::npos) {
                std::size_t rend = text.find('\n', rpos);
                if (rend == std::string::npos) rend = text.size();
                parsed.reason = detail::trim(text.substr(rpos + 7, rend - rpos - 7));
            }
            return parsed;
        }
        search = pos + 6;
    }
}

// --- transport -----------------------------------------------------------

namespace {

class HttpTransport final : public Transport {
public:
    explicit HttpTransport(TransportConfig cfg) : cfg_(std::move(cfg)) {
        const auto scheme_end = cfg_.base_url.find("://");
        if (scheme_end == std::string::npos) {
            throw Error("llm", "base_url must include a scheme: '" + cfg_.base_url + "'");
        }
        const auto path_begin = cfg_.base_url.find('/', scheme_end + 3);
        if (path_begin == std::string::npos) {
            host_ = cfg_.base_url;
        } else {
            host_ = cfg_.base_url.substr(0, path_begin);
            prefix_ = cfg_.base_url.substr(path_begin);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
    }

    TransportReply post_chat(const std::string& body_json) override {
        httplib::Client client(host_);
        client.set_connection_timeout(cfg_.timeout_s, 0);
        client.set_read_timeout(cfg_.timeout_s, 0);
        client.set_write_timeout(cfg_.timeout_s, 0);

        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        auto res = client.Post(prefix_ + "/chat/completions", headers, body_json, "application/json");
        TransportReply reply;
        if (!res) {
            reply.error = httplib::to_string(res.error());
            return reply;
        }
        reply.transport_ok = true;
        reply.status = res->status;
        reply.body = res->body;
        return reply;
    }

private:
    TransportConfig cfg_;
    std::string host_;
    std::string prefix_;
};

std::string extract_assistant_content(const std::string& body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw Error("llm", std::string("completion response is not JSON: ") + e.what());
    }
    try {
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error("llm", "completion response has no choices[0].message.content");
    }
}

}  // namespace

std::unique_ptr<Transport> make_http_transport(const TransportConfig& cfg) {
    return std::make_unique<HttpTransport>(cfg);
}

std::string request_cache_key(const std::string& canonical_request) {
    // FNV-1a 64 over the canonical serialization.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_request) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ResponseCache::ResponseCache(std::string directory) {
    std::filesystem::create_directories(directory);
    path_ = (std::filesystem::path(directory) / "cache.jsonl").string();

    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json entry;
        try {
            entry = json::parse(line);
        } catch (const json::exception&) {
            throw Error("llm", "cache corruption in " + path_ + " at line " + std::to_string(lineno));
        }
        if (!entry.contains("key") || !entry.contains("request") || !entry.contains("response")) {
            throw Error("llm", "cache corruption in " + path_ + " at line " + std::to_string(lineno) +
                                   ": missing field");
        }
        entries_[entry["key"].get<std::string>()] = {entry["request"].get<std::string>(),
                                                     entry["response"].get<std::string>()};
    }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key,
                                                 const std::string& canonical_request) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    if (it->second.first != canonical_request) {
        throw Error("llm", "cache entry " + key + " does not match its stored request");
    }
    return it->second.second;
}

void ResponseCache::store(const std::string& key, const std::string& canonical_request,
                          const std::string& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[key] = {canonical_request, response};
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("llm", "cannot append to cache file " + path_);
    const json entry = {{"key", key}, {"request", canonical_request}, {"response", response}};
    out << entry.dump() << "\n";
    out.flush();
}

ChatClient::ChatClient(TransportConfig cfg, std::unique_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
    if (!transport_) transport_ = make_http_transport(cfg_);
    if (!cfg_.cache_dir.empty()) cache_ = std::make_unique<ResponseCache>(cfg_.cache_dir);
}

CompletionResult ChatClient::complete(const ChatRequest& req) {
    validate_request(req);
    const std::string canonical = canonical_request_json(req);
    const std::string key = request_cache_key(canonical);

    if (cache_) {
        if (auto hit = cache_->lookup(key, canonical)) {
            return {*hit, ResultSource::Cache};
        }
    }

    std::string last_error;
    const int attempts = 1 + std::max(0, cfg_.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(cfg_.backoff_initial_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        const TransportReply reply = transport_->post_chat(canonical);
        requests_sent_.fetch_add(1, std::memory_order_relaxed);
        if (reply.transport_ok && reply.status >= 200 && reply.status < 300) {
            const std::string content = extract_assistant_content(reply.body);
            if (cache_) cache_->store(key, canonical, content);
            return {content, ResultSource::Live};
        }
        if (reply.transport_ok) {
            last_error = "HTTP status " + std::to_string(reply.status);
            const bool retryable = reply.status == 429 || reply.status >= 500;
            if (!retryable) throw Error("llm", "request failed with " + last_error);
        } else {
            last_error = "connection error: " + reply.error;
        }
    }
    throw Error("llm", "transport failed after " + std::to_string(attempts) + " attempts (" +
                           last_error + ")");
}

}  // namespace hedlm::llm
