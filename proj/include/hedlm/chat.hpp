#pragma once

#include <string>
#include <vector>

namespace hedlm::llm {

struct ChatMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct ChatRequest {
    std::string model = "gpt-4o-mini";
    double temperature = 0.3;
    std::vector<ChatMessage> messages;
};

/// Canonical JSON body (sorted keys) used both on the wire and as cache key
/// material.
std::string canonical_request_json(const ChatRequest& req);

}  // namespace hedlm::llm
