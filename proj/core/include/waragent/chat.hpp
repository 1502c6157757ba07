#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace waragent {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    std::optional<std::uint64_t> seed;

    bool operator==(const ChatRequest&) const = default;
};

/// Canonical wire/cache form of a request (sorted keys, compact dump). The
/// cache key is a pure function of this serialization.
nlohmann::json chat_request_to_json(const ChatRequest& request);
std::string chat_cache_key(const ChatRequest& request);

/// Endpoint kept failing after the configured retries.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Replay mode found no cached response for the request.
class ReplayMiss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ChatMode { Record, Replay };

struct ChatClientConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8089/v1/chat/completions"
    std::string api_key;   // sent as a Bearer token when non-empty
    ChatMode mode = ChatMode::Record;
    std::filesystem::path cache_dir = "cache";
    int max_retries = 3;       // attempts beyond the first
    int backoff_ms = 500;      // doubled per retry
    int timeout_seconds = 120;
};

/// Chat-completion client with a content-addressed response cache. Record
/// mode serves cache hits without network and persists fresh responses;
/// replay mode never touches the network.
class ChatClient {
public:
    explicit ChatClient(ChatClientConfig config);

    std::string chat(const ChatRequest& request);

    int network_calls() const { return network_calls_; }
    const ChatClientConfig& config() const { return config_; }

private:
    std::optional<std::string> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const ChatRequest& request,
                     const std::string& response) const;
    std::string post_with_retries(const ChatRequest& request);

    ChatClientConfig config_;
    int network_calls_ = 0;
};

}  // namespace waragent
