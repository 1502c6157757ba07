#include "waragent/chat.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "waragent/hash.hpp"

namespace waragent {

using nlohmann::json;

json chat_request_to_json(const ChatRequest& request) {
    json messages = json::array();
    for (const ChatMessage& m : request.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    json j;
    j["model"] = request.model;
    j["messages"] = messages;
    j["temperature"] = request.temperature;
    if (request.seed) j["seed"] = *request.seed;
    return j;
}

std::string chat_cache_key(const ChatRequest& request) {
    // nlohmann dumps object keys sorted, so this serialization is canonical.
    return sha256_hex(chat_request_to_json(request).dump());
}

ChatClient::ChatClient(ChatClientConfig config) : config_(std::move(config)) {
    std::filesystem::create_directories(config_.cache_dir);
}

std::optional<std::string> ChatClient::cache_lookup(const std::string& key) const {
    std::filesystem::path file = config_.cache_dir / (key + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    try {
        json j;
        in >> j;
        return j.at("response").get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;  // treat a corrupt entry as a miss
    }
}

void ChatClient::cache_store(const std::string& key, const ChatRequest& request,
                             const std::string& response) const {
    static std::atomic<unsigned> counter{0};
    json j;
    j["request"] = chat_request_to_json(request);
    j["response"] = response;
    std::filesystem::path final_path = config_.cache_dir / (key + ".json");
    std::filesystem::path tmp =
        config_.cache_dir / (key + ".tmp" + std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp);
        out << j.dump(2) << "\n";
    }
    // Rename keeps concurrent writers last-write-wins with identical content.
    std::filesystem::rename(tmp, final_path);
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw TransportError("endpoint '" + endpoint + "' needs a scheme");
    size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/v1/chat/completions"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string ChatClient::post_with_retries(const ChatRequest& request) {
    SplitUrl url = split_url(config_.endpoint);
    std::string body = chat_request_to_json(request).dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(config_.backoff_ms) * (1 << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(url.base);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        ++network_calls_;
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            if (retryable_status(res->status)) continue;
            throw TransportError("chat endpoint rejected the request: " + last_error);
        }
        try {
            json j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed chat response: ") + e.what());
        }
    }
    throw TransportError("chat endpoint unavailable after " +
                         std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::string ChatClient::chat(const ChatRequest& request) {
    std::string key = chat_cache_key(request);
    if (auto cached = cache_lookup(key)) return *cached;
    if (config_.mode == ChatMode::Replay)
        throw ReplayMiss("no cached response for request " + key);
    std::string response = post_with_retries(request);
    cache_store(key, request, response);
    return response;
}

}  // namespace waragent
