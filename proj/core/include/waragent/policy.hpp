#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "waragent/chat.hpp"
#include "waragent/prompts.hpp"
#include "waragent/scenario.hpp"
#include "waragent/worldstate.hpp"

namespace waragent {

/// Everything one agent may see when proposing actions for a round. The
/// situation text and structured snapshot both derive from the agent's own
/// board view, never from the omniscient state.
struct AgentContext {
    int country = 0;
    std::string country_name;
    int round = 1;

    std::string profile_text;             // render_profile output
    std::string situation;                // trigger (round 1) or board translation + stick line
    std::vector<std::string> inbox;       // items delivered this round
    std::vector<std::string> history;     // own past action lines

    const Roster* roster = nullptr;
    Board view;
    Stick stick;
    std::vector<PendingRequest> pending;  // requests addressed to this country
};

/// Policy endpoint kept failing; the engine degrades the agent to a wait.
class PolicyUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scripted run was asked for a (country, round) the script does not cover.
class ScriptGap : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Policy {
public:
    virtual ~Policy() = default;

    /// Returns proposed action lines. `feedback` carries the secretary's
    /// numbered issue list when the previous proposal was rejected.
    virtual std::vector<std::string> propose(const AgentContext& context,
                                             const std::optional<std::string>& feedback) = 0;
};

/// JSON map round -> country -> action lines, with an optional "corrections"
/// section consulted when the secretary pushes back. Keys starting with "_"
/// are comments.
class Script {
public:
    static Script load(const std::filesystem::path& path);
    static Script from_json(const nlohmann::json& j);

    const std::vector<std::string>* lines(int round, const std::string& country) const;
    const std::vector<std::string>* correction(int round, const std::string& country) const;
    int max_round() const;
    bool covers(const std::string& country, int round) const;

    /// Countries in `roster` missing an entry for any round in 1..rounds.
    std::vector<std::string> coverage_gaps(const Roster& roster, int rounds) const;

private:
    std::map<int, std::map<std::string, std::vector<std::string>>> rounds_;
    std::map<int, std::map<std::string, std::vector<std::string>>> corrections_;
};

class ScriptedPolicy : public Policy {
public:
    ScriptedPolicy(std::shared_ptr<const Script> script, std::string country);

    std::vector<std::string> propose(const AgentContext& context,
                                     const std::optional<std::string>& feedback) override;

private:
    std::shared_ptr<const Script> script_;
    std::string country_;
};

/// Uniform sampler over actions that are legal against the agent's own view,
/// so its output always passes the secretary. Draws are derived from
/// (master seed, country index, round) and are stable across calls.
class RandomPolicy : public Policy {
public:
    RandomPolicy(std::uint64_t master_seed, int country_index);

    std::vector<std::string> propose(const AgentContext& context,
                                     const std::optional<std::string>& feedback) override;

private:
    std::uint64_t master_seed_;
    int country_index_;
};

struct ChatPolicyConfig {
    std::string model = "gpt-4-1106-preview";
    double temperature = 1.0;
    Attitude attitude = Attitude::Default;
    bool pass_seed = true;
};

/// Staged-prompt chat policy: four chat calls build a fresh proposal
/// (allies, enemies, actions, closing analysis); a secretary correction is
/// one further call on top of the same conversation.
class ChatModelPolicy : public Policy {
public:
    ChatModelPolicy(ChatClient& client, const PromptLibrary& prompts, ChatPolicyConfig config,
                    std::uint64_t master_seed, int country_index);

    std::vector<std::string> propose(const AgentContext& context,
                                     const std::optional<std::string>& feedback) override;

    struct Exchange {
        int round = 0;
        std::string stage;  // "allies" | "enemies" | "actions" | "analysis" | "correction"
        std::string cache_key;
        ChatRequest request;
        std::string response;
    };

    /// Exchanges accumulated since the last drain, for the run transcript.
    std::vector<Exchange> drain_transcript();

    static std::vector<std::string> extract_action_lines(const std::string& response);

private:
    std::string call(const std::string& stage, int round);

    ChatClient& client_;
    const PromptLibrary& prompts_;
    ChatPolicyConfig config_;
    std::uint64_t master_seed_;
    int country_index_;

    std::vector<ChatMessage> chain_;
    int chain_round_ = -1;
    std::vector<Exchange> transcript_;
};

}  // namespace waragent
