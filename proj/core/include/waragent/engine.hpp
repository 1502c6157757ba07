#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waragent/policy.hpp"
#include "waragent/scenario.hpp"
#include "waragent/secretary.hpp"
#include "waragent/worldstate.hpp"

namespace waragent {

struct EngineConfig {
    int max_rounds = 10;
    int eval_snapshot_round = 6;
    int history_window = 1;  // rounds of routed items kept in the inbox
    bool stop_on_connectivity = false;
    int connectivity_window = 3;  // rounds the connected board must stay frozen
    bool mobilization_public = true;
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument

    bool operator==(const EngineConfig&) const = default;
};

nlohmann::json engine_config_to_json(const EngineConfig& config);
EngineConfig engine_config_from_json(const nlohmann::json& j);

/// One action as it hit the world state. Actions that could not take effect
/// (a same-round race or an idempotent duplicate) are kept with status
/// "superseded" and the reason.
struct AppliedEvent {
    Action action;
    std::string line;    // canonical formatting
    std::string status;  // "applied" | "superseded"
    std::string reason;  // violation name or "duplicate"; empty when applied
};

struct AgentRoundRecord {
    std::vector<std::string> inbox;
    std::vector<NegotiationExchange> exchanges;
    std::vector<std::string> final_lines;
    bool amended = false;
    bool policy_failed = false;
};

struct BoardSnapshot {
    std::vector<std::string> codes;  // one row per country, letters D/W/M/T/P
    std::map<std::string, std::string> declarers;  // "i-j" -> declaring country

    static BoardSnapshot of(const Board& board, const Roster& roster);
    bool operator==(const BoardSnapshot&) const = default;
};

struct RoundRecord {
    int round = 0;
    std::vector<AgentRoundRecord> agents;  // roster order
    std::vector<AppliedEvent> applied;     // application order
    BoardSnapshot board;                   // canonical, end of round
    std::vector<std::string> agent_board_digests;
    std::vector<bool> mobilized;           // sticks, end of round
};

nlohmann::json round_record_to_json(const RoundRecord& record, const Roster& roster);
RoundRecord round_record_from_json(const nlohmann::json& j, const Roster& roster);

struct RunLog {
    std::string scenario_id;
    std::vector<std::string> roster_names;
    std::vector<bool> roster_articles;  // definite-article display flags
    std::string overlay_digest;  // empty when the run had no overlay
    std::string attitude = "default";
    EngineConfig config;
    std::vector<RoundRecord> rounds;
    std::string termination;  // "max_rounds" | "board_connectivity"
};

/// Run directory layout:
///   <dir>/config.json                 scenario id, roster, config, termination
///   <dir>/rounds.jsonl                one RoundRecord per line
///   <dir>/boards/round_<n>.txt        rendered canonical grids
///   <dir>/transcripts/                one JSON file per chat exchange
class RunWriter {
public:
    explicit RunWriter(std::filesystem::path dir);

    void write_config(const RunLog& log);
    void append_round(const RoundRecord& record, const Roster& roster);
    void write_board_text(int round, const std::string& grid);
    void write_transcript(const ChatModelPolicy::Exchange& exchange, const std::string& country);
    void finalize(const RunLog& log);

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

RunLog load_run(const std::filesystem::path& dir);

/// Roster reconstructed from a run log (names only; no aliases).
Roster roster_from_log(const RunLog& log);

/// Board rebuilt from a recorded snapshot. Visibility is not recorded, so
/// cells come back public; kinds and declarers are exact.
Board board_from_snapshot(const BoardSnapshot& snapshot, const Roster& roster);

/// Replays every round's final actions through apply_event from the initial
/// state and checks each recorded board snapshot and mobilization vector.
/// Returns the first mismatch description, or nullopt when the log is
/// internally consistent.
std::optional<std::string> verify_runlog_replay(const RunLog& log);

/// Synchronous round orchestration: routes the previous round's events by
/// publicity, runs every agent's secretary loop against the same pre-round
/// snapshot, applies final actions in the documented order (responses first,
/// then initiations, sub-ordered by roster index then proposal order), and
/// enforces the stopping criteria.
class Engine {
public:
    Engine(Scenario scenario, EngineConfig config,
           std::vector<std::shared_ptr<Policy>> policies);  // roster order

    void set_run_dir(const std::filesystem::path& dir);
    void set_overlay_digest(std::string digest);
    void set_attitude(Attitude attitude);

    RunLog run();

    const WorldState& state() const { return state_; }
    const Scenario& scenario() const { return scenario_; }

    /// Context an agent sees this round; exposed for tests and policies.
    AgentContext build_context(int country, const WorldState& snapshot,
                               const std::vector<std::string>& inbox) const;

private:
    struct RoutedItem {
        int actor;
        std::vector<int> recipients;
        std::string text;
    };

    RoundRecord step(const std::vector<std::vector<std::string>>& inboxes);
    std::vector<RoutedItem> route(const std::vector<AppliedEvent>& applied) const;
    std::optional<std::string> should_stop(int round) const;

    Scenario scenario_;
    Roster roster_;
    EngineConfig config_;
    std::vector<std::shared_ptr<Policy>> policies_;
    WorldState state_;
    std::vector<std::vector<std::string>> histories_;
    std::vector<Board> board_history_;  // post-round canonical boards
    std::optional<RunWriter> writer_;
    std::string overlay_digest_;
    Attitude attitude_ = Attitude::Default;
};

}  // namespace waragent
