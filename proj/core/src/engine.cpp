#include "waragent/engine.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "waragent/eval.hpp"
#include "waragent/hash.hpp"

namespace waragent {

using nlohmann::json;

void EngineConfig::validate() const {
    if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
    if (eval_snapshot_round < 1 || eval_snapshot_round > max_rounds)
        throw std::invalid_argument("eval_snapshot_round must lie in 1..max_rounds");
    if (history_window < 1) throw std::invalid_argument("history_window must be at least 1");
    if (connectivity_window < 1)
        throw std::invalid_argument("connectivity stability window must be at least 1");
}

json engine_config_to_json(const EngineConfig& c) {
    return {{"max_rounds", c.max_rounds},
            {"eval_snapshot_round", c.eval_snapshot_round},
            {"history_window", c.history_window},
            {"stop_on_connectivity", c.stop_on_connectivity},
            {"connectivity_window", c.connectivity_window},
            {"mobilization_public", c.mobilization_public},
            {"seed", c.seed}};
}

EngineConfig engine_config_from_json(const json& j) {
    EngineConfig c;
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.eval_snapshot_round = j.value("eval_snapshot_round", c.eval_snapshot_round);
    c.history_window = j.value("history_window", c.history_window);
    c.stop_on_connectivity = j.value("stop_on_connectivity", c.stop_on_connectivity);
    c.connectivity_window = j.value("connectivity_window", c.connectivity_window);
    c.mobilization_public = j.value("mobilization_public", c.mobilization_public);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace {

char relation_letter(RelationKind kind) {
    switch (kind) {
        case RelationKind::Default: return 'D';
        case RelationKind::War: return 'W';
        case RelationKind::MilitaryAlliance: return 'M';
        case RelationKind::NonInterventionTreaty: return 'T';
        case RelationKind::PeaceAgreement: return 'P';
    }
    return '?';
}

RelationKind relation_from_letter(char c) {
    switch (c) {
        case 'D': return RelationKind::Default;
        case 'W': return RelationKind::War;
        case 'M': return RelationKind::MilitaryAlliance;
        case 'T': return RelationKind::NonInterventionTreaty;
        case 'P': return RelationKind::PeaceAgreement;
    }
    throw std::invalid_argument(std::string("unknown relation code '") + c + "'");
}

ActionKind kind_from_verb(const std::string& verb) {
    for (ActionKind kind : kAllActionKinds)
        if (verb_phrase(kind) == verb) return kind;
    throw std::invalid_argument("unknown action verb '" + verb + "'");
}

}  // namespace

BoardSnapshot BoardSnapshot::of(const Board& board, const Roster& roster) {
    BoardSnapshot snap;
    int n = board.size();
    snap.codes.assign(n, std::string(static_cast<size_t>(n), 'D'));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const RelationCell& cell = board.at(i, j);
            snap.codes[i][j] = relation_letter(cell.kind);
            if (i < j && cell.kind == RelationKind::War && cell.declarer)
                snap.declarers[std::to_string(i) + "-" + std::to_string(j)] =
                    roster.name(*cell.declarer);
        }
    }
    return snap;
}

namespace {

json applied_event_to_json(const AppliedEvent& event) {
    json j;
    j["actor"] = event.action.actor;
    j["verb"] = verb_phrase(event.action.kind);
    j["targets"] = event.action.targets;
    if (event.action.content) j["content"] = *event.action.content;
    j["round"] = event.action.round;
    j["line"] = event.line;
    j["status"] = event.status;
    if (!event.reason.empty()) j["reason"] = event.reason;
    return j;
}

AppliedEvent applied_event_from_json(const json& j) {
    AppliedEvent event;
    event.action.actor = j.at("actor").get<std::string>();
    event.action.kind = kind_from_verb(j.at("verb").get<std::string>());
    event.action.targets = j.at("targets").get<std::vector<std::string>>();
    if (j.contains("content")) event.action.content = j.at("content").get<std::string>();
    event.action.round = j.at("round").get<int>();
    event.line = j.at("line").get<std::string>();
    event.status = j.at("status").get<std::string>();
    event.reason = j.value("reason", "");
    return event;
}

json verdict_to_json(const Verdict& verdict) {
    json issues = json::array();
    for (const Issue& issue : verdict.issues)
        issues.push_back({{"index", issue.action_index},
                          {"rule", rule_id_name(issue.rule)},
                          {"reason", issue.reason}});
    return issues;
}

Verdict verdict_from_json(const json& j) {
    Verdict verdict;
    for (const auto& issue : j) {
        RuleId rule = RuleId::R1;
        const std::string name = issue.at("rule").get<std::string>();
        for (int r = 0; r < 8; ++r) {
            if (rule_id_name(static_cast<RuleId>(r)) == name) rule = static_cast<RuleId>(r);
        }
        verdict.issues.push_back(
            {issue.at("index").get<int>(), rule, issue.at("reason").get<std::string>()});
    }
    return verdict;
}

}  // namespace

json round_record_to_json(const RoundRecord& record, const Roster& roster) {
    json agents = json::object();
    for (int c = 0; c < roster.size(); ++c) {
        const AgentRoundRecord& agent = record.agents.at(c);
        json exchanges = json::array();
        for (const NegotiationExchange& e : agent.exchanges)
            exchanges.push_back({{"proposal", e.proposal}, {"issues", verdict_to_json(e.verdict)}});
        agents[roster.name(c)] = {{"inbox", agent.inbox},
                                  {"exchanges", exchanges},
                                  {"final", agent.final_lines},
                                  {"amended", agent.amended},
                                  {"policy_failed", agent.policy_failed}};
    }

    json applied = json::array();
    for (const AppliedEvent& event : record.applied) applied.push_back(applied_event_to_json(event));

    json digests = json::object();
    json mobilized = json::object();
    for (int c = 0; c < roster.size(); ++c) {
        digests[roster.name(c)] = record.agent_board_digests.at(c);
        mobilized[roster.name(c)] = static_cast<bool>(record.mobilized.at(c));
    }

    return {{"round", record.round},
            {"agents", agents},
            {"applied", applied},
            {"board", {{"codes", record.board.codes}, {"declarers", record.board.declarers}}},
            {"view_digests", digests},
            {"mobilized", mobilized}};
}

RoundRecord round_record_from_json(const json& j, const Roster& roster) {
    RoundRecord record;
    record.round = j.at("round").get<int>();
    record.agents.resize(roster.size());
    for (int c = 0; c < roster.size(); ++c) {
        const json& aj = j.at("agents").at(roster.name(c));
        AgentRoundRecord& agent = record.agents[c];
        agent.inbox = aj.at("inbox").get<std::vector<std::string>>();
        for (const auto& ej : aj.at("exchanges"))
            agent.exchanges.push_back({ej.at("proposal").get<std::vector<std::string>>(),
                                       verdict_from_json(ej.at("issues"))});
        agent.final_lines = aj.at("final").get<std::vector<std::string>>();
        agent.amended = aj.at("amended").get<bool>();
        agent.policy_failed = aj.at("policy_failed").get<bool>();
    }
    for (const auto& ej : j.at("applied")) record.applied.push_back(applied_event_from_json(ej));
    record.board.codes = j.at("board").at("codes").get<std::vector<std::string>>();
    record.board.declarers =
        j.at("board").at("declarers").get<std::map<std::string, std::string>>();
    record.agent_board_digests.resize(roster.size());
    record.mobilized.resize(roster.size());
    for (int c = 0; c < roster.size(); ++c) {
        record.agent_board_digests[c] =
            j.at("view_digests").at(roster.name(c)).get<std::string>();
        record.mobilized[c] = j.at("mobilized").at(roster.name(c)).get<bool>();
    }
    return record;
}

RunWriter::RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    std::filesystem::create_directories(dir_ / "boards");
    std::filesystem::create_directories(dir_ / "transcripts");
    std::ofstream truncate(dir_ / "rounds.jsonl", std::ios::trunc);
    if (!truncate) throw std::runtime_error("cannot write to run directory " + dir_.string());
}

namespace {

json run_config_json(const RunLog& log) {
    json roster = json::array();
    for (size_t i = 0; i < log.roster_names.size(); ++i) {
        json entry = {{"name", log.roster_names[i]}};
        if (i < log.roster_articles.size() && log.roster_articles[i]) entry["article"] = true;
        roster.push_back(entry);
    }
    return {{"scenario_id", log.scenario_id},
            {"roster", roster},
            {"overlay_digest", log.overlay_digest},
            {"attitude", log.attitude},
            {"config", engine_config_to_json(log.config)},
            {"termination", log.termination}};
}

}  // namespace

void RunWriter::write_config(const RunLog& log) {
    std::ofstream out(dir_ / "config.json", std::ios::trunc);
    out << run_config_json(log).dump(2) << "\n";
}

void RunWriter::append_round(const RoundRecord& record, const Roster& roster) {
    std::ofstream out(dir_ / "rounds.jsonl", std::ios::app);
    out << round_record_to_json(record, roster).dump() << "\n";
    out.flush();
}

void RunWriter::write_board_text(int round, const std::string& grid) {
    std::ofstream out(dir_ / "boards" / ("round_" + std::to_string(round) + ".txt"),
                      std::ios::trunc);
    out << grid;
}

void RunWriter::write_transcript(const ChatModelPolicy::Exchange& exchange,
                                 const std::string& country) {
    static const char* digits = "0123456789";
    std::string safe_country;
    for (char c : country) safe_country += (c == ' ' ? '_' : c);
    (void)digits;
    std::string name = "round_" + std::to_string(exchange.round) + "_" + safe_country + "_" +
                       exchange.stage + "_" + exchange.cache_key.substr(0, 12) + ".json";
    json j;
    j["round"] = exchange.round;
    j["country"] = country;
    j["stage"] = exchange.stage;
    j["cache_key"] = exchange.cache_key;
    j["request"] = chat_request_to_json(exchange.request);
    j["response"] = exchange.response;
    std::ofstream out(dir_ / "transcripts" / name, std::ios::trunc);
    out << j.dump(2) << "\n";
}

void RunWriter::finalize(const RunLog& log) { write_config(log); }

RunLog load_run(const std::filesystem::path& dir) {
    std::ifstream config_in(dir / "config.json");
    if (!config_in) throw std::runtime_error("no run at '" + dir.string() + "'");
    json config;
    config_in >> config;

    RunLog log;
    log.scenario_id = config.at("scenario_id").get<std::string>();
    for (const auto& entry : config.at("roster")) {
        if (entry.is_string()) {
            log.roster_names.push_back(entry.get<std::string>());
            log.roster_articles.push_back(false);
        } else {
            log.roster_names.push_back(entry.at("name").get<std::string>());
            log.roster_articles.push_back(entry.value("article", false));
        }
    }
    log.overlay_digest = config.value("overlay_digest", "");
    log.attitude = config.value("attitude", "default");
    log.config = engine_config_from_json(config.at("config"));
    log.termination = config.value("termination", "");

    Roster roster = roster_from_log(log);

    std::ifstream rounds_in(dir / "rounds.jsonl");
    std::string line;
    while (std::getline(rounds_in, line)) {
        if (line.empty()) continue;
        log.rounds.push_back(round_record_from_json(json::parse(line), roster));
    }
    return log;
}

Roster roster_from_log(const RunLog& log) {
    std::vector<Roster::Entry> entries;
    for (size_t i = 0; i < log.roster_names.size(); ++i) {
        bool article = i < log.roster_articles.size() && log.roster_articles[i];
        entries.push_back({log.roster_names[i], {}, article});
    }
    return Roster(entries);
}

Board board_from_snapshot(const BoardSnapshot& snapshot, const Roster& roster) {
    int n = static_cast<int>(snapshot.codes.size());
    Board board(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            RelationCell cell;
            cell.kind = relation_from_letter(snapshot.codes.at(i).at(j));
            if (cell.kind == RelationKind::War) {
                auto it = snapshot.declarers.find(std::to_string(i) + "-" + std::to_string(j));
                if (it != snapshot.declarers.end()) cell.declarer = roster.find(it->second);
            }
            board.set(i, j, cell);
        }
    }
    return board;
}

std::optional<std::string> verify_runlog_replay(const RunLog& log) {
    Roster roster = roster_from_log(log);
    WorldState state = WorldState::initial(roster.size());

    for (const RoundRecord& record : log.rounds) {
        state.round = record.round;

        std::vector<std::vector<Action>> finals(roster.size());
        for (int c = 0; c < roster.size(); ++c) {
            for (const std::string& line : record.agents.at(c).final_lines) {
                for (Action& a : parse_action_or_throw(line, roster)) {
                    a.round = record.round;
                    finals[c].push_back(std::move(a));
                }
            }
        }

        for (bool response_pass : {true, false}) {
            for (int c = 0; c < roster.size(); ++c) {
                for (const Action& action : finals[c]) {
                    if (is_response(action.kind) != response_pass) continue;
                    ApplyResult result = apply_event(state, action, roster);
                    if (auto* next = std::get_if<WorldState>(&result)) state = std::move(*next);
                    // Violations were superseded events; they left no trace.
                }
            }
        }
        std::erase_if(state.pending,
                      [&](const PendingRequest& p) { return p.issued_round < record.round; });

        BoardSnapshot replayed = BoardSnapshot::of(state.board, roster);
        if (!(replayed == record.board))
            return "board snapshot mismatch at round " + std::to_string(record.round);
        for (int c = 0; c < roster.size(); ++c) {
            if (state.sticks[c].mobilization != static_cast<bool>(record.mobilized.at(c)))
                return "mobilization mismatch at round " + std::to_string(record.round) + " for " +
                       roster.name(c);
        }
    }
    return std::nullopt;
}

Engine::Engine(Scenario scenario, EngineConfig config, std::vector<std::shared_ptr<Policy>> policies)
    : scenario_(std::move(scenario)),
      roster_(scenario_.roster()),
      config_(config),
      policies_(std::move(policies)),
      state_(WorldState::initial(roster_.size())) {
    config_.validate();
    if (static_cast<int>(policies_.size()) != roster_.size())
        throw std::invalid_argument("engine needs exactly one policy per roster country");
    histories_.resize(roster_.size());
}

void Engine::set_run_dir(const std::filesystem::path& dir) { writer_.emplace(dir); }
void Engine::set_overlay_digest(std::string digest) { overlay_digest_ = std::move(digest); }
void Engine::set_attitude(Attitude attitude) { attitude_ = attitude; }

AgentContext Engine::build_context(int country, const WorldState& snapshot,
                                   const std::vector<std::string>& inbox) const {
    AgentContext ctx;
    ctx.country = country;
    ctx.country_name = roster_.name(country);
    ctx.round = snapshot.round;
    ctx.roster = &roster_;
    ctx.profile_text = render_profile(scenario_.profiles.at(country));
    ctx.view = agent_view(snapshot, country);
    ctx.stick = snapshot.sticks.at(country);
    ctx.pending = pending_requests_for(snapshot, country);
    ctx.inbox = inbox;
    ctx.history = histories_.at(country);

    std::string stick_line = ctx.country_name +
                             (ctx.stick.mobilization ? " has mobilized its forces."
                                                     : " has not mobilized its forces.");
    if (snapshot.round == 1) {
        ctx.situation = scenario_.trigger.text + "\n" + stick_line;
    } else {
        std::string board_text = translate_board(ctx.view, roster_);
        ctx.situation = board_text.empty() ? stick_line : board_text + "\n" + stick_line;
    }
    return ctx;
}

std::vector<Engine::RoutedItem> Engine::route(const std::vector<AppliedEvent>& applied) const {
    std::vector<RoutedItem> routed;
    for (const AppliedEvent& event : applied) {
        if (event.status != "applied") continue;
        const Action& action = event.action;
        if (action.kind == ActionKind::WaitWithoutAction) continue;

        Publicity publicity = properties_of(action.kind).publicity;
        if (action.kind == ActionKind::GeneralMobilization && !config_.mobilization_public)
            publicity = Publicity::Private;

        int actor = *roster_.find(action.actor);
        RoutedItem item;
        item.actor = actor;
        item.text = "From " + action.actor + ": " + event.line;
        if (publicity == Publicity::Public) {
            for (int c = 0; c < roster_.size(); ++c)
                if (c != actor) item.recipients.push_back(c);
        } else {
            for (const std::string& target : action.targets)
                item.recipients.push_back(*roster_.find(target));
        }
        if (!item.recipients.empty()) routed.push_back(std::move(item));
    }
    return routed;
}

RoundRecord Engine::step(const std::vector<std::vector<std::string>>& inboxes) {
    const WorldState snapshot = state_;
    const int n = roster_.size();

    RoundRecord record;
    record.round = snapshot.round;
    record.agents.resize(n);

    // Every agent negotiates against the same pre-round snapshot, so no
    // round-r proposal can observe another agent's round-r action.
    std::vector<NegotiationOutcome> outcomes(n);
    for (int c = 0; c < n; ++c) {
        AgentContext ctx = build_context(c, snapshot, inboxes[c]);
        outcomes[c] = negotiate(*policies_[c], ctx);

        AgentRoundRecord& agent = record.agents[c];
        agent.inbox = inboxes[c];
        agent.exchanges = outcomes[c].exchanges;
        agent.amended = outcomes[c].amended;
        agent.policy_failed = outcomes[c].policy_failed;
        for (const Action& action : outcomes[c].final_actions)
            agent.final_lines.push_back(format_action(action, roster_));

        if (writer_) {
            if (auto* chat = dynamic_cast<ChatModelPolicy*>(policies_[c].get())) {
                for (const auto& exchange : chat->drain_transcript())
                    writer_->write_transcript(exchange, roster_.name(c));
            }
        }
    }

    // Responses land before initiations; within a pass, roster index then
    // proposal order. Same-round races surface here as superseded events.
    for (bool response_pass : {true, false}) {
        for (int c = 0; c < n; ++c) {
            for (const Action& action : outcomes[c].final_actions) {
                if (is_response(action.kind) != response_pass) continue;
                std::string line = format_action(action, roster_);
                ApplyResult result = apply_event(state_, action, roster_);
                if (auto* violation = std::get_if<RuleViolation>(&result)) {
                    record.applied.push_back(
                        {action, line, "superseded", rule_violation_name(violation->kind)});
                    continue;
                }
                WorldState next = std::get<WorldState>(std::move(result));
                bool idempotent_kind = action.kind == ActionKind::DeclareWar ||
                                       action.kind == ActionKind::GeneralMobilization ||
                                       is_publish(action.kind);
                if (idempotent_kind && next == state_) {
                    record.applied.push_back({action, line, "superseded", "duplicate"});
                } else {
                    state_ = std::move(next);
                    record.applied.push_back({action, line, "applied", ""});
                }
            }
        }
    }

    // Requests delivered this round lapse if they went unanswered.
    std::erase_if(state_.pending,
                  [&](const PendingRequest& p) { return p.issued_round < snapshot.round; });

    record.board = BoardSnapshot::of(state_.board, roster_);
    record.agent_board_digests.resize(n);
    record.mobilized.resize(n);
    for (int c = 0; c < n; ++c) {
        BoardSnapshot view_snap = BoardSnapshot::of(agent_view(state_, c), roster_);
        record.agent_board_digests[c] =
            sha256_hex(json({{"codes", view_snap.codes}, {"declarers", view_snap.declarers}}).dump());
        record.mobilized[c] = state_.sticks[c].mobilization;
    }

    for (int c = 0; c < n; ++c)
        for (const std::string& line : record.agents[c].final_lines) histories_[c].push_back(line);

    return record;
}

std::optional<std::string> Engine::should_stop(int round) const {
    if (config_.stop_on_connectivity &&
        static_cast<int>(board_history_.size()) >= config_.connectivity_window) {
        bool frozen = true;
        size_t last = board_history_.size() - 1;
        for (int k = 1; k < config_.connectivity_window && frozen; ++k)
            if (!(board_history_[last - k] == board_history_[last])) frozen = false;
        if (frozen && relation_graph_connected(state_)) return "board_connectivity";
    }
    if (round >= config_.max_rounds) return "max_rounds";
    return std::nullopt;
}

RunLog Engine::run() {
    RunLog log;
    log.scenario_id = scenario_.id;
    for (int c = 0; c < roster_.size(); ++c) {
        log.roster_names.push_back(roster_.name(c));
        log.roster_articles.push_back(roster_.definite_article(c));
    }
    log.overlay_digest = overlay_digest_;
    log.attitude = attitude_name(attitude_);
    log.config = config_;

    if (writer_) writer_->write_config(log);

    std::deque<std::vector<RoutedItem>> routed_history;
    std::string termination;

    for (int round = 1; round <= config_.max_rounds; ++round) {
        state_.round = round;

        std::vector<std::vector<std::string>> inboxes(roster_.size());
        if (round == 1) {
            for (auto& inbox : inboxes) inbox.push_back(scenario_.trigger.text);
        } else {
            for (const auto& routed : routed_history)
                for (const RoutedItem& item : routed)
                    for (int recipient : item.recipients)
                        inboxes[recipient].push_back(item.text);
        }

        RoundRecord record = step(inboxes);
        log.rounds.push_back(record);
        board_history_.push_back(state_.board);

        if (writer_) {
            writer_->append_round(record, roster_);
            writer_->write_board_text(round, render_board(state_.board, roster_));
        }

        routed_history.push_back(route(record.applied));
        while (static_cast<int>(routed_history.size()) > config_.history_window)
            routed_history.pop_front();

        if (auto stop = should_stop(round)) {
            termination = *stop;
            break;
        }
    }

    log.termination = termination.empty() ? "max_rounds" : termination;
    if (writer_) writer_->finalize(log);
    return log;
}

}  // namespace waragent
