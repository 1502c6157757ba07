#include "waragent/policy.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "waragent/hash.hpp"

namespace waragent {

using nlohmann::json;

Script Script::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open script file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("script '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

namespace {

std::map<int, std::map<std::string, std::vector<std::string>>> rounds_from_json(const json& j) {
    std::map<int, std::map<std::string, std::vector<std::string>>> out;
    for (const auto& [round_key, countries] : j.items()) {
        if (!round_key.empty() && round_key[0] == '_') continue;
        int round = 0;
        try {
            round = std::stoi(round_key);
        } catch (const std::exception&) {
            throw LoadError("script round key '" + round_key + "' is not a number");
        }
        for (const auto& [country, lines] : countries.items()) {
            std::vector<std::string> text;
            for (const auto& line : lines) text.push_back(line.get<std::string>());
            out[round][country] = std::move(text);
        }
    }
    return out;
}

}  // namespace

Script Script::from_json(const json& j) {
    Script script;
    json rounds = json::object();
    for (const auto& [key, value] : j.items()) {
        if (!key.empty() && key[0] == '_') continue;
        if (key == "corrections") {
            script.corrections_ = rounds_from_json(value);
        } else {
            rounds[key] = value;
        }
    }
    script.rounds_ = rounds_from_json(rounds);
    return script;
}

const std::vector<std::string>* Script::lines(int round, const std::string& country) const {
    auto r = rounds_.find(round);
    if (r == rounds_.end()) return nullptr;
    auto c = r->second.find(country);
    return c == r->second.end() ? nullptr : &c->second;
}

const std::vector<std::string>* Script::correction(int round, const std::string& country) const {
    auto r = corrections_.find(round);
    if (r == corrections_.end()) return nullptr;
    auto c = r->second.find(country);
    return c == r->second.end() ? nullptr : &c->second;
}

int Script::max_round() const { return rounds_.empty() ? 0 : rounds_.rbegin()->first; }

bool Script::covers(const std::string& country, int round) const {
    return lines(round, country) != nullptr;
}

std::vector<std::string> Script::coverage_gaps(const Roster& roster, int rounds) const {
    std::vector<std::string> gaps;
    for (int r = 1; r <= rounds; ++r)
        for (int c = 0; c < roster.size(); ++c)
            if (!covers(roster.name(c), r))
                gaps.push_back(roster.name(c) + " @ round " + std::to_string(r));
    return gaps;
}

ScriptedPolicy::ScriptedPolicy(std::shared_ptr<const Script> script, std::string country)
    : script_(std::move(script)), country_(std::move(country)) {}

std::vector<std::string> ScriptedPolicy::propose(const AgentContext& ctx,
                                                 const std::optional<std::string>& feedback) {
    if (feedback) {
        if (const auto* corrected = script_->correction(ctx.round, country_)) return *corrected;
        // No correction entry: the script stands by its lines.
    }
    const auto* lines = script_->lines(ctx.round, country_);
    if (!lines)
        throw ScriptGap("script has no entry for " + country_ + " in round " +
                        std::to_string(ctx.round));
    return *lines;
}

RandomPolicy::RandomPolicy(std::uint64_t master_seed, int country_index)
    : master_seed_(master_seed), country_index_(country_index) {}

namespace {

// Candidate initiation; declare-war entries are only emitted when legal.
struct Candidate {
    ActionKind kind;
    int target;
};

const std::array<std::string, 4>& message_pool() {
    static const std::array<std::string, 4> pool = {
        "We wish to understand your position on the current situation.",
        "We value stable relations and propose continued dialogue.",
        "We are watching recent developments with concern and seek clarity on your intentions.",
        "Our nations may benefit from closer cooperation in these uncertain times.",
    };
    return pool;
}

}  // namespace

std::vector<std::string> RandomPolicy::propose(const AgentContext& ctx,
                                               const std::optional<std::string>& feedback) {
    (void)feedback;  // output is legal by construction, so feedback never helps
    std::mt19937_64 rng(derive_seed(master_seed_, country_index_, ctx.round));
    auto draw = [&](std::uint64_t n) { return n == 0 ? 0 : static_cast<int>(rng() % n); };

    const Roster& roster = *ctx.roster;
    const int self = ctx.country;
    std::vector<Action> responses;
    std::vector<Action> initiations;

    // Answer every pending request, accept or reject at even odds.
    for (const PendingRequest& request : ctx.pending) {
        std::vector<ActionKind> options = response_kinds_for(request.kind);
        Action a;
        a.actor = ctx.country_name;
        a.kind = options[static_cast<size_t>(draw(2))];
        a.targets = {roster.name(request.requester)};
        a.round = ctx.round;
        responses.push_back(std::move(a));
    }

    bool mobilized = ctx.stick.mobilization;
    bool mobilize_now = !mobilized && draw(2) == 1;
    if (mobilize_now) mobilized = true;

    // Initiation menu against the agent's own view.
    std::vector<Candidate> menu;
    for (int t = 0; t < roster.size(); ++t) {
        if (t == self) continue;
        const RelationCell& cell = ctx.view.at(self, t);
        switch (cell.kind) {
            case RelationKind::Default:
                if (mobilized) menu.push_back({ActionKind::DeclareWar, t});
                menu.push_back({ActionKind::RequestMilitaryAlliance, t});
                menu.push_back({ActionKind::RequestNonInterventionTreaty, t});
                menu.push_back({ActionKind::SendMessage, t});
                break;
            case RelationKind::War:
                menu.push_back({ActionKind::PresentPeaceAgreement, t});
                menu.push_back({ActionKind::SendMessage, t});
                break;
            case RelationKind::MilitaryAlliance:
            case RelationKind::NonInterventionTreaty:
            case RelationKind::PeaceAgreement: {
                RelationKind family = cell.kind;
                ActionKind publish = family == RelationKind::MilitaryAlliance
                                         ? ActionKind::PublishMilitaryAlliance
                                         : family == RelationKind::NonInterventionTreaty
                                               ? ActionKind::PublishNonInterventionTreaty
                                               : ActionKind::PublishPeaceAgreement;
                ActionKind betray = family == RelationKind::MilitaryAlliance
                                        ? ActionKind::BetrayMilitaryAlliance
                                        : family == RelationKind::NonInterventionTreaty
                                              ? ActionKind::BetrayNonInterventionTreaty
                                              : ActionKind::BetrayPeaceAgreement;
                if (cell.visibility == Visibility::Private) menu.push_back({publish, t});
                menu.push_back({betray, t});
                menu.push_back({ActionKind::SendMessage, t});
                break;
            }
        }
    }

    auto conflicts = [&](const Candidate& c) {
        RelationKind family = relation_family_of(c.kind);
        const std::string& target = roster.name(c.target);
        auto clash = [&](const Action& a) {
            if (a.targets.empty() || a.targets[0] != target) return false;
            if (a.kind == c.kind) return true;  // no duplicates
            // A request/accept plus a betray of the same relation with the
            // same country is flagged by the secretary; never sample both.
            bool c_establishes = is_request(c.kind) || is_accept(c.kind);
            bool c_betrays = is_betray(c.kind);
            bool a_establishes = is_request(a.kind) || is_accept(a.kind);
            bool a_betrays = is_betray(a.kind);
            if (relation_family_of(a.kind) == family && family != RelationKind::Default) {
                if ((c_establishes && a_betrays) || (c_betrays && a_establishes)) return true;
            }
            return false;
        };
        return std::any_of(responses.begin(), responses.end(), clash) ||
               std::any_of(initiations.begin(), initiations.end(), clash);
    };

    int wanted = draw(3);  // up to two initiations
    for (int k = 0; k < wanted && !menu.empty(); ++k) {
        for (int tries = 0; tries < 8; ++tries) {
            const Candidate& c = menu[static_cast<size_t>(draw(menu.size()))];
            if (conflicts(c)) continue;
            Action a;
            a.actor = ctx.country_name;
            a.kind = c.kind;
            a.targets = {roster.name(c.target)};
            a.round = ctx.round;
            if (c.kind == ActionKind::SendMessage)
                a.content = message_pool()[static_cast<size_t>(draw(message_pool().size()))];
            if (c.kind == ActionKind::PresentPeaceAgreement)
                a.content = "We propose to end hostilities and restore peaceful relations.";
            initiations.push_back(std::move(a));
            break;
        }
    }

    std::vector<std::string> lines;
    for (const Action& a : responses) lines.push_back(format_action(a, roster));
    if (mobilize_now) {
        Action a;
        a.actor = ctx.country_name;
        a.kind = ActionKind::GeneralMobilization;
        a.round = ctx.round;
        lines.push_back(format_action(a, roster));
    }
    for (const Action& a : initiations) lines.push_back(format_action(a, roster));
    if (lines.empty()) lines.push_back(format_action(make_wait(ctx.country_name, ctx.round), roster));
    return lines;
}

ChatModelPolicy::ChatModelPolicy(ChatClient& client, const PromptLibrary& prompts,
                                 ChatPolicyConfig config, std::uint64_t master_seed,
                                 int country_index)
    : client_(client),
      prompts_(prompts),
      config_(std::move(config)),
      master_seed_(master_seed),
      country_index_(country_index) {}

std::string ChatModelPolicy::call(const std::string& stage, int round) {
    ChatRequest request;
    request.model = config_.model;
    request.messages = chain_;
    request.temperature = config_.temperature;
    if (config_.pass_seed) request.seed = derive_seed(master_seed_, country_index_, round);

    std::string response;
    try {
        response = client_.chat(request);
    } catch (const TransportError& e) {
        throw PolicyUnavailable(e.what());
    }
    transcript_.push_back({round, stage, chat_cache_key(request), request, response});
    return response;
}

std::vector<std::string> ChatModelPolicy::extract_action_lines(const std::string& response) {
    std::vector<std::string> lines;
    std::istringstream in(response);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);
        if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = line.substr(2);
        if (line.find(" has chosen to ") != std::string::npos) lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> ChatModelPolicy::propose(const AgentContext& ctx,
                                                  const std::optional<std::string>& feedback) {
    if (feedback && chain_round_ == ctx.round && !chain_.empty()) {
        chain_.push_back({"user", build_correction_prompt(*feedback, prompts_)});
        std::string response = call("correction", ctx.round);
        chain_.push_back({"assistant", response});
        return extract_action_lines(response);
    }

    StagedPrompts staged = build_prompts(ctx, config_.attitude, prompts_);
    chain_.clear();
    chain_.push_back({"system", staged.system});
    chain_round_ = ctx.round;

    static const std::array<const char*, 4> stage_names = {"allies", "enemies", "actions",
                                                           "analysis"};
    std::string action_response;
    for (size_t stage = 0; stage < 4; ++stage) {
        chain_.push_back({"user", staged.user[stage]});
        std::string response = call(stage_names[stage], ctx.round);
        chain_.push_back({"assistant", response});
        if (stage == 2) action_response = response;
    }
    return extract_action_lines(action_response);
}

std::vector<ChatModelPolicy::Exchange> ChatModelPolicy::drain_transcript() {
    std::vector<Exchange> out;
    out.swap(transcript_);
    return out;
}

}  // namespace waragent
