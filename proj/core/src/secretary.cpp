#include "waragent/secretary.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace waragent {

const std::string& rule_id_name(RuleId id) {
    static const std::array<std::string, 8> names = {"R1", "R2", "R3", "R4",
                                                     "R5", "R6", "R7", "R8"};
    return names.at(static_cast<size_t>(id));
}

std::vector<Action> ValidatedProposal::all_actions() const {
    std::vector<Action> out;
    for (const auto& per_line : actions)
        out.insert(out.end(), per_line.begin(), per_line.end());
    return out;
}

namespace {

struct FlatAction {
    int line = 0;
    Action action;
};

bool same_family_target(const Action& a, const Action& b) {
    return relation_family_of(a.kind) == relation_family_of(b.kind) &&
           !a.targets.empty() && !b.targets.empty() && a.targets[0] == b.targets[0];
}

}  // namespace

ValidatedProposal validate(const std::vector<std::string>& lines, const AgentContext& ctx) {
    ValidatedProposal out;
    out.lines = lines;
    out.actions.resize(lines.size());

    const Roster& roster = *ctx.roster;
    std::vector<Issue>& issues = out.verdict.issues;
    std::vector<FlatAction> flat;

    for (size_t k = 0; k < lines.size(); ++k) {
        ParseResult parsed = parse_action(lines[k], roster);
        if (auto* err = std::get_if<ParseError>(&parsed)) {
            RuleId rule = RuleId::R1;
            switch (err->kind) {
                case ParseErrorKind::UnknownVerb: rule = RuleId::R2; break;
                case ParseErrorKind::UnknownCountry: rule = RuleId::R3; break;
                case ParseErrorKind::MalformedObject:
                    // Self-targeting is a country-identity problem, not a
                    // formatting one.
                    rule = roster.find(err->span) ? RuleId::R3 : RuleId::R1;
                    break;
            }
            issues.push_back({static_cast<int>(k), rule,
                              err->message + " (near '" + err->span + "')"});
            continue;
        }
        auto actions = std::get<std::vector<Action>>(std::move(parsed));
        for (Action& a : actions) {
            a.round = ctx.round;
            if (a.actor != ctx.country_name) {
                issues.push_back({static_cast<int>(k), RuleId::R3,
                                  "proposal by " + ctx.country_name +
                                      " cannot act as " + a.actor});
                continue;
            }
            flat.push_back({static_cast<int>(k), a});
            out.actions[k].push_back(std::move(a));
        }
    }

    // Rules R4..R8 run over the parsed, normalized actions.
    for (size_t fi = 0; fi < flat.size(); ++fi) {
        const Action& action = flat[fi].action;
        const int line = flat[fi].line;
        const ActionKind kind = action.kind;
        const RelationKind family = relation_family_of(kind);

        int target = -1;
        if (!action.targets.empty()) target = *roster.find(action.targets[0]);

        if (is_response(kind)) {
            bool matched = std::any_of(ctx.pending.begin(), ctx.pending.end(),
                                       [&](const PendingRequest& p) {
                                           return p.requester == target &&
                                                  relation_family_of(p.kind) == family;
                                       });
            if (!matched) {
                issues.push_back({line, RuleId::R4,
                                  action.targets[0] + " has no pending " + verb_phrase(kind) +
                                      " process with " + ctx.country_name});
            }
        }

        if (kind == ActionKind::DeclareWar) {
            bool mobilized = ctx.stick.mobilization;
            for (size_t fj = 0; fj < fi && !mobilized; ++fj)
                if (flat[fj].action.kind == ActionKind::GeneralMobilization) mobilized = true;
            if (!mobilized) {
                issues.push_back({line, RuleId::R5,
                                  ctx.country_name +
                                      " must conduct a General Mobilization before declaring war"});
            }

            const RelationCell& cell = ctx.view.at(ctx.country, target);
            if (cell.kind == RelationKind::MilitaryAlliance ||
                cell.kind == RelationKind::NonInterventionTreaty ||
                cell.kind == RelationKind::PeaceAgreement) {
                bool betrayed = false;
                for (size_t fj = 0; fj < fi && !betrayed; ++fj) {
                    const Action& prior = flat[fj].action;
                    if (is_betray(prior.kind) && relation_family_of(prior.kind) == cell.kind &&
                        !prior.targets.empty() && prior.targets[0] == action.targets[0])
                        betrayed = true;
                }
                if (!betrayed) {
                    issues.push_back({line, RuleId::R6,
                                      ctx.country_name + " holds a standing relation with " +
                                          action.targets[0] + " and must betray it first"});
                }
            }
        }

        if (is_betray(kind) || is_publish(kind)) {
            const RelationCell& cell = ctx.view.at(ctx.country, target);
            if (cell.kind != family) {
                issues.push_back({line, RuleId::R7,
                                  "no " + relation_family_label(family) + " exists between " +
                                      ctx.country_name + " and " + action.targets[0]});
            }
        }

        for (size_t fj = 0; fj < fi; ++fj) {
            if (flat[fj].action == action) {
                issues.push_back({line, RuleId::R8, "duplicate of action " +
                                                        std::to_string(flat[fj].line + 1) +
                                                        " within the proposal"});
                break;
            }
        }
        // A proposal that both seeks and betrays the same relation with the
        // same country is incoherent; the establishing side is flagged so a
        // betray-then-declare chain stays intact.
        if (is_request(kind) || is_accept(kind)) {
            for (const FlatAction& other : flat) {
                if (is_betray(other.action.kind) && same_family_target(action, other.action)) {
                    issues.push_back({line, RuleId::R8,
                                      verb_phrase(kind) + " contradicts the " +
                                          verb_phrase(other.action.kind) + " against " +
                                          action.targets[0] + " in the same proposal"});
                    break;
                }
            }
        }
    }

    std::stable_sort(issues.begin(), issues.end(),
                     [](const Issue& a, const Issue& b) { return a.action_index < b.action_index; });
    return out;
}

std::string feedback_text(const Verdict& verdict) {
    std::ostringstream out;
    int n = 1;
    for (const Issue& issue : verdict.issues) {
        out << n++ << ". Action " << issue.action_index + 1 << " violates "
            << rule_id_name(issue.rule) << ": " << issue.reason << "\n";
    }
    return out.str();
}

std::vector<Action> amend(const ValidatedProposal& validated, const AgentContext& ctx) {
    std::set<int> dropped;
    for (const Issue& issue : validated.verdict.issues) dropped.insert(issue.action_index);

    std::vector<std::string> kept;
    for (size_t k = 0; k < validated.lines.size(); ++k)
        if (!dropped.contains(static_cast<int>(k))) kept.push_back(validated.lines[k]);

    // Dropping a line can orphan a survivor (a war declaration whose betray
    // was removed), so filter to a fixpoint.
    for (size_t guard = 0; guard <= validated.lines.size(); ++guard) {
        if (kept.empty()) break;
        ValidatedProposal check = validate(kept, ctx);
        if (check.verdict.accepted()) return check.all_actions();
        std::set<int> bad;
        for (const Issue& issue : check.verdict.issues) bad.insert(issue.action_index);
        std::vector<std::string> next;
        for (size_t k = 0; k < kept.size(); ++k)
            if (!bad.contains(static_cast<int>(k))) next.push_back(kept[k]);
        kept = std::move(next);
    }
    return {make_wait(ctx.country_name, ctx.round)};
}

NegotiationOutcome negotiate(Policy& policy, const AgentContext& ctx) {
    NegotiationOutcome outcome;
    std::optional<std::string> feedback;
    std::optional<ValidatedProposal> last;

    for (int exchange = 0; exchange < kMaxNegotiationExchanges; ++exchange) {
        std::vector<std::string> lines;
        try {
            lines = policy.propose(ctx, feedback);
        } catch (const PolicyUnavailable&) {
            outcome.policy_failed = true;
            outcome.final_actions = {make_wait(ctx.country_name, ctx.round)};
            return outcome;
        }
        ValidatedProposal validated = validate(lines, ctx);
        outcome.exchanges.push_back({validated.lines, validated.verdict});
        if (validated.verdict.accepted()) {
            outcome.final_actions = validated.all_actions();
            return outcome;
        }
        feedback = feedback_text(validated.verdict);
        last = std::move(validated);
    }

    outcome.amended = true;
    outcome.final_actions = amend(*last, ctx);
    return outcome;
}

}  // namespace waragent
