#pragma once

#include <optional>
#include <string>
#include <vector>

#include "waragent/policy.hpp"
#include "waragent/protocol.hpp"

namespace waragent {

/// The secretary's ordered rule set.
///   R1 grammar/format parses        R5 mobilization precedes Declare War
///   R2 verb inside the action space R6 no war on a standing partner without Betray
///   R3 countries exist, no self     R7 Betray/Publish need the relation to exist
///   R4 responses match a pending    R8 no duplicate or self-contradictory
///      request                         actions within one proposal
enum class RuleId { R1, R2, R3, R4, R5, R6, R7, R8 };

const std::string& rule_id_name(RuleId id);

struct Issue {
    int action_index = 0;  // line index within the proposal
    RuleId rule = RuleId::R1;
    std::string reason;
};

struct Verdict {
    std::vector<Issue> issues;

    bool accepted() const { return issues.empty(); }
};

struct ValidatedProposal {
    std::vector<std::string> lines;
    // Parsed actions per line, in order; empty for unparsable lines. One
    // line can normalize to several actions (multi-target objects).
    std::vector<std::vector<Action>> actions;
    Verdict verdict;

    std::vector<Action> all_actions() const;
};

/// Checks every rule against the agent's own view, stick and pending
/// requests. Violations are data, not errors.
ValidatedProposal validate(const std::vector<std::string>& lines, const AgentContext& context);

/// Correction feedback handed back to the policy: one numbered line per issue.
std::string feedback_text(const Verdict& verdict);

/// Drops every flagged line, re-validating until the remainder is clean (a
/// removal can orphan a dependent action, e.g. a Declare War whose Betray
/// was dropped). Falls back to a lone Wait when nothing survives.
std::vector<Action> amend(const ValidatedProposal& validated, const AgentContext& context);

inline constexpr int kMaxNegotiationExchanges = 4;

struct NegotiationExchange {
    std::vector<std::string> proposal;
    Verdict verdict;
};

struct NegotiationOutcome {
    std::vector<Action> final_actions;
    std::vector<NegotiationExchange> exchanges;
    bool amended = false;        // secretary amended after four failed exchanges
    bool policy_failed = false;  // transport failure; agent waits this round
};

/// Propose/validate loop, capped at four policy exchanges; afterwards the
/// secretary amends the last proposal itself. The outcome always
/// re-validates clean against the same context.
NegotiationOutcome negotiate(Policy& policy, const AgentContext& context);

}  // namespace waragent
