#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "waragent/protocol.hpp"

namespace waragent {

enum class Visibility { Private, Public };

/// One cell of the relation board. Default cells are public and carry no
/// declarer; War records who declared it (the cell itself stays symmetric).
struct RelationCell {
    RelationKind kind = RelationKind::Default;
    Visibility visibility = Visibility::Public;
    int established_round = 0;
    std::optional<int> declarer;  // roster index, War only

    bool operator==(const RelationCell&) const = default;
};

/// Symmetric country-by-country relation matrix. Exactly one relation kind
/// per pair; the diagonal is always Default. Cells are stored once per
/// unordered pair, so symmetry holds by construction.
class Board {
public:
    Board() = default;
    explicit Board(int n);

    int size() const { return n_; }
    const RelationCell& at(int i, int j) const;
    void set(int i, int j, RelationCell cell);

    /// Calls fn(i, j, cell) for every pair i < j in row-major order.
    template <typename Fn>
    void for_each_pair(Fn&& fn) const {
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) fn(i, j, at(i, j));
    }

    int non_default_pairs() const;

    bool operator==(const Board&) const = default;

private:
    int pair_index(int i, int j) const;

    int n_ = 0;
    std::vector<RelationCell> cells_;
};

/// Per-country internal record. Only mobilization carries semantics; the
/// stability and readiness slots are reserved by the wire format.
struct Stick {
    bool mobilization = false;
    std::optional<std::string> internal_stability;  // reserved, unused
    std::optional<std::string> war_readiness;       // reserved, unused

    bool operator==(const Stick&) const = default;
};

struct PendingRequest {
    int requester = 0;
    ActionKind kind = ActionKind::RequestMilitaryAlliance;  // Request* or PresentPeaceAgreement
    int target = 0;
    std::optional<std::string> content;
    int issued_round = 0;

    bool operator==(const PendingRequest&) const = default;
};

/// One relation fact learned by an agent. Knowledge logs are append-only;
/// for a given pair the fact with the highest seq is the agent's current
/// belief, so learned history never shrinks while views stay current.
struct KnownFact {
    long seq = 0;
    int a = 0, b = 0;  // pair, a < b
    RelationCell cell;

    bool operator==(const KnownFact&) const = default;
};

enum class RuleViolationKind {
    DeclareWarAgainstRelated,
    DeclareWarUnmobilized,
    AcceptWithoutRequest,
    BetrayNonexistentRelation,
    PublishNonexistentRelation,
};

const std::string& rule_violation_name(RuleViolationKind kind);

struct RuleViolation {
    RuleViolationKind kind;
    std::string reason;
};

/// Canonical world state: the omniscient board plus per-country sticks,
/// pending requests, and each country's knowledge log. Values are immutable
/// from the engine's point of view; transitions produce fresh states.
struct WorldState {
    int n = 0;
    int round = 1;
    Board board;
    std::vector<Stick> sticks;
    std::vector<PendingRequest> pending;
    std::vector<std::vector<KnownFact>> knowledge;
    long next_seq = 0;

    static WorldState initial(int roster_size);

    bool operator==(const WorldState&) const = default;
};

using ApplyResult = std::variant<WorldState, RuleViolation>;

/// Applies one secretary-validated action. Duplicate events (re-declaring a
/// standing war, re-publishing a public relation, re-mobilizing) succeed
/// without changing state; violations report the named rule.
ApplyResult apply_event(const WorldState& state, const Action& action, const Roster& roster);

/// Board as known to one country: exactly the relations in its knowledge
/// log, Default everywhere else.
Board agent_view(const WorldState& state, int country);

/// Pending requests addressed to one country, in issue order.
std::vector<PendingRequest> pending_requests_for(const WorldState& state, int country);

/// Rule-based translation of a board into one sentence per non-Default pair,
/// in row-major pair order. Empty board translates to an empty string.
std::string translate_board(const Board& board, const Roster& roster);

/// Character-grid rendering with roster-initial headers:
/// War "x", Alliance "&", Treaty "o", Peace "~", Default ".".
std::string render_board(const Board& board, const Roster& roster);

/// Shortest-unique-prefix column headers used by render_board.
std::vector<std::string> roster_initials(const Roster& roster);

/// True iff the graph over the roster whose edges are the non-Default
/// canonical relations is connected.
bool relation_graph_connected(const WorldState& state);

}  // namespace waragent
