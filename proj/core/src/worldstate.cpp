#include "waragent/worldstate.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace waragent {

Board::Board(int n) : n_(n), cells_(static_cast<size_t>(n) * (n - 1) / 2) {}

int Board::pair_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n_ || i == j) throw std::out_of_range("board pair out of range");
    // Row-major upper triangle: offset of row i plus column distance.
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

const RelationCell& Board::at(int i, int j) const { return cells_.at(pair_index(i, j)); }

void Board::set(int i, int j, RelationCell cell) {
    if (cell.kind == RelationKind::Default) {
        cell.visibility = Visibility::Public;
        cell.declarer.reset();
    }
    if (cell.kind != RelationKind::War) cell.declarer.reset();
    cells_.at(pair_index(i, j)) = cell;
}

int Board::non_default_pairs() const {
    int count = 0;
    for_each_pair([&](int, int, const RelationCell& c) {
        if (c.kind != RelationKind::Default) ++count;
    });
    return count;
}

const std::string& rule_violation_name(RuleViolationKind kind) {
    static const std::map<RuleViolationKind, std::string> names = {
        {RuleViolationKind::DeclareWarAgainstRelated, "DeclareWarAgainstRelated"},
        {RuleViolationKind::DeclareWarUnmobilized, "DeclareWarUnmobilized"},
        {RuleViolationKind::AcceptWithoutRequest, "AcceptWithoutRequest"},
        {RuleViolationKind::BetrayNonexistentRelation, "BetrayNonexistentRelation"},
        {RuleViolationKind::PublishNonexistentRelation, "PublishNonexistentRelation"},
    };
    return names.at(kind);
}

WorldState WorldState::initial(int roster_size) {
    WorldState s;
    s.n = roster_size;
    s.round = 1;
    s.board = Board(roster_size);
    s.sticks.resize(roster_size);
    s.knowledge.resize(roster_size);
    return s;
}

namespace {

void learn(WorldState& state, int country, int a, int b, const RelationCell& cell) {
    if (a > b) std::swap(a, b);
    state.knowledge[country].push_back(KnownFact{state.next_seq++, a, b, cell});
}

void learn_pair(WorldState& state, int a, int b, const RelationCell& cell) {
    learn(state, a, a, b, cell);
    learn(state, b, a, b, cell);
}

void learn_all(WorldState& state, int a, int b, const RelationCell& cell) {
    for (int c = 0; c < state.n; ++c) learn(state, c, a, b, cell);
}

std::vector<PendingRequest>::iterator find_pending(WorldState& state, int requester,
                                                   RelationKind family, int target) {
    return std::find_if(state.pending.begin(), state.pending.end(), [&](const PendingRequest& p) {
        return p.requester == requester && p.target == target &&
               relation_family_of(p.kind) == family;
    });
}

}  // namespace

ApplyResult apply_event(const WorldState& state, const Action& action, const Roster& roster) {
    auto actor_idx = roster.find(action.actor);
    if (!actor_idx) throw std::invalid_argument("apply_event: actor not in roster");
    int actor = *actor_idx;

    int target = -1;
    if (!action.targets.empty()) {
        auto t = roster.find(action.targets.front());
        if (!t) throw std::invalid_argument("apply_event: target not in roster");
        target = *t;
        if (target == actor) throw std::invalid_argument("apply_event: actor targets itself");
    }

    WorldState next = state;
    ActionKind kind = action.kind;
    RelationKind family = relation_family_of(kind);

    switch (kind) {
        case ActionKind::WaitWithoutAction:
        case ActionKind::SendMessage:
            return next;  // board untouched; delivery is the engine's job

        case ActionKind::GeneralMobilization:
            next.sticks[actor].mobilization = true;  // monotone, re-mobilizing is a no-op
            return next;

        case ActionKind::DeclareWar: {
            const RelationCell& cell = state.board.at(actor, target);
            if (cell.kind == RelationKind::MilitaryAlliance ||
                cell.kind == RelationKind::NonInterventionTreaty ||
                cell.kind == RelationKind::PeaceAgreement) {
                return RuleViolation{RuleViolationKind::DeclareWarAgainstRelated,
                                     action.actor + " holds a standing relation with " +
                                         action.targets.front() + " and must betray it first"};
            }
            if (!state.sticks[actor].mobilization) {
                return RuleViolation{RuleViolationKind::DeclareWarUnmobilized,
                                     action.actor + " has not conducted a general mobilization"};
            }
            if (cell.kind == RelationKind::War) return next;  // duplicate declaration
            RelationCell war{RelationKind::War, Visibility::Public, action.round, actor};
            next.board.set(actor, target, war);
            learn_all(next, actor, target, war);
            return next;
        }

        case ActionKind::RequestMilitaryAlliance:
        case ActionKind::RequestNonInterventionTreaty:
        case ActionKind::PresentPeaceAgreement: {
            auto it = find_pending(next, actor, family, target);
            if (it != next.pending.end()) {
                it->issued_round = action.round;  // re-request refreshes the window
                it->content = action.content;
            } else {
                next.pending.push_back(
                    PendingRequest{actor, kind, target, action.content, action.round});
            }
            return next;
        }

        case ActionKind::AcceptMilitaryAlliance:
        case ActionKind::AcceptNonInterventionTreaty:
        case ActionKind::AcceptPeaceAgreement: {
            auto it = find_pending(next, target, family, actor);
            if (it == next.pending.end()) {
                return RuleViolation{RuleViolationKind::AcceptWithoutRequest,
                                     action.targets.front() + " has no pending " +
                                         relation_family_label(family) + " request to " +
                                         action.actor};
            }
            next.pending.erase(it);
            const RelationCell& cell = state.board.at(actor, target);
            if (cell.kind != family) {
                RelationCell made{family, Visibility::Private, action.round, std::nullopt};
                next.board.set(actor, target, made);
                learn_pair(next, actor, target, made);
            }
            return next;
        }

        case ActionKind::RejectMilitaryAlliance:
        case ActionKind::RejectNonInterventionTreaty:
        case ActionKind::RejectPeaceAgreement: {
            auto it = find_pending(next, target, family, actor);
            if (it != next.pending.end()) next.pending.erase(it);
            return next;  // board unchanged either way
        }

        case ActionKind::PublishMilitaryAlliance:
        case ActionKind::PublishNonInterventionTreaty:
        case ActionKind::PublishPeaceAgreement: {
            const RelationCell& cell = state.board.at(actor, target);
            if (cell.kind != family) {
                return RuleViolation{RuleViolationKind::PublishNonexistentRelation,
                                     "no " + relation_family_label(family) + " between " +
                                         action.actor + " and " + action.targets.front()};
            }
            if (cell.visibility == Visibility::Public) return next;  // already public
            RelationCell published = cell;
            published.visibility = Visibility::Public;
            next.board.set(actor, target, published);
            learn_all(next, actor, target, published);
            return next;
        }

        case ActionKind::BetrayMilitaryAlliance:
        case ActionKind::BetrayNonInterventionTreaty:
        case ActionKind::BetrayPeaceAgreement: {
            const RelationCell& cell = state.board.at(actor, target);
            if (cell.kind != family) {
                return RuleViolation{RuleViolationKind::BetrayNonexistentRelation,
                                     "no " + relation_family_label(family) + " between " +
                                         action.actor + " and " + action.targets.front()};
            }
            RelationCell dissolved{RelationKind::Default, Visibility::Public, action.round,
                                   std::nullopt};
            next.board.set(actor, target, dissolved);
            learn_all(next, actor, target, dissolved);  // betrayal is a public event
            return next;
        }
    }
    throw std::logic_error("apply_event: unhandled action kind");
}

Board agent_view(const WorldState& state, int country) {
    if (country < 0 || country >= state.n) throw std::out_of_range("agent_view: unknown country");
    Board view(state.n);
    // Facts are ordered by seq, so later facts overwrite earlier beliefs.
    for (const KnownFact& fact : state.knowledge[country]) view.set(fact.a, fact.b, fact.cell);
    return view;
}

std::vector<PendingRequest> pending_requests_for(const WorldState& state, int country) {
    std::vector<PendingRequest> out;
    for (const PendingRequest& p : state.pending)
        if (p.target == country) out.push_back(p);
    return out;
}

namespace {

// Sentence subject/object order: lower roster index first, except that a
// country written with a definite article reads badly at sentence start, so
// it yields the subject slot when the other side has no article.
std::pair<int, int> sentence_order(int i, int j, const Roster& roster) {
    if (roster.definite_article(i) && !roster.definite_article(j)) return {j, i};
    return {i, j};
}

}  // namespace

std::string translate_board(const Board& board, const Roster& roster) {
    std::vector<std::string> sentences;
    board.for_each_pair([&](int i, int j, const RelationCell& cell) {
        switch (cell.kind) {
            case RelationKind::Default:
                return;
            case RelationKind::War: {
                int declarer = cell.declarer.value_or(i);
                int other = declarer == i ? j : i;
                sentences.push_back(roster.name(declarer) + " has declared war against " +
                                    roster.display(other) + ".");
                return;
            }
            case RelationKind::MilitaryAlliance: {
                auto [x, y] = sentence_order(i, j, roster);
                sentences.push_back(roster.name(x) + " and " + roster.display(y) +
                                    " have formed a military alliance.");
                return;
            }
            case RelationKind::NonInterventionTreaty: {
                auto [x, y] = sentence_order(i, j, roster);
                sentences.push_back(roster.name(x) + " has signed a non-intervention treaty with " +
                                    roster.display(y) + ".");
                return;
            }
            case RelationKind::PeaceAgreement: {
                auto [x, y] = sentence_order(i, j, roster);
                sentences.push_back(roster.name(x) + " has signed a peace agreement with " +
                                    roster.display(y) + ".");
                return;
            }
        }
    });
    std::string out;
    for (size_t k = 0; k < sentences.size(); ++k) {
        if (k) out += ' ';
        out += sentences[k];
    }
    return out;
}

std::vector<std::string> roster_initials(const Roster& roster) {
    int n = roster.size();
    std::vector<std::string> headers(n);
    for (int i = 0; i < n; ++i) {
        const std::string& name = roster.name(i);
        size_t len = 1;
        for (; len < name.size(); ++len) {
            bool unique = true;
            for (int j = 0; j < n && unique; ++j) {
                if (j != i && roster.name(j).substr(0, len) == name.substr(0, len)) unique = false;
            }
            if (unique) break;
        }
        headers[i] = name.substr(0, len);
    }
    return headers;
}

std::string render_board(const Board& board, const Roster& roster) {
    int n = board.size();
    std::vector<std::string> headers = roster_initials(roster);
    size_t width = 1;
    for (const auto& h : headers) width = std::max(width, h.size());

    auto pad = [&](const std::string& s) {
        std::string out = s;
        out.resize(width, ' ');
        return out;
    };

    auto symbol = [](const RelationCell& cell) -> std::string {
        switch (cell.kind) {
            case RelationKind::Default: return ".";
            case RelationKind::War: return "x";
            case RelationKind::MilitaryAlliance: return "&";
            case RelationKind::NonInterventionTreaty: return "o";
            case RelationKind::PeaceAgreement: return "~";
        }
        return "?";
    };

    std::ostringstream out;
    out << pad("");
    for (int j = 0; j < n; ++j) out << ' ' << pad(headers[j]);
    out << '\n';
    for (int i = 0; i < n; ++i) {
        out << pad(headers[i]);
        for (int j = 0; j < n; ++j) {
            out << ' ' << pad(i == j ? "." : symbol(board.at(i, j)));
        }
        out << '\n';
    }
    return out.str();
}

bool relation_graph_connected(const WorldState& state) {
    int n = state.n;
    if (n <= 1) return true;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    state.board.for_each_pair([&](int i, int j, const RelationCell& cell) {
        if (cell.kind != RelationKind::Default) parent[find(i)] = find(j);
    });
    int root = find(0);
    for (int i = 1; i < n; ++i)
        if (find(i) != root) return false;
    return true;
}

}  // namespace waragent
