#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace waragent {

/// Ordered country list fixed by the scenario file. The index order is
/// canonical: it drives board layout, tie-breaking and every deterministic
/// iteration in the engine.
class Roster {
public:
    struct Entry {
        std::string name;                     // canonical spelling
        std::vector<std::string> aliases;     // accepted alternates ("US")
        bool definite_article = false;        // written "the X" mid-sentence

        bool operator==(const Entry&) const = default;
    };

    Roster() = default;
    explicit Roster(std::vector<Entry> entries);

    int size() const { return static_cast<int>(entries_.size()); }
    const std::string& name(int idx) const { return entries_.at(idx).name; }
    bool definite_article(int idx) const { return entries_.at(idx).definite_article; }
    const std::vector<Entry>& entries() const { return entries_; }

    /// Name as it appears mid-sentence ("the United States", "France").
    std::string display(int idx) const;

    /// Case-insensitive lookup that strips a leading "the " and accepts
    /// aliases. Returns nullopt for unknown countries.
    std::optional<int> find(std::string_view text) const;

    bool operator==(const Roster&) const = default;

private:
    std::vector<Entry> entries_;
};

/// Relation families tracked on the board. Default means "no relation".
enum class RelationKind { Default, War, MilitaryAlliance, NonInterventionTreaty, PeaceAgreement };

/// Closed action set. Every kind maps to exactly one relation family, or to
/// none (Wait, General Mobilization, Send Message).
enum class ActionKind {
    WaitWithoutAction,
    GeneralMobilization,
    DeclareWar,
    RequestMilitaryAlliance,
    AcceptMilitaryAlliance,
    RejectMilitaryAlliance,
    PublishMilitaryAlliance,
    BetrayMilitaryAlliance,
    RequestNonInterventionTreaty,
    AcceptNonInterventionTreaty,
    RejectNonInterventionTreaty,
    PublishNonInterventionTreaty,
    BetrayNonInterventionTreaty,
    PresentPeaceAgreement,
    AcceptPeaceAgreement,
    RejectPeaceAgreement,
    PublishPeaceAgreement,
    BetrayPeaceAgreement,
    SendMessage,
};

inline constexpr ActionKind kAllActionKinds[] = {
    ActionKind::WaitWithoutAction,
    ActionKind::GeneralMobilization,
    ActionKind::DeclareWar,
    ActionKind::RequestMilitaryAlliance,
    ActionKind::AcceptMilitaryAlliance,
    ActionKind::RejectMilitaryAlliance,
    ActionKind::PublishMilitaryAlliance,
    ActionKind::BetrayMilitaryAlliance,
    ActionKind::RequestNonInterventionTreaty,
    ActionKind::AcceptNonInterventionTreaty,
    ActionKind::RejectNonInterventionTreaty,
    ActionKind::PublishNonInterventionTreaty,
    ActionKind::BetrayNonInterventionTreaty,
    ActionKind::PresentPeaceAgreement,
    ActionKind::AcceptPeaceAgreement,
    ActionKind::RejectPeaceAgreement,
    ActionKind::PublishPeaceAgreement,
    ActionKind::BetrayPeaceAgreement,
    ActionKind::SendMessage,
};

enum class Publicity { Private, Public };
enum class InputType { None, Targets, TargetsAndContent };

struct ActionProperties {
    Publicity publicity;
    InputType input_type;
    bool require_response;
};

/// Total property table for the action space.
ActionProperties properties_of(ActionKind kind);

/// Relation family an action operates on; Default for Wait/Mobilization/Message.
RelationKind relation_family_of(ActionKind kind);

/// Human label: "Military Alliance", "Non-Intervention Treaty", ...
const std::string& relation_family_label(RelationKind family);

/// Exact verb phrase used on the wire ("Request Military Alliance", ...).
const std::string& verb_phrase(ActionKind kind);

bool is_request(ActionKind kind);   // Request*/PresentPeaceAgreement
bool is_accept(ActionKind kind);
bool is_reject(ActionKind kind);
bool is_response(ActionKind kind);  // Accept* or Reject*
bool is_publish(ActionKind kind);
bool is_betray(ActionKind kind);

/// Valid response kinds for a request. Throws std::logic_error when called
/// on a kind with require_response == false.
std::vector<ActionKind> response_kinds_for(ActionKind request_kind);

/// One diplomatic act in normalized form: targeted kinds carry exactly one
/// target; Wait and General Mobilization carry none. Country fields hold the
/// canonical roster spelling.
struct Action {
    std::string actor;
    ActionKind kind = ActionKind::WaitWithoutAction;
    std::vector<std::string> targets;
    std::optional<std::string> content;
    int round = 0;

    bool operator==(const Action&) const = default;
};

Action make_wait(std::string actor, int round = 0);

/// Renders the wire line "<Actor> has chosen to <Verb Phrase>[ <object>]".
/// The actor slot always uses the plain name; object slots use the display
/// form (definite article where the roster says so).
std::string format_action(const Action& action, const Roster& roster);

enum class ParseErrorKind { UnknownVerb, UnknownCountry, MalformedObject };

struct ParseError {
    ParseErrorKind kind;
    std::string span;     // offending slice of the input line
    std::string message;
};

using ParseResult = std::variant<std::vector<Action>, ParseError>;

/// Parses one wire line into normalized actions. Tolerates a leading
/// "To X:" routing prefix and article/alias variation in country names.
/// Multi-target objects ("to France and Russia") are split into one action
/// per target; lines otherwise yield exactly one action.
ParseResult parse_action(std::string_view line, const Roster& roster);

/// Convenience for tests and fixtures: parse expecting success, throw
/// std::runtime_error otherwise.
std::vector<Action> parse_action_or_throw(std::string_view line, const Roster& roster);

}  // namespace waragent
