#include "waragent/protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <stdexcept>

namespace waragent {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_article(std::string_view s) {
    for (std::string_view art : {"the ", "The ", "THE "}) {
        if (s.size() > art.size() && s.substr(0, art.size()) == art) return s.substr(art.size());
    }
    return s;
}

// How the object of a verb is phrased on the wire.
enum class ObjectForm { None, To, From, Against, OnPair, ToWithContent };

struct KindInfo {
    ActionKind kind;
    const char* verb;
    ObjectForm object;
    RelationKind family;
    ActionProperties props;
};

constexpr Publicity kPub = Publicity::Public;
constexpr Publicity kPriv = Publicity::Private;

const std::array<KindInfo, 19>& kind_table() {
    static const std::array<KindInfo, 19> table = {{
        {ActionKind::WaitWithoutAction, "Wait without Action", ObjectForm::None,
         RelationKind::Default, {kPriv, InputType::None, false}},
        {ActionKind::GeneralMobilization, "General Mobilization", ObjectForm::None,
         RelationKind::Default, {kPub, InputType::None, false}},
        {ActionKind::DeclareWar, "Declare War", ObjectForm::Against,
         RelationKind::War, {kPub, InputType::Targets, false}},
        {ActionKind::RequestMilitaryAlliance, "Request Military Alliance", ObjectForm::To,
         RelationKind::MilitaryAlliance, {kPriv, InputType::Targets, true}},
        {ActionKind::AcceptMilitaryAlliance, "Accept Military Alliance", ObjectForm::From,
         RelationKind::MilitaryAlliance, {kPriv, InputType::Targets, false}},
        {ActionKind::RejectMilitaryAlliance, "Reject Military Alliance", ObjectForm::From,
         RelationKind::MilitaryAlliance, {kPriv, InputType::Targets, false}},
        {ActionKind::PublishMilitaryAlliance, "Publish Military Alliance", ObjectForm::OnPair,
         RelationKind::MilitaryAlliance, {kPub, InputType::Targets, false}},
        {ActionKind::BetrayMilitaryAlliance, "Betray Military Alliance", ObjectForm::Against,
         RelationKind::MilitaryAlliance, {kPub, InputType::Targets, false}},
        {ActionKind::RequestNonInterventionTreaty, "Request Non-Intervention Treaty", ObjectForm::To,
         RelationKind::NonInterventionTreaty, {kPriv, InputType::Targets, true}},
        {ActionKind::AcceptNonInterventionTreaty, "Accept Non-Intervention Treaty", ObjectForm::From,
         RelationKind::NonInterventionTreaty, {kPriv, InputType::Targets, false}},
        {ActionKind::RejectNonInterventionTreaty, "Reject Non-Intervention Treaty", ObjectForm::From,
         RelationKind::NonInterventionTreaty, {kPriv, InputType::Targets, false}},
        {ActionKind::PublishNonInterventionTreaty, "Publish Non-Intervention Treaty", ObjectForm::OnPair,
         RelationKind::NonInterventionTreaty, {kPub, InputType::Targets, false}},
        {ActionKind::BetrayNonInterventionTreaty, "Betray Non-Intervention Treaty", ObjectForm::Against,
         RelationKind::NonInterventionTreaty, {kPub, InputType::Targets, false}},
        {ActionKind::PresentPeaceAgreement, "Present Peace Agreement", ObjectForm::ToWithContent,
         RelationKind::PeaceAgreement, {kPriv, InputType::TargetsAndContent, true}},
        {ActionKind::AcceptPeaceAgreement, "Accept Peace Agreement", ObjectForm::From,
         RelationKind::PeaceAgreement, {kPriv, InputType::Targets, false}},
        {ActionKind::RejectPeaceAgreement, "Reject Peace Agreement", ObjectForm::From,
         RelationKind::PeaceAgreement, {kPriv, InputType::Targets, false}},
        {ActionKind::PublishPeaceAgreement, "Publish Peace Agreement", ObjectForm::OnPair,
         RelationKind::PeaceAgreement, {kPub, InputType::Targets, false}},
        {ActionKind::BetrayPeaceAgreement, "Betray Peace Agreement", ObjectForm::Against,
         RelationKind::PeaceAgreement, {kPub, InputType::Targets, false}},
        {ActionKind::SendMessage, "Send Message", ObjectForm::ToWithContent,
         RelationKind::Default, {kPriv, InputType::TargetsAndContent, true}},
    }};
    return table;
}

const KindInfo& info_of(ActionKind kind) {
    for (const auto& info : kind_table()) {
        if (info.kind == kind) return info;
    }
    throw std::logic_error("unknown action kind");
}

constexpr const char* kChosen = " has chosen to ";
constexpr const char* kContentMarker = " with the following content: ";

}  // namespace

Roster::Roster(std::vector<Entry> entries) : entries_(std::move(entries)) {}

std::string Roster::display(int idx) const {
    const Entry& e = entries_.at(idx);
    return e.definite_article ? "the " + e.name : e.name;
}

std::optional<int> Roster::find(std::string_view text) const {
    std::string needle = lower_ascii(trim(strip_article(trim(text))));
    if (needle.empty()) return std::nullopt;
    for (int i = 0; i < size(); ++i) {
        if (lower_ascii(entries_[i].name) == needle) return i;
        for (const auto& alias : entries_[i].aliases) {
            if (lower_ascii(alias) == needle) return i;
        }
    }
    return std::nullopt;
}

ActionProperties properties_of(ActionKind kind) { return info_of(kind).props; }

RelationKind relation_family_of(ActionKind kind) { return info_of(kind).family; }

const std::string& relation_family_label(RelationKind family) {
    static const std::map<RelationKind, std::string> labels = {
        {RelationKind::Default, "Default"},
        {RelationKind::War, "War"},
        {RelationKind::MilitaryAlliance, "Military Alliance"},
        {RelationKind::NonInterventionTreaty, "Non-Intervention Treaty"},
        {RelationKind::PeaceAgreement, "Peace Agreement"},
    };
    return labels.at(family);
}

const std::string& verb_phrase(ActionKind kind) {
    static const std::map<ActionKind, std::string> table = [] {
        std::map<ActionKind, std::string> m;
        for (const auto& info : kind_table()) m.emplace(info.kind, info.verb);
        return m;
    }();
    return table.at(kind);
}

bool is_request(ActionKind kind) {
    return kind == ActionKind::RequestMilitaryAlliance ||
           kind == ActionKind::RequestNonInterventionTreaty ||
           kind == ActionKind::PresentPeaceAgreement;
}

bool is_accept(ActionKind kind) {
    return kind == ActionKind::AcceptMilitaryAlliance ||
           kind == ActionKind::AcceptNonInterventionTreaty ||
           kind == ActionKind::AcceptPeaceAgreement;
}

bool is_reject(ActionKind kind) {
    return kind == ActionKind::RejectMilitaryAlliance ||
           kind == ActionKind::RejectNonInterventionTreaty ||
           kind == ActionKind::RejectPeaceAgreement;
}

bool is_response(ActionKind kind) { return is_accept(kind) || is_reject(kind); }

bool is_publish(ActionKind kind) {
    return kind == ActionKind::PublishMilitaryAlliance ||
           kind == ActionKind::PublishNonInterventionTreaty ||
           kind == ActionKind::PublishPeaceAgreement;
}

bool is_betray(ActionKind kind) {
    return kind == ActionKind::BetrayMilitaryAlliance ||
           kind == ActionKind::BetrayNonInterventionTreaty ||
           kind == ActionKind::BetrayPeaceAgreement;
}

std::vector<ActionKind> response_kinds_for(ActionKind request_kind) {
    switch (request_kind) {
        case ActionKind::RequestMilitaryAlliance:
            return {ActionKind::AcceptMilitaryAlliance, ActionKind::RejectMilitaryAlliance};
        case ActionKind::RequestNonInterventionTreaty:
            return {ActionKind::AcceptNonInterventionTreaty, ActionKind::RejectNonInterventionTreaty};
        case ActionKind::PresentPeaceAgreement:
            return {ActionKind::AcceptPeaceAgreement, ActionKind::RejectPeaceAgreement};
        case ActionKind::SendMessage:
            return {ActionKind::SendMessage};  // free-text reply
        default:
            throw std::logic_error("response_kinds_for: kind does not require a response");
    }
}

Action make_wait(std::string actor, int round) {
    Action a;
    a.actor = std::move(actor);
    a.kind = ActionKind::WaitWithoutAction;
    a.round = round;
    return a;
}

std::string format_action(const Action& action, const Roster& roster) {
    const KindInfo& info = info_of(action.kind);
    std::string line = action.actor;
    line += kChosen;
    line += info.verb;

    auto target_display = [&](const std::string& target) {
        auto idx = roster.find(target);
        return idx ? roster.display(*idx) : target;
    };

    switch (info.object) {
        case ObjectForm::None:
            break;
        case ObjectForm::To:
            line += " to " + target_display(action.targets.at(0));
            break;
        case ObjectForm::From:
            line += " from " + target_display(action.targets.at(0));
            break;
        case ObjectForm::Against:
            line += " against " + target_display(action.targets.at(0));
            break;
        case ObjectForm::OnPair:
            line += " on " + action.actor + " and " + target_display(action.targets.at(0));
            break;
        case ObjectForm::ToWithContent:
            line += " to " + target_display(action.targets.at(0));
            line += kContentMarker;
            line += action.content.value_or("");
            break;
    }
    return line;
}

namespace {

ParseError error(ParseErrorKind kind, std::string_view span, std::string message) {
    return ParseError{kind, std::string(trim(span)), std::move(message)};
}

// Splits "France and Russia" / "France, Russia and Serbia" into name chunks.
std::vector<std::string_view> split_name_list(std::string_view text) {
    std::vector<std::string_view> parts;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t comma = text.find(", ", pos);
        size_t conj = text.find(" and ", pos);
        size_t cut = std::min(comma, conj);
        if (cut == std::string_view::npos) {
            parts.push_back(trim(text.substr(pos)));
            break;
        }
        parts.push_back(trim(text.substr(pos, cut - pos)));
        pos = cut + (cut == comma ? 2 : 5);
    }
    std::erase_if(parts, [](std::string_view p) { return p.empty(); });
    return parts;
}

std::string_view strip_trailing_period(std::string_view s) {
    s = trim(s);
    while (!s.empty() && s.back() == '.') {
        s.remove_suffix(1);
        s = trim(s);
    }
    return s;
}

}  // namespace

ParseResult parse_action(std::string_view raw_line, const Roster& roster) {
    std::string_view line = trim(raw_line);

    // Tolerate the "To X:" routing prefix seen in transcripts.
    if (line.rfind("To ", 0) == 0) {
        size_t colon = line.find(':');
        if (colon != std::string_view::npos && colon < line.find(kChosen)) {
            line = trim(line.substr(colon + 1));
        }
    }

    size_t chosen = line.find(kChosen);
    if (chosen == std::string_view::npos) {
        return error(ParseErrorKind::MalformedObject, line,
                     "expected '<country> has chosen to <action>'");
    }

    std::string_view actor_text = trim(line.substr(0, chosen));
    auto actor_idx = roster.find(actor_text);
    if (!actor_idx) {
        return error(ParseErrorKind::UnknownCountry, actor_text,
                     "unknown acting country '" + std::string(trim(actor_text)) + "'");
    }

    std::string_view rest = trim(line.substr(chosen + std::string_view(kChosen).size()));

    // Verbs are matched case-sensitively; prefer the longest phrase so that
    // "Request Non-Intervention Treaty" wins over any shorter prefix.
    const KindInfo* matched = nullptr;
    for (const auto& info : kind_table()) {
        std::string_view verb = info.verb;
        if (rest.size() < verb.size() || rest.substr(0, verb.size()) != verb) continue;
        if (rest.size() > verb.size()) {
            char next = rest[verb.size()];
            if (next != ' ' && next != '.') continue;
        }
        if (!matched || verb.size() > std::string_view(matched->verb).size()) matched = &info;
    }
    if (!matched) {
        return error(ParseErrorKind::UnknownVerb, rest,
                     "action verb is outside the action space");
    }

    std::string_view object = trim(rest.substr(std::string_view(matched->verb).size()));

    Action base;
    base.actor = roster.name(*actor_idx);
    base.kind = matched->kind;

    auto resolve_targets = [&](std::string_view names_text,
                               std::vector<int>& out) -> std::optional<ParseError> {
        for (std::string_view part : split_name_list(names_text)) {
            auto idx = roster.find(strip_trailing_period(part));
            if (!idx) {
                return error(ParseErrorKind::UnknownCountry, part,
                             "unknown target country '" + std::string(trim(part)) + "'");
            }
            if (*idx == *actor_idx) {
                return error(ParseErrorKind::MalformedObject, part,
                             "a country cannot target itself");
            }
            out.push_back(*idx);
        }
        if (out.empty()) {
            return error(ParseErrorKind::MalformedObject, names_text, "missing target country");
        }
        return std::nullopt;
    };

    auto expect_preposition = [&](std::string_view prep) -> std::optional<std::string_view> {
        std::string with_space = std::string(prep) + " ";
        if (object.rfind(with_space, 0) == 0) return trim(object.substr(with_space.size()));
        return std::nullopt;
    };

    std::vector<int> target_indices;

    switch (matched->object) {
        case ObjectForm::None: {
            if (!strip_trailing_period(object).empty()) {
                return error(ParseErrorKind::MalformedObject, object,
                             "'" + std::string(matched->verb) + "' takes no object");
            }
            std::vector<Action> out{base};
            return out;
        }
        case ObjectForm::To:
        case ObjectForm::From:
        case ObjectForm::Against: {
            const char* prep = matched->object == ObjectForm::To      ? "to"
                               : matched->object == ObjectForm::From ? "from"
                                                                     : "against";
            auto names = expect_preposition(prep);
            if (!names) {
                return error(ParseErrorKind::MalformedObject, object,
                             std::string("expected '") + prep + " <country>'");
            }
            if (auto err = resolve_targets(*names, target_indices)) return *err;
            break;
        }
        case ObjectForm::OnPair: {
            auto names = expect_preposition("on");
            if (!names) {
                return error(ParseErrorKind::MalformedObject, object,
                             "expected 'on <country> and <country>'");
            }
            std::vector<std::string_view> pair = split_name_list(*names);
            if (pair.size() != 2) {
                return error(ParseErrorKind::MalformedObject, *names,
                             "expected exactly two countries after 'on'");
            }
            auto a = roster.find(strip_trailing_period(pair[0]));
            auto b = roster.find(strip_trailing_period(pair[1]));
            if (!a) return error(ParseErrorKind::UnknownCountry, pair[0], "unknown country");
            if (!b) return error(ParseErrorKind::UnknownCountry, pair[1], "unknown country");
            // The published pair must include the actor; the other side is the target.
            if (*a == *actor_idx && *b != *actor_idx) {
                target_indices.push_back(*b);
            } else if (*b == *actor_idx && *a != *actor_idx) {
                target_indices.push_back(*a);
            } else {
                return error(ParseErrorKind::MalformedObject, *names,
                             "published pair must name the actor and one other country");
            }
            break;
        }
        case ObjectForm::ToWithContent: {
            size_t marker = object.find(kContentMarker);
            if (marker == std::string_view::npos) {
                return error(ParseErrorKind::MalformedObject, object,
                             std::string("expected 'to <country>") + kContentMarker + "<text>'");
            }
            std::string_view head = trim(object.substr(0, marker));
            std::string_view content =
                trim(object.substr(marker + std::string_view(kContentMarker).size()));
            auto names = [&]() -> std::optional<std::string_view> {
                if (head.rfind("to ", 0) == 0) return trim(head.substr(3));
                return std::nullopt;
            }();
            if (!names) {
                return error(ParseErrorKind::MalformedObject, head, "expected 'to <country>'");
            }
            if (content.empty()) {
                return error(ParseErrorKind::MalformedObject, object, "missing message content");
            }
            if (auto err = resolve_targets(*names, target_indices)) return *err;
            base.content = std::string(content);
            break;
        }
    }

    std::vector<Action> out;
    for (int idx : target_indices) {
        Action a = base;
        a.targets = {roster.name(idx)};
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Action> parse_action_or_throw(std::string_view line, const Roster& roster) {
    ParseResult result = parse_action(line, roster);
    if (auto* err = std::get_if<ParseError>(&result)) {
        throw std::runtime_error("parse_action failed on '" + std::string(line) +
                                 "': " + err->message);
    }
    return std::get<std::vector<Action>>(std::move(result));
}

}  // namespace waragent
