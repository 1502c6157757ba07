#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "waragent/protocol.hpp"

namespace waragent {

class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The six profile dimensions, in canonical render order.
enum class Dimension {
    Leadership,
    MilitaryCapability,
    Resources,
    HistoricalBackground,
    KeyPolicy,
    PublicMorale,
};

const std::array<Dimension, 6>& all_dimensions();
const std::string& dimension_display_name(Dimension d);  // "Military Capability"
const std::string& dimension_key(Dimension d);            // "military_capability"

/// A tagged number inside a profile entry. Overlays multiply the value and
/// the sentence is re-rendered from the template, so no text surgery happens.
/// Multiplied values keep full precision but render at one decimal.
struct NumericFact {
    double value = 0.0;
    std::string unit;
    bool rounded_display = false;  // set once a multiplier touched the value

    bool operator==(const NumericFact&) const = default;
};

/// One numbered entry of a profile dimension: a sentence template with
/// optional {key} placeholders bound to numeric facts.
struct ProfileEntry {
    std::string template_text;
    std::map<std::string, NumericFact> facts;

    std::string rendered() const;

    bool operator==(const ProfileEntry&) const = default;
};

struct CountryProfile {
    std::string name;
    std::vector<std::string> aliases;
    bool definite_article = false;
    std::array<std::vector<ProfileEntry>, 6> dimensions;

    const std::vector<ProfileEntry>& entries(Dimension d) const;
    std::vector<ProfileEntry>& entries(Dimension d);

    bool operator==(const CountryProfile&) const = default;
};

struct TriggerEvent {
    std::string id;
    std::string text;

    bool operator==(const TriggerEvent&) const = default;
};

struct AnonymizationMap {
    // Ordered pairs (real -> alias); applied events first, then locations,
    // then countries, longest key first within each group.
    std::vector<std::pair<std::string, std::string>> country_renames;
    std::vector<std::pair<std::string, std::string>> location_renames;
    std::vector<std::pair<std::string, std::string>> event_rewrites;

    bool empty() const {
        return country_renames.empty() && location_renames.empty() && event_rewrites.empty();
    }

    bool operator==(const AnonymizationMap&) const = default;
};

/// Whole-word rewrite of one text under the map. Idempotent: aliases never
/// contain real names, which the scenario loader enforces.
std::string anonymize_text(const std::string& text, const AnonymizationMap& map);

struct GroundTruth {
    std::vector<std::pair<std::string, std::string>> alliances;  // unordered pairs
    std::vector<std::pair<std::string, std::string>> war_declarations;  // empty = not evaluated
    std::vector<std::string> mobilized;
    int snapshot_round = 6;

    bool operator==(const GroundTruth&) const = default;
};

enum class Attitude { Default, Aggressive, Conservative };

const std::string& attitude_name(Attitude a);
Attitude attitude_from_name(const std::string& name);

/// One counterfactual profile patch: either a numeric multiplier over the
/// selected entries' facts or a whole-entry text replacement.
struct ProfilePatch {
    std::string country;
    Dimension dimension = Dimension::Leadership;
    std::vector<int> entries;  // 1-based indices; empty selects all entries
    std::optional<double> multiplier;
    std::optional<std::string> replace;

    bool operator==(const ProfilePatch&) const = default;
};

struct Overlay {
    std::vector<ProfilePatch> patches;
    std::optional<TriggerEvent> trigger_override;
    Attitude attitude = Attitude::Default;
    bool unrestricted_multipliers = false;  // lifts the {3, 1/3} constraint

    bool operator==(const Overlay&) const = default;
};

Overlay load_overlay(const std::filesystem::path& path);
Overlay overlay_from_json(const nlohmann::json& j);
nlohmann::json overlay_to_json(const Overlay& overlay);

struct Scenario {
    std::string id;
    std::vector<CountryProfile> profiles;  // canonical roster order
    TriggerEvent trigger;
    AnonymizationMap anonymization;
    GroundTruth ground_truth;
    bool deanonymized = true;

    Roster roster() const;
    const CountryProfile& profile(const std::string& country) const;

    bool operator==(const Scenario&) const = default;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario scenario_from_json(const nlohmann::json& j, const std::string& source);
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Applies the anonymization map to every profile text, the trigger, roster
/// names and ground truth. Requires a deanonymized scenario.
Scenario anonymize(const Scenario& scenario);

/// Returns a patched copy; the input is never modified. Multiplied facts are
/// rounded to one decimal for rendering.
Scenario apply_overlay(const Scenario& scenario, const Overlay& overlay);

/// Markdown-style profile block: "## <name> profile" followed by one
/// "# <Dimension> for <name>" section of numbered entries per dimension.
std::string render_profile(const CountryProfile& profile);

}  // namespace waragent
