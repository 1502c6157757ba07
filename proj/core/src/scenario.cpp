#include "waragent/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace waragent {

using nlohmann::json;

const std::array<Dimension, 6>& all_dimensions() {
    static const std::array<Dimension, 6> dims = {
        Dimension::Leadership,          Dimension::MilitaryCapability,
        Dimension::Resources,           Dimension::HistoricalBackground,
        Dimension::KeyPolicy,           Dimension::PublicMorale,
    };
    return dims;
}

const std::string& dimension_display_name(Dimension d) {
    static const std::array<std::string, 6> names = {
        "Leadership", "Military Capability", "Resources",
        "Historical Background", "Key Policy", "Public Morale",
    };
    return names.at(static_cast<size_t>(d));
}

const std::string& dimension_key(Dimension d) {
    static const std::array<std::string, 6> keys = {
        "leadership", "military_capability", "resources",
        "historical_background", "key_policy", "public_morale",
    };
    return keys.at(static_cast<size_t>(d));
}

namespace {

Dimension dimension_from_key(const std::string& key, const std::string& where) {
    for (Dimension d : all_dimensions())
        if (dimension_key(d) == key) return d;
    throw LoadError(where + ": unknown dimension '" + key + "'");
}

// Shortest plain rendering: integers without a decimal point, fractions as
// written ("0.53", "18.3", "120").
std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string ProfileEntry::rendered() const {
    std::string out;
    out.reserve(template_text.size());
    for (size_t i = 0; i < template_text.size();) {
        if (template_text[i] == '{') {
            size_t close = template_text.find('}', i);
            if (close != std::string::npos) {
                std::string key = template_text.substr(i + 1, close - i - 1);
                auto it = facts.find(key);
                if (it != facts.end()) {
                    const NumericFact& fact = it->second;
                    double v = fact.rounded_display ? std::round(fact.value * 10.0) / 10.0
                                                    : fact.value;
                    out += format_number(v);
                    i = close + 1;
                    continue;
                }
            }
        }
        out += template_text[i++];
    }
    return out;
}

const std::vector<ProfileEntry>& CountryProfile::entries(Dimension d) const {
    return dimensions.at(static_cast<size_t>(d));
}

std::vector<ProfileEntry>& CountryProfile::entries(Dimension d) {
    return dimensions.at(static_cast<size_t>(d));
}

const std::string& attitude_name(Attitude a) {
    static const std::array<std::string, 3> names = {"default", "aggressive", "conservative"};
    return names.at(static_cast<size_t>(a));
}

Attitude attitude_from_name(const std::string& name) {
    for (Attitude a : {Attitude::Default, Attitude::Aggressive, Attitude::Conservative})
        if (attitude_name(a) == name) return a;
    throw LoadError("unknown attitude '" + name + "'");
}

namespace {

bool word_boundary(const std::string& text, size_t pos, size_t len) {
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    bool left_ok = pos == 0 || !is_word(text[pos - 1]);
    bool right_ok = pos + len >= text.size() || !is_word(text[pos + len]);
    return left_ok && right_ok;
}

std::string replace_whole_words(std::string text, const std::string& from, const std::string& to) {
    if (from.empty()) return text;
    std::string out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t hit = text.find(from, pos);
        if (hit == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, hit - pos);
        if (word_boundary(text, hit, from.size())) {
            out += to;
        } else {
            out.append(from);
        }
        pos = hit + from.size();
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> longest_first(
    std::vector<std::pair<std::string, std::string>> pairs) {
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();
    });
    return pairs;
}

}  // namespace

std::string anonymize_text(const std::string& text, const AnonymizationMap& map) {
    std::string out = text;
    for (const auto& [from, to] : longest_first(map.event_rewrites))
        out = replace_whole_words(std::move(out), from, to);
    for (const auto& [from, to] : longest_first(map.location_renames))
        out = replace_whole_words(std::move(out), from, to);
    for (const auto& [from, to] : longest_first(map.country_renames))
        out = replace_whole_words(std::move(out), from, to);
    return out;
}

Roster Scenario::roster() const {
    std::vector<Roster::Entry> entries;
    entries.reserve(profiles.size());
    for (const CountryProfile& p : profiles)
        entries.push_back({p.name, p.aliases, p.definite_article});
    return Roster(std::move(entries));
}

const CountryProfile& Scenario::profile(const std::string& country) const {
    for (const CountryProfile& p : profiles)
        if (p.name == country) return p;
    throw LoadError("scenario '" + id + "' has no country '" + country + "'");
}

namespace {

ProfileEntry entry_from_json(const json& j, const std::string& where) {
    ProfileEntry entry;
    if (j.is_string()) {
        entry.template_text = j.get<std::string>();
    } else if (j.is_object()) {
        if (!j.contains("template") || !j.at("template").is_string())
            throw LoadError(where + ": entry object needs a string 'template'");
        entry.template_text = j.at("template").get<std::string>();
        if (j.contains("facts")) {
            for (const auto& [key, fact] : j.at("facts").items()) {
                NumericFact f;
                if (fact.is_number()) {
                    f.value = fact.get<double>();
                } else if (fact.is_object() && fact.contains("value")) {
                    f.value = fact.at("value").get<double>();
                    f.unit = fact.value("unit", "");
                    f.rounded_display = fact.value("rounded_display", false);
                } else {
                    throw LoadError(where + ": fact '" + key + "' needs a numeric value");
                }
                if (!(f.value > 0.0))
                    throw LoadError(where + ": fact '" + key + "' must be strictly positive");
                entry.facts.emplace(key, std::move(f));
            }
        }
    } else {
        throw LoadError(where + ": entries must be strings or objects");
    }
    if (entry.template_text.empty()) throw LoadError(where + ": empty entry text");
    for (const auto& [key, fact] : entry.facts) {
        (void)fact;
        if (entry.template_text.find("{" + key + "}") == std::string::npos)
            throw LoadError(where + ": fact '" + key + "' has no {" + key + "} placeholder");
    }
    return entry;
}

std::vector<std::pair<std::string, std::string>> pairs_from_json(const json& j,
                                                                 const std::string& where) {
    std::vector<std::pair<std::string, std::string>> out;
    if (j.is_null()) return out;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2)
            throw LoadError(where + ": expected [\"a\", \"b\"] pairs");
        out.emplace_back(item.at(0).get<std::string>(), item.at(1).get<std::string>());
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> renames_from_json(const json& j) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [from, to] : j.items()) out.emplace_back(from, to.get<std::string>());
    return out;
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::string& source) {
    Scenario s;
    s.id = j.value("id", "");
    if (s.id.empty()) throw LoadError(source + ": missing scenario id");
    s.deanonymized = j.value("deanonymized", true);

    if (!j.contains("trigger") || !j.at("trigger").contains("text"))
        throw LoadError(source + ": missing trigger");
    s.trigger.id = j.at("trigger").value("id", "trigger");
    s.trigger.text = j.at("trigger").at("text").get<std::string>();
    if (s.trigger.text.empty()) throw LoadError(source + ": trigger text is empty");

    if (!j.contains("countries") || !j.at("countries").is_array() || j.at("countries").empty())
        throw LoadError(source + ": missing countries");

    std::set<std::string> seen;
    for (const auto& cj : j.at("countries")) {
        CountryProfile p;
        p.name = cj.value("name", "");
        if (p.name.empty()) throw LoadError(source + ": country without a name");
        if (!seen.insert(p.name).second)
            throw LoadError(source + ": duplicate country '" + p.name + "'");
        p.definite_article = cj.value("definite_article", false);
        if (cj.contains("aliases"))
            for (const auto& a : cj.at("aliases")) p.aliases.push_back(a.get<std::string>());

        if (!cj.contains("profile"))
            throw LoadError(source + ": country '" + p.name + "' has no profile");
        const json& prof = cj.at("profile");
        for (Dimension d : all_dimensions()) {
            const std::string& key = dimension_key(d);
            if (!prof.contains(key) || !prof.at(key).is_array() || prof.at(key).empty())
                throw LoadError(source + ": country '" + p.name + "' is missing dimension '" +
                                key + "'");
            for (const auto& ej : prof.at(key))
                p.entries(d).push_back(entry_from_json(ej, source + ":" + p.name + ":" + key));
        }
        s.profiles.push_back(std::move(p));
    }

    if (j.contains("anonymization")) {
        const json& an = j.at("anonymization");
        if (an.contains("countries")) s.anonymization.country_renames = renames_from_json(an.at("countries"));
        if (an.contains("locations")) s.anonymization.location_renames = renames_from_json(an.at("locations"));
        if (an.contains("events")) s.anonymization.event_rewrites = renames_from_json(an.at("events"));
        std::set<std::string> targets;
        for (const auto& [from, to] : s.anonymization.country_renames) {
            (void)from;
            if (!targets.insert(to).second)
                throw LoadError(source + ": anonymization aliases collide on '" + to + "'");
        }
    }

    Roster roster = s.roster();
    auto require_country = [&](const std::string& name, const std::string& where) {
        if (!roster.find(name))
            throw LoadError(source + ": " + where + " references unknown country '" + name + "'");
    };

    if (j.contains("ground_truth")) {
        const json& gt = j.at("ground_truth");
        s.ground_truth.snapshot_round = gt.value("snapshot_round", 6);
        if (gt.contains("alliances"))
            s.ground_truth.alliances = pairs_from_json(gt.at("alliances"), source + ":alliances");
        if (gt.contains("alliance_groups")) {
            // Groups expand to cliques; transitivity makes the pair choice moot
            // for partitions, so the explicit form keeps the file unambiguous.
            for (const auto& group : gt.at("alliance_groups")) {
                std::vector<std::string> names;
                for (const auto& n : group) names.push_back(n.get<std::string>());
                for (size_t a = 0; a < names.size(); ++a)
                    for (size_t b = a + 1; b < names.size(); ++b)
                        s.ground_truth.alliances.emplace_back(names[a], names[b]);
            }
        }
        if (gt.contains("war_declarations"))
            s.ground_truth.war_declarations =
                pairs_from_json(gt.at("war_declarations"), source + ":war_declarations");
        if (gt.contains("mobilized"))
            for (const auto& n : gt.at("mobilized"))
                s.ground_truth.mobilized.push_back(n.get<std::string>());

        for (const auto& [a, b] : s.ground_truth.alliances) {
            require_country(a, "ground truth alliance");
            require_country(b, "ground truth alliance");
            if (a == b) throw LoadError(source + ": ground truth pair names '" + a + "' twice");
        }
        for (const auto& [a, b] : s.ground_truth.war_declarations) {
            require_country(a, "ground truth war");
            require_country(b, "ground truth war");
            if (a == b) throw LoadError(source + ": ground truth pair names '" + a + "' twice");
        }
        for (const auto& m : s.ground_truth.mobilized) require_country(m, "ground truth mobilization");
    }

    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open scenario file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("scenario '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j, path.filename().string());
}

nlohmann::json scenario_to_json(const Scenario& s) {
    json j;
    j["id"] = s.id;
    j["deanonymized"] = s.deanonymized;
    j["trigger"] = {{"id", s.trigger.id}, {"text", s.trigger.text}};
    json countries = json::array();
    for (const CountryProfile& p : s.profiles) {
        json cj;
        cj["name"] = p.name;
        if (!p.aliases.empty()) cj["aliases"] = p.aliases;
        if (p.definite_article) cj["definite_article"] = true;
        json prof;
        for (Dimension d : all_dimensions()) {
            json entries = json::array();
            for (const ProfileEntry& e : p.entries(d)) {
                if (e.facts.empty()) {
                    entries.push_back(e.template_text);
                } else {
                    json facts;
                    for (const auto& [key, fact] : e.facts) {
                        facts[key] = {{"value", fact.value}, {"unit", fact.unit}};
                        if (fact.rounded_display) facts[key]["rounded_display"] = true;
                    }
                    entries.push_back({{"template", e.template_text}, {"facts", facts}});
                }
            }
            prof[dimension_key(d)] = entries;
        }
        cj["profile"] = prof;
        countries.push_back(cj);
    }
    j["countries"] = countries;

    auto renames_json = [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        json out = json::object();
        for (const auto& [from, to] : pairs) out[from] = to;
        return out;
    };
    j["anonymization"] = {{"countries", renames_json(s.anonymization.country_renames)},
                          {"locations", renames_json(s.anonymization.location_renames)},
                          {"events", renames_json(s.anonymization.event_rewrites)}};

    auto pairs_json = [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        json out = json::array();
        for (const auto& [a, b] : pairs) out.push_back(json::array({a, b}));
        return out;
    };
    j["ground_truth"] = {{"alliances", pairs_json(s.ground_truth.alliances)},
                         {"war_declarations", pairs_json(s.ground_truth.war_declarations)},
                         {"mobilized", s.ground_truth.mobilized},
                         {"snapshot_round", s.ground_truth.snapshot_round}};
    return j;
}

Scenario anonymize(const Scenario& scenario) {
    if (!scenario.deanonymized)
        throw LoadError("scenario '" + scenario.id + "' is already anonymized");

    const AnonymizationMap& map = scenario.anonymization;
    std::map<std::string, std::string> country_map(map.country_renames.begin(),
                                                   map.country_renames.end());
    {
        std::set<std::string> aliases;
        for (const auto& [from, to] : map.country_renames) {
            (void)from;
            if (!aliases.insert(to).second)
                throw LoadError("anonymization aliases collide on '" + to + "'");
        }
    }

    Scenario out = scenario;
    for (CountryProfile& p : out.profiles) {
        auto renamed = country_map.find(p.name);
        if (renamed != country_map.end()) {
            p.name = renamed->second;
            p.aliases.clear();  // old aliases point at the real name
            p.definite_article = false;
        } else {
            for (std::string& alias : p.aliases) alias = anonymize_text(alias, map);
            std::sort(p.aliases.begin(), p.aliases.end());
            p.aliases.erase(std::unique(p.aliases.begin(), p.aliases.end()), p.aliases.end());
            std::erase(p.aliases, p.name);
        }
        for (Dimension d : all_dimensions())
            for (ProfileEntry& e : p.entries(d)) e.template_text = anonymize_text(e.template_text, map);
    }

    {
        std::set<std::string> names;
        for (const CountryProfile& p : out.profiles)
            if (!names.insert(p.name).second)
                throw LoadError("anonymization aliases collide on '" + p.name + "'");
    }

    out.trigger.text = anonymize_text(out.trigger.text, map);

    auto rename_country = [&](std::string& name) {
        auto it = country_map.find(name);
        if (it != country_map.end()) name = it->second;
    };
    for (auto& [a, b] : out.ground_truth.alliances) { rename_country(a); rename_country(b); }
    for (auto& [a, b] : out.ground_truth.war_declarations) { rename_country(a); rename_country(b); }
    for (auto& m : out.ground_truth.mobilized) rename_country(m);

    out.deanonymized = false;
    return out;
}

namespace {

bool multiplier_allowed(double m) {
    return std::fabs(m - 3.0) < 1e-9 || std::fabs(m - 1.0 / 3.0) < 1e-9;
}

}  // namespace

Scenario apply_overlay(const Scenario& scenario, const Overlay& overlay) {
    Scenario out = scenario;
    Roster roster = scenario.roster();

    for (const ProfilePatch& patch : overlay.patches) {
        auto idx = roster.find(patch.country);
        if (!idx) throw LoadError("overlay patches unknown country '" + patch.country + "'");
        CountryProfile& profile = out.profiles[static_cast<size_t>(*idx)];
        std::vector<ProfileEntry>& entries = profile.entries(patch.dimension);

        std::vector<size_t> selected;
        if (patch.entries.empty()) {
            for (size_t k = 0; k < entries.size(); ++k) selected.push_back(k);
        } else {
            for (int one_based : patch.entries) {
                if (one_based < 1 || static_cast<size_t>(one_based) > entries.size())
                    throw LoadError("overlay selector (" + patch.country + ", " +
                                    dimension_key(patch.dimension) + ", entry " +
                                    std::to_string(one_based) + ") matches no entry");
                selected.push_back(static_cast<size_t>(one_based - 1));
            }
        }
        if (selected.empty())
            throw LoadError("overlay selector for '" + patch.country + "' matches no entry");

        if (patch.multiplier) {
            double m = *patch.multiplier;
            if (!overlay.unrestricted_multipliers && !multiplier_allowed(m))
                throw LoadError("overlay multiplier must be 3 or 1/3 unless unrestricted");
            int touched = 0;
            for (size_t k : selected) {
                for (auto& [key, fact] : entries[k].facts) {
                    (void)key;
                    fact.value *= m;
                    fact.rounded_display = true;
                    ++touched;
                }
            }
            if (touched == 0)
                throw LoadError("overlay multiplier for '" + patch.country +
                                "' selects entries without numeric facts");
        } else if (patch.replace) {
            for (size_t k : selected) entries[k] = ProfileEntry{*patch.replace, {}};
        } else {
            throw LoadError("overlay patch needs a multiplier or replacement text");
        }
    }

    if (overlay.trigger_override) out.trigger = *overlay.trigger_override;
    return out;
}

Overlay overlay_from_json(const json& j) {
    Overlay overlay;
    overlay.unrestricted_multipliers = j.value("unrestricted_multipliers", false);
    if (j.contains("attitude")) overlay.attitude = attitude_from_name(j.at("attitude"));
    if (j.contains("trigger")) {
        if (j.at("trigger").is_null()) {
            overlay.trigger_override =
                TriggerEvent{"null", "Today is sunny, and nothing special happened."};
        } else {
            overlay.trigger_override = TriggerEvent{j.at("trigger").value("id", "override"),
                                                    j.at("trigger").at("text").get<std::string>()};
        }
    }
    if (j.contains("patches")) {
        for (const auto& pj : j.at("patches")) {
            ProfilePatch patch;
            patch.country = pj.at("country").get<std::string>();
            patch.dimension = dimension_from_key(pj.at("dimension").get<std::string>(), "overlay");
            if (pj.contains("entries") && !pj.at("entries").is_string())
                for (const auto& e : pj.at("entries")) patch.entries.push_back(e.get<int>());
            if (pj.contains("entry")) patch.entries.push_back(pj.at("entry").get<int>());
            if (pj.contains("multiplier")) {
                const json& m = pj.at("multiplier");
                if (m.is_string()) {
                    const std::string text = m.get<std::string>();
                    size_t slash = text.find('/');
                    if (slash == std::string::npos)
                        throw LoadError("overlay multiplier string must look like '1/3'");
                    patch.multiplier = std::stod(text.substr(0, slash)) /
                                       std::stod(text.substr(slash + 1));
                } else {
                    patch.multiplier = m.get<double>();
                }
            }
            if (pj.contains("replace")) patch.replace = pj.at("replace").get<std::string>();
            overlay.patches.push_back(std::move(patch));
        }
    }
    return overlay;
}

Overlay load_overlay(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open overlay file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("overlay '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return overlay_from_json(j);
}

nlohmann::json overlay_to_json(const Overlay& overlay) {
    json j;
    j["attitude"] = attitude_name(overlay.attitude);
    j["unrestricted_multipliers"] = overlay.unrestricted_multipliers;
    if (overlay.trigger_override)
        j["trigger"] = {{"id", overlay.trigger_override->id},
                        {"text", overlay.trigger_override->text}};
    json patches = json::array();
    for (const ProfilePatch& p : overlay.patches) {
        json pj;
        pj["country"] = p.country;
        pj["dimension"] = dimension_key(p.dimension);
        if (!p.entries.empty()) pj["entries"] = p.entries;
        if (p.multiplier) pj["multiplier"] = *p.multiplier;
        if (p.replace) pj["replace"] = *p.replace;
        patches.push_back(pj);
    }
    j["patches"] = patches;
    return j;
}

std::string render_profile(const CountryProfile& profile) {
    std::ostringstream out;
    out << "## " << profile.name << " profile\n";
    for (Dimension d : all_dimensions()) {
        out << "\n# " << dimension_display_name(d) << " for " << profile.name << "\n";
        int k = 1;
        for (const ProfileEntry& e : profile.entries(d))
            out << "(" << k++ << ") " << e.rendered() << "\n";
    }
    return out.str();
}

}  // namespace waragent
