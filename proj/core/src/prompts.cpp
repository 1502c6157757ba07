#include "waragent/prompts.hpp"

#include <fstream>
#include <sstream>

#include "waragent/policy.hpp"

namespace waragent {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("missing prompt file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

std::string substitute(std::string text, const std::map<std::string, std::string>& fields) {
    for (const auto& [key, value] : fields) {
        std::string needle = "{" + key + "}";
        size_t pos = 0;
        while ((pos = text.find(needle, pos)) != std::string::npos) {
            text.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string join_lines(const std::vector<std::string>& lines, const std::string& when_empty) {
    if (lines.empty()) return when_empty;
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    lib.system_[0] = read_file(dir / "system_default.txt");
    lib.system_[1] = read_file(dir / "system_aggressive.txt");
    lib.system_[2] = read_file(dir / "system_conservative.txt");
    lib.step1_ = read_file(dir / "step1_allies.txt");
    lib.step2_ = read_file(dir / "step2_enemies.txt");
    lib.step3_[0] = read_file(dir / "step3_actions_default.txt");
    lib.step3_[1] = read_file(dir / "step3_actions_aggressive.txt");
    lib.step3_[2] = read_file(dir / "step3_actions_conservative.txt");
    lib.step4_ = read_file(dir / "step4_analysis.txt");
    lib.action_space_ = read_file(dir / "action_space.txt");
    return lib;
}

const std::string& PromptLibrary::system_text(Attitude attitude) const {
    return system_.at(static_cast<size_t>(attitude));
}

const std::string& PromptLibrary::stage_template(int stage, Attitude attitude) const {
    switch (stage) {
        case 0: return step1_;
        case 1: return step2_;
        case 2: return step3_.at(static_cast<size_t>(attitude));
        case 3: return step4_;
        default: throw std::out_of_range("prompt stage must be 0..3");
    }
}

const std::string& PromptLibrary::action_space_text() const { return action_space_; }

StagedPrompts build_prompts(const AgentContext& ctx, Attitude attitude,
                            const PromptLibrary& library) {
    std::map<std::string, std::string> fields = {
        {"country", ctx.country_name},
        {"round", std::to_string(ctx.round)},
        {"profile", ctx.profile_text},
        {"situation", ctx.situation},
        {"inbox", join_lines(ctx.inbox, "(nothing new)")},
        {"history", join_lines(ctx.history, "(no previous actions)")},
        {"action_space", library.action_space_text()},
    };

    StagedPrompts out;
    out.system = library.system_text(attitude);
    for (int stage = 0; stage < 4; ++stage)
        out.user[static_cast<size_t>(stage)] =
            substitute(library.stage_template(stage, attitude), fields);
    return out;
}

std::string build_correction_prompt(const std::string& feedback, const PromptLibrary& library) {
    (void)library;
    return "Your secretary reviewed the proposed actions and found problems:\n" + feedback +
           "\nRevise your plan and reply with the corrected full list of actions, one per line, "
           "each in exactly the form \"<country> has chosen to <action>\".";
}

}  // namespace waragent
