#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include "waragent/scenario.hpp"

namespace waragent {

struct AgentContext;  // policy.hpp

/// The staged guiding prompts and attitude system settings, loaded from a
/// versioned prompts directory rather than compiled in. Stage three (the
/// action-analysis step) varies with the attitude.
class PromptLibrary {
public:
    static PromptLibrary load(const std::filesystem::path& dir);

    const std::string& system_text(Attitude attitude) const;
    const std::string& stage_template(int stage, Attitude attitude) const;  // stage 0..3
    const std::string& action_space_text() const;

private:
    std::array<std::string, 3> system_;
    std::string step1_, step2_, step4_;
    std::array<std::string, 3> step3_;
    std::string action_space_;
};

/// The four user prompts of one proposal round plus the system message. The
/// caller appends each stage's model answer before sending the next stage.
struct StagedPrompts {
    std::string system;
    std::array<std::string, 4> user;
};

/// Fills the stage templates from the agent's context. Consumes only
/// view-derived material, so nothing an agent does not know can leak in.
StagedPrompts build_prompts(const AgentContext& context, Attitude attitude,
                            const PromptLibrary& library);

/// Single correction prompt carrying the secretary's feedback.
std::string build_correction_prompt(const std::string& feedback, const PromptLibrary& library);

}  // namespace waragent
