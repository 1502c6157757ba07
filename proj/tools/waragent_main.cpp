#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "waragent/engine.hpp"
#include "waragent/eval.hpp"
#include "waragent/hash.hpp"
#include "waragent/policy.hpp"

namespace fs = std::filesystem;
using namespace waragent;

namespace {

fs::path executable_dir() {
    std::error_code ec;
    fs::path self = fs::read_symlink("/proc/self/exe", ec);
    return ec ? fs::path{} : self.parent_path();
}

// Bare names resolve against the built-in data directories before the
// filesystem; explicit paths always win.
fs::path resolve_data_file(const std::string& kind, const std::string& name) {
    if (name.find('/') != std::string::npos || name.ends_with(".json")) return name;
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("WARAGENT_DATA")) roots.push_back(env);
    fs::path exe = executable_dir();
    if (!exe.empty()) {
        roots.push_back(exe / ".." / "share" / "waragent");
        roots.push_back(exe / "..");  // build tree: <root>/build/tools
        roots.push_back(exe / ".." / "..");
    }
    roots.push_back(fs::current_path());
    for (const fs::path& root : roots) {
        fs::path candidate = root / kind / (name + ".json");
        if (fs::exists(candidate)) return candidate;
    }
    throw LoadError("cannot resolve " + kind + " name '" + name + "'");
}

fs::path resolve_prompts_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("WARAGENT_PROMPTS")) return env;
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("WARAGENT_DATA")) roots.push_back(env);
    fs::path exe = executable_dir();
    if (!exe.empty()) {
        roots.push_back(exe / ".." / "share" / "waragent");
        roots.push_back(exe / "..");
        roots.push_back(exe / ".." / "..");
    }
    roots.push_back(fs::current_path());
    for (const fs::path& root : roots)
        if (fs::exists(root / "prompts" / "system_default.txt")) return root / "prompts";
    throw LoadError("cannot locate the prompts directory; pass --prompts");
}

struct RunOptions {
    std::string scenario = "wwi";
    std::string policy = "scripted";
    std::string script;
    std::string model = "gpt-4-1106-preview";
    std::string endpoint;
    std::string mode = "record";
    std::string out;
    std::string overlay;
    std::string trigger;
    std::string attitude;
    std::string cache_dir = "cache";
    std::string prompts_dir;
    int rounds = 10;
    int snapshot_round = 0;  // 0: default (6 clamped to rounds)
    std::uint64_t seed = 0;
    double temperature = 1.0;
    bool anonymize_scenario = false;
    bool stop_on_connectivity = false;
    int connectivity_window = 3;
    bool mobilization_private = false;
};

void add_run_options(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--scenario", opt.scenario, "Scenario name (wwi, wwii, wsp) or JSON path");
    cmd->add_option("--policy", opt.policy, "Agent policy")
        ->check(CLI::IsMember({"chat", "scripted", "random"}));
    cmd->add_option("--script", opt.script, "Script file for --policy scripted");
    cmd->add_option("--model", opt.model, "Chat model id");
    cmd->add_option("--endpoint", opt.endpoint, "Chat completion endpoint URL");
    cmd->add_option("--mode", opt.mode, "Chat cache mode")
        ->check(CLI::IsMember({"record", "replay"}));
    cmd->add_option("--rounds", opt.rounds, "Maximum rounds");
    cmd->add_option("--snapshot-round", opt.snapshot_round, "Evaluation snapshot round");
    cmd->add_option("--seed", opt.seed, "Master seed");
    cmd->add_option("--temperature", opt.temperature, "Chat sampling temperature");
    cmd->add_option("--out", opt.out, "Output run directory");
    cmd->add_option("--overlay", opt.overlay, "Overlay JSON applied before the run");
    cmd->add_option("--trigger", opt.trigger,
                    "Trigger override: 'null', a trigger name, or a JSON path");
    cmd->add_option("--attitude", opt.attitude, "Agent attitude")
        ->check(CLI::IsMember({"default", "aggressive", "conservative"}));
    cmd->add_option("--cache", opt.cache_dir, "Chat response cache directory");
    cmd->add_option("--prompts", opt.prompts_dir, "Prompts directory");
    cmd->add_flag("--anonymize", opt.anonymize_scenario, "Anonymize the scenario before running");
    cmd->add_flag("--stop-on-connectivity", opt.stop_on_connectivity,
                  "Stop once the relation graph is connected and frozen");
    cmd->add_option("--connectivity-window", opt.connectivity_window,
                    "Rounds the connected board must stay unchanged");
    cmd->add_flag("--mobilization-private", opt.mobilization_private,
                  "Keep General Mobilization events off the public channel");
}

struct PreparedRun {
    Scenario scenario;
    EngineConfig config;
    Attitude attitude = Attitude::Default;
    std::string overlay_digest;
};

PreparedRun prepare(const RunOptions& opt) {
    PreparedRun prepared;
    prepared.scenario = load_scenario(resolve_data_file("scenarios", opt.scenario));

    Overlay overlay;
    bool have_overlay = false;
    if (!opt.overlay.empty()) {
        overlay = load_overlay(resolve_data_file("overlays", opt.overlay));
        have_overlay = true;
    }
    if (!opt.trigger.empty()) {
        if (opt.trigger == "null") {
            overlay.trigger_override =
                TriggerEvent{"null", "Today is sunny, and nothing special happened."};
        } else {
            fs::path path = resolve_data_file("triggers", opt.trigger);
            std::ifstream in(path);
            if (!in) throw LoadError("cannot open trigger file '" + path.string() + "'");
            nlohmann::json j;
            in >> j;
            overlay.trigger_override =
                TriggerEvent{j.value("id", opt.trigger), j.at("text").get<std::string>()};
        }
        have_overlay = true;
    }
    if (have_overlay) {
        prepared.scenario = apply_overlay(prepared.scenario, overlay);
        prepared.overlay_digest = sha256_hex(overlay_to_json(overlay).dump());
        prepared.attitude = overlay.attitude;
    }
    if (!opt.attitude.empty()) prepared.attitude = attitude_from_name(opt.attitude);
    if (opt.anonymize_scenario) prepared.scenario = anonymize(prepared.scenario);

    prepared.config.max_rounds = opt.rounds;
    prepared.config.eval_snapshot_round =
        opt.snapshot_round > 0 ? opt.snapshot_round : std::min(6, opt.rounds);
    prepared.config.stop_on_connectivity = opt.stop_on_connectivity;
    prepared.config.connectivity_window = opt.connectivity_window;
    prepared.config.mobilization_public = !opt.mobilization_private;
    prepared.config.seed = opt.seed;
    prepared.config.validate();
    return prepared;
}

struct PolicyBundle {
    std::vector<std::shared_ptr<Policy>> policies;
    std::shared_ptr<ChatClient> client;      // kept alive for chat policies
    std::shared_ptr<PromptLibrary> prompts;  // likewise
};

PolicyBundle make_policies(const RunOptions& opt, const PreparedRun& prepared,
                           std::uint64_t seed) {
    PolicyBundle bundle;
    Roster roster = prepared.scenario.roster();

    if (opt.policy == "scripted") {
        if (opt.script.empty()) throw LoadError("--policy scripted needs --script");
        auto script = std::make_shared<Script>(Script::load(resolve_data_file("fixtures", opt.script)));
        std::vector<std::string> gaps = script->coverage_gaps(roster, prepared.config.max_rounds);
        if (!gaps.empty()) {
            std::string joined;
            for (const auto& g : gaps) joined += "\n  " + g;
            throw LoadError("script does not cover the requested run:" + joined);
        }
        for (int c = 0; c < roster.size(); ++c)
            bundle.policies.push_back(std::make_shared<ScriptedPolicy>(script, roster.name(c)));
    } else if (opt.policy == "random") {
        for (int c = 0; c < roster.size(); ++c)
            bundle.policies.push_back(std::make_shared<RandomPolicy>(seed, c));
    } else {
        ChatClientConfig client_config;
        client_config.endpoint = !opt.endpoint.empty()
                                     ? opt.endpoint
                                     : (std::getenv("WARAGENT_ENDPOINT")
                                            ? std::getenv("WARAGENT_ENDPOINT")
                                            : "");
        if (client_config.endpoint.empty() && opt.mode != "replay")
            throw LoadError("--policy chat needs --endpoint (or WARAGENT_ENDPOINT) in record mode");
        if (const char* key = std::getenv("WARAGENT_API_KEY")) client_config.api_key = key;
        client_config.mode = opt.mode == "replay" ? ChatMode::Replay : ChatMode::Record;
        client_config.cache_dir = opt.cache_dir;
        bundle.client = std::make_shared<ChatClient>(client_config);
        bundle.prompts = std::make_shared<PromptLibrary>(
            PromptLibrary::load(resolve_prompts_dir(opt.prompts_dir)));

        ChatPolicyConfig policy_config;
        policy_config.model = opt.model;
        policy_config.temperature = opt.temperature;
        policy_config.attitude = prepared.attitude;
        for (int c = 0; c < roster.size(); ++c)
            bundle.policies.push_back(std::make_shared<ChatModelPolicy>(
                *bundle.client, *bundle.prompts, policy_config, seed, c));
    }
    return bundle;
}

RunLog execute_run(const RunOptions& opt, const PreparedRun& prepared, std::uint64_t seed,
                   const fs::path& out_dir) {
    EngineConfig config = prepared.config;
    config.seed = seed;
    PolicyBundle bundle = make_policies(opt, prepared, seed);
    Engine engine(prepared.scenario, config, bundle.policies);
    engine.set_run_dir(out_dir);
    engine.set_overlay_digest(prepared.overlay_digest);
    engine.set_attitude(prepared.attitude);
    return engine.run();
}

fs::path default_out_dir(const RunOptions& opt, std::uint64_t seed) {
    return fs::path("runs") /
           (opt.scenario + "-" + opt.policy + "-s" + std::to_string(seed));
}

int cmd_run(const RunOptions& opt) {
    PreparedRun prepared = prepare(opt);
    fs::path out = opt.out.empty() ? default_out_dir(opt, opt.seed) : fs::path(opt.out);
    RunLog log = execute_run(opt, prepared, opt.seed, out);
    std::cout << "run complete: " << log.rounds.size() << " rounds, termination "
              << log.termination << "\n"
              << "output: " << out.string() << "\n";
    return 0;
}

int cmd_counterfactual(const RunOptions& opt, int runs, int jobs) {
    PreparedRun prepared = prepare(opt);
    fs::path out = opt.out.empty() ? fs::path("runs") / ("experiment-" + opt.scenario)
                                   : fs::path(opt.out);
    fs::create_directories(out);

    std::vector<fs::path> dirs;
    for (int k = 0; k < runs; ++k) {
        char name[16];
        std::snprintf(name, sizeof(name), "run_%03d", k + 1);
        dirs.push_back(out / name);
    }

    std::vector<std::string> terminations(runs);
    std::vector<std::exception_ptr> failures(runs);
    for (int base = 0; base < runs; base += std::max(1, jobs)) {
        std::vector<std::thread> batch;
        int end = std::min(runs, base + std::max(1, jobs));
        for (int k = base; k < end; ++k) {
            batch.emplace_back([&, k] {
                try {
                    RunLog log = execute_run(opt, prepared, opt.seed + k, dirs[k]);
                    terminations[k] = log.termination;
                } catch (...) {
                    failures[k] = std::current_exception();
                }
            });
        }
        for (auto& t : batch) t.join();
    }
    for (int k = 0; k < runs; ++k)
        if (failures[k]) std::rethrow_exception(failures[k]);

    nlohmann::json manifest;
    manifest["scenario"] = opt.scenario;
    manifest["overlay"] = opt.overlay;
    manifest["trigger"] = opt.trigger;
    manifest["attitude"] = attitude_name(prepared.attitude);
    manifest["overlay_digest"] = prepared.overlay_digest;
    nlohmann::json run_list = nlohmann::json::array();
    for (int k = 0; k < runs; ++k)
        run_list.push_back({{"dir", dirs[k].filename().string()},
                            {"seed", opt.seed + k},
                            {"termination", terminations[k]}});
    manifest["runs"] = run_list;
    std::ofstream manifest_out(out / "experiment.json");
    manifest_out << manifest.dump(2) << "\n";

    std::cout << "experiment complete: " << runs << " runs under " << out.string() << "\n";
    return 0;
}

std::string pct(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

int cmd_eval(std::vector<std::string> run_dirs, const std::string& glob,
             const std::string& ground_truth, int round_override, std::string report_path) {
    if (!glob.empty()) {
        // Single '*' wildcard over one path segment.
        size_t star = glob.find('*');
        if (star == std::string::npos) {
            run_dirs.push_back(glob);
        } else {
            fs::path parent = fs::path(glob.substr(0, star)).parent_path();
            std::string prefix = fs::path(glob.substr(0, star)).filename().string();
            std::string suffix = glob.substr(star + 1);
            if (parent.empty()) parent = ".";
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(parent)) {
                std::string name = entry.path().filename().string();
                if (name.size() >= prefix.size() + suffix.size() &&
                    name.rfind(prefix, 0) == 0 && name.ends_with(suffix) &&
                    fs::exists(entry.path() / "config.json"))
                    found.push_back(entry.path().string());
            }
            std::sort(found.begin(), found.end());
            run_dirs.insert(run_dirs.end(), found.begin(), found.end());
        }
    }
    if (run_dirs.empty()) throw LoadError("eval needs at least one --run directory or --glob");

    std::vector<RunLog> logs;
    for (const auto& dir : run_dirs) logs.push_back(load_run(dir));

    std::string truth_source = ground_truth.empty() ? logs.front().scenario_id : ground_truth;
    Scenario scenario = load_scenario(resolve_data_file("scenarios", truth_source));
    // An anonymized run needs the anonymized roster and ground truth.
    {
        Roster roster = scenario.roster();
        bool matches = true;
        for (const auto& name : logs.front().roster_names)
            if (!roster.find(name)) matches = false;
        if (!matches && scenario.deanonymized) scenario = anonymize(scenario);
    }
    GroundTruth truth = scenario.ground_truth;
    if (round_override > 0) truth.snapshot_round = round_override;
    Roster roster = scenario.roster();

    std::vector<Scores> all;
    for (const RunLog& log : logs) all.push_back(evaluate_run(log, truth, roster));
    AggregateScores agg = aggregate(all);
    bool with_war = agg.war_pct.has_value();

    auto row = [&](const std::string& label, double a, std::optional<double> w, double m) {
        std::cout << label;
        for (size_t pad = label.size(); pad < 40; ++pad) std::cout << ' ';
        std::cout << pct(a) << "\t" << (w ? pct(*w) : "-") << "\t" << pct(m) << "\n";
    };
    std::cout << "run";
    for (int pad = 3; pad < 40; ++pad) std::cout << ' ';
    std::cout << "alliance\twar declaration\tmobilization\n";
    for (size_t k = 0; k < logs.size(); ++k) {
        const Scores& s = all[k];
        row(fs::path(run_dirs[k]).filename().string(), 100.0 * s.alliance_nmi,
            s.war_jaccard ? std::optional<double>(100.0 * *s.war_jaccard) : std::nullopt,
            100.0 * s.mobilization_jaccard);
    }
    row("mean of " + std::to_string(agg.runs), agg.alliance_pct, agg.war_pct,
        agg.mobilization_pct);

    nlohmann::json report;
    report["ground_truth_scenario"] = scenario.id;
    report["snapshot_round"] = truth.snapshot_round;
    nlohmann::json per_run = nlohmann::json::array();
    for (size_t k = 0; k < logs.size(); ++k) {
        const Scores& s = all[k];
        nlohmann::json r = {{"run", run_dirs[k]},
                            {"alliance_nmi", s.alliance_nmi},
                            {"mobilization_jaccard", s.mobilization_jaccard},
                            {"raw_mi", s.alliance_mi.mi},
                            {"h_sim", s.alliance_mi.h_p},
                            {"h_truth", s.alliance_mi.h_q}};
        if (s.war_jaccard) r["war_jaccard"] = *s.war_jaccard;
        per_run.push_back(r);
    }
    report["runs"] = per_run;
    nlohmann::json agg_json = {{"runs", agg.runs},
                               {"alliance_pct", agg.alliance_pct},
                               {"mobilization_pct", agg.mobilization_pct}};
    if (with_war) agg_json["war_pct"] = *agg.war_pct;
    report["aggregate"] = agg_json;

    if (report_path.empty())
        report_path = logs.size() == 1 ? (fs::path(run_dirs[0]) / "eval.json").string()
                                       : "eval_report.json";
    std::ofstream out(report_path);
    out << report.dump(2) << "\n";
    std::cout << "report: " << report_path << "\n";
    return 0;
}

int cmd_render(const std::string& run_dir, int round, bool all, const std::string& out_dir) {
    RunLog log = load_run(run_dir);
    Roster roster = roster_from_log(log);

    auto emit = [&](const RoundRecord& record) {
        Board board = board_from_snapshot(record.board, roster);
        std::string grid = render_board(board, roster);
        std::string paragraph = translate_board(board, roster);
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream out(fs::path(out_dir) /
                              ("round_" + std::to_string(record.round) + ".txt"));
            out << grid << "\n" << paragraph << "\n";
        } else {
            std::cout << "# round " << record.round << "\n"
                      << grid << "\n"
                      << (paragraph.empty() ? "(no relations)" : paragraph) << "\n\n";
        }
    };

    if (all) {
        for (const RoundRecord& record : log.rounds) emit(record);
    } else {
        if (round < 1 || static_cast<size_t>(round) > log.rounds.size())
            throw LoadError("round " + std::to_string(round) + " is not in the log");
        emit(log.rounds[static_cast<size_t>(round) - 1]);
    }
    return 0;
}

int cmd_replay(const std::string& run_dir) {
    RunLog log = load_run(run_dir);
    if (auto mismatch = verify_runlog_replay(log)) {
        std::cerr << "replay mismatch: " << *mismatch << "\n";
        return 2;
    }
    std::cout << "replay OK: " << log.rounds.size()
              << " rounds reproduce every recorded board snapshot\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent simulation of historical international conflicts"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run_cmd = app.add_subcommand("run", "Execute one simulation run");
    add_run_options(run_cmd, run_opt);

    RunOptions cf_opt;
    int cf_runs = 3;
    int cf_jobs = 1;
    CLI::App* cf_cmd =
        app.add_subcommand("counterfactual", "Patched scenario, N seeded runs, one manifest");
    add_run_options(cf_cmd, cf_opt);
    cf_cmd->add_option("--runs", cf_runs, "Number of runs");
    cf_cmd->add_option("--jobs", cf_jobs, "Concurrent runs");

    std::vector<std::string> eval_dirs;
    std::string eval_glob, eval_truth, eval_report;
    int eval_round = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score runs against ground truth");
    eval_cmd->add_option("--run", eval_dirs, "Run directory (repeatable)");
    eval_cmd->add_option("--glob", eval_glob, "Run directory pattern with one '*'");
    eval_cmd->add_option("--ground-truth", eval_truth, "Scenario name or path for ground truth");
    eval_cmd->add_option("--round", eval_round, "Snapshot round override");
    eval_cmd->add_option("--report", eval_report, "Report JSON path");

    std::string render_dir, render_out;
    int render_round = 1;
    bool render_all = false;
    CLI::App* render_cmd = app.add_subcommand("render", "Board grids and translations");
    render_cmd->add_option("--run", render_dir, "Run directory")->required();
    render_cmd->add_option("--round", render_round, "Round to render");
    render_cmd->add_flag("--all", render_all, "Render every recorded round");
    render_cmd->add_option("--out", render_out, "Write files here instead of stdout");

    std::string replay_dir;
    CLI::App* replay_cmd = app.add_subcommand("replay", "Verify a run log replays exactly");
    replay_cmd->add_option("--run", replay_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) return cmd_run(run_opt);
        if (*cf_cmd) return cmd_counterfactual(cf_opt, cf_runs, cf_jobs);
        if (*eval_cmd) return cmd_eval(eval_dirs, eval_glob, eval_truth, eval_round, eval_report);
        if (*render_cmd) return cmd_render(render_dir, render_round, render_all, render_out);
        if (*replay_cmd) return cmd_replay(replay_dir);
    } catch (const ReplayMiss& e) {
        std::cerr << "error: ReplayMiss: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
