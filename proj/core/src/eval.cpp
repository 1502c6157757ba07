#include "waragent/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "waragent/engine.hpp"

namespace waragent {

Partition partition_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= n || b < 0 || b >= n) throw std::invalid_argument("edge out of range");
        parent[find(a)] = find(b);
    }

    std::vector<std::vector<int>> by_root(n);
    for (int i = 0; i < n; ++i) by_root[find(i)].push_back(i);

    Partition p;
    p.n = n;
    for (auto& block : by_root)
        if (!block.empty()) p.blocks.push_back(std::move(block));
    std::sort(p.blocks.begin(), p.blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return p;
}

namespace {

std::vector<int> membership(const Partition& p) {
    std::vector<int> member(p.n, -1);
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        for (int e : p.blocks[b]) {
            if (e < 0 || e >= p.n || member[e] != -1)
                throw std::invalid_argument("partition blocks must be disjoint and in range");
            member[e] = static_cast<int>(b);
        }
    }
    for (int m : member)
        if (m == -1) throw std::invalid_argument("partition blocks must cover the set");
    return member;
}

double entropy(const Partition& p) {
    double h = 0.0;
    for (const auto& block : p.blocks) {
        double f = static_cast<double>(block.size()) / p.n;
        h -= f * std::log(f);
    }
    return h;
}

}  // namespace

MutualInformation mutual_information(const Partition& p, const Partition& q) {
    if (p.n != q.n) throw std::invalid_argument("nmi: partitions cover different sets");
    std::vector<int> mp = membership(p);
    std::vector<int> mq = membership(q);

    // Contingency table n_ij over block pairs.
    std::vector<std::vector<int>> table(p.blocks.size(), std::vector<int>(q.blocks.size(), 0));
    for (int e = 0; e < p.n; ++e) table[mp[e]][mq[e]]++;

    const double n = p.n;
    double mi = 0.0;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        for (size_t j = 0; j < q.blocks.size(); ++j) {
            int nij = table[i][j];
            if (nij == 0) continue;
            double pij = nij / n;
            double pi = p.blocks[i].size() / n;
            double qj = q.blocks[j].size() / n;
            mi += pij * std::log(pij / (pi * qj));
        }
    }
    return {mi, entropy(p), entropy(q)};
}

namespace {

std::vector<std::vector<int>> normalized_blocks(const Partition& p) {
    std::vector<std::vector<int>> blocks = p.blocks;
    for (auto& b : blocks) std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

}  // namespace

double nmi(const Partition& p, const Partition& q) {
    MutualInformation m = mutual_information(p, q);  // also validates the inputs
    if (normalized_blocks(p) == normalized_blocks(q)) return 1.0;
    double denom = m.h_p + m.h_q;
    if (denom <= 0.0) return 1.0;  // two trivial partitions are identical
    if (m.mi < 1e-12) return 0.0;
    double value = 2.0 * m.mi / denom;
    return std::clamp(value, 0.0, 1.0);
}

double jaccard(const std::set<std::pair<int, int>>& a, const std::set<std::pair<int, int>>& b) {
    if (a.empty() && b.empty()) return 1.0;
    int inter = 0;
    for (const auto& x : a) inter += b.contains(x) ? 1 : 0;
    int uni = static_cast<int>(a.size() + b.size()) - inter;
    return static_cast<double>(inter) / uni;
}

double jaccard(const std::set<int>& a, const std::set<int>& b) {
    if (a.empty() && b.empty()) return 1.0;
    int inter = 0;
    for (int x : a) inter += b.contains(x) ? 1 : 0;
    int uni = static_cast<int>(a.size() + b.size()) - inter;
    return static_cast<double>(inter) / uni;
}

namespace {

const RoundRecord& round_at(const RunLog& log, int round) {
    if (round < 1 || static_cast<size_t>(round) > log.rounds.size())
        throw std::invalid_argument("round " + std::to_string(round) +
                                    " is beyond the recorded log");
    return log.rounds[static_cast<size_t>(round) - 1];
}

int roster_index(const RunLog& log, const std::string& name) {
    for (size_t i = 0; i < log.roster_names.size(); ++i)
        if (log.roster_names[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("country '" + name + "' is not in the run roster");
}

std::pair<int, int> ordered(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

Partition alliance_partition(const RunLog& log, int round) {
    const RoundRecord& record = round_at(log, round);
    int n = static_cast<int>(log.roster_names.size());
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (record.board.codes[i][j] == 'M') edges.emplace_back(i, j);
    return partition_from_edges(n, edges);
}

std::set<std::pair<int, int>> war_pairs_through(const RunLog& log, int round) {
    round_at(log, round);  // bounds check
    std::set<std::pair<int, int>> pairs;
    for (const RoundRecord& record : log.rounds) {
        if (record.round > round) break;
        for (const AppliedEvent& event : record.applied) {
            if (event.action.kind != ActionKind::DeclareWar || event.status != "applied") continue;
            pairs.insert(ordered(roster_index(log, event.action.actor),
                                 roster_index(log, event.action.targets.at(0))));
        }
    }
    return pairs;
}

std::set<int> mobilized_through(const RunLog& log, int round) {
    const RoundRecord& record = round_at(log, round);
    std::set<int> out;
    for (size_t i = 0; i < record.mobilized.size(); ++i)
        if (record.mobilized[i]) out.insert(static_cast<int>(i));
    return out;
}

Scores evaluate_run(const RunLog& log, const GroundTruth& truth, const Roster& roster) {
    if (static_cast<size_t>(roster.size()) != log.roster_names.size())
        throw std::invalid_argument("ground truth roster does not match the run roster");
    for (const std::string& name : log.roster_names)
        if (!roster.find(name))
            throw std::invalid_argument("run country '" + name + "' unknown to ground truth roster");

    const int snapshot = truth.snapshot_round;
    Scores scores;
    scores.snapshot_round = snapshot;

    Partition sim = alliance_partition(log, snapshot);
    std::vector<std::pair<int, int>> truth_edges;
    for (const auto& [a, b] : truth.alliances)
        truth_edges.emplace_back(*roster.find(a), *roster.find(b));
    Partition gt = partition_from_edges(roster.size(), truth_edges);
    scores.alliance_mi = mutual_information(sim, gt);
    scores.alliance_nmi = nmi(sim, gt);

    if (!truth.war_declarations.empty()) {
        std::set<std::pair<int, int>> gt_wars;
        for (const auto& [a, b] : truth.war_declarations)
            gt_wars.insert(ordered(*roster.find(a), *roster.find(b)));
        scores.war_jaccard = jaccard(war_pairs_through(log, snapshot), gt_wars);
    }

    std::set<int> gt_mobilized;
    for (const std::string& name : truth.mobilized) gt_mobilized.insert(*roster.find(name));
    scores.mobilization_jaccard = jaccard(mobilized_through(log, snapshot), gt_mobilized);

    return scores;
}

AggregateScores aggregate(const std::vector<Scores>& scores) {
    if (scores.empty()) throw std::invalid_argument("aggregate: no runs to average");
    bool with_war = scores.front().war_jaccard.has_value();
    for (const Scores& s : scores)
        if (s.war_jaccard.has_value() != with_war)
            throw std::invalid_argument("aggregate: runs disagree on war evaluation");

    AggregateScores out;
    out.runs = static_cast<int>(scores.size());
    double alliance = 0.0, war = 0.0, mobilization = 0.0;
    for (const Scores& s : scores) {
        alliance += s.alliance_nmi;
        mobilization += s.mobilization_jaccard;
        if (with_war) war += *s.war_jaccard;
    }
    out.alliance_pct = 100.0 * alliance / out.runs;
    out.mobilization_pct = 100.0 * mobilization / out.runs;
    if (with_war) out.war_pct = 100.0 * war / out.runs;
    return out;
}

}  // namespace waragent
