#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "waragent/scenario.hpp"

namespace waragent {

struct RunLog;  // engine.hpp

/// Disjoint non-empty blocks of roster indices covering 0..n-1. Countries
/// without an alliance sit in singleton blocks.
struct Partition {
    int n = 0;
    std::vector<std::vector<int>> blocks;

    bool operator==(const Partition&) const = default;
};

/// Connected components of an undirected edge set over 0..n-1; isolated
/// vertices become singletons. Blocks and members are index-sorted.
Partition partition_from_edges(int n, const std::vector<std::pair<int, int>>& edges);

/// Normalized mutual information between two partitions of the same set:
/// natural logs, arithmetic-mean normalization 2*I/(H(p)+H(q)). Conventions:
/// two trivial (zero-entropy) partitions score 1.0; zero information with a
/// positive denominator scores 0.0. Throws on mismatched underlying sets.
double nmi(const Partition& p, const Partition& q);

/// Raw ingredients of the NMI score, kept so any normalization variant can
/// be recomputed from a report.
struct MutualInformation {
    double mi = 0.0;
    double h_p = 0.0;
    double h_q = 0.0;
};
MutualInformation mutual_information(const Partition& p, const Partition& q);

/// |a∩b| / |a∪b|; both empty scores 1.0.
double jaccard(const std::set<std::pair<int, int>>& a, const std::set<std::pair<int, int>>& b);
double jaccard(const std::set<int>& a, const std::set<int>& b);

struct Scores {
    double alliance_nmi = 0.0;
    std::optional<double> war_jaccard;  // absent when ground truth omits wars
    double mobilization_jaccard = 0.0;
    int snapshot_round = 0;
    MutualInformation alliance_mi;  // raw MI and entropies behind alliance_nmi
};

/// Partition of the roster by military alliances on the canonical board at
/// the end of the given round.
Partition alliance_partition(const RunLog& log, int round);

/// Cumulative unordered war pairs declared in rounds 1..round.
std::set<std::pair<int, int>> war_pairs_through(const RunLog& log, int round);

/// Countries mobilized by the end of the given round.
std::set<int> mobilized_through(const RunLog& log, int round);

/// Scores one run against ground truth at the ground truth's snapshot round.
Scores evaluate_run(const RunLog& log, const GroundTruth& truth, const Roster& roster);

/// Arithmetic means over runs, reported as percentages (two decimals in the
/// rendered table). All runs must agree on whether wars are evaluated.
struct AggregateScores {
    int runs = 0;
    double alliance_pct = 0.0;
    std::optional<double> war_pct;
    double mobilization_pct = 0.0;
};
AggregateScores aggregate(const std::vector<Scores>& scores);

}  // namespace waragent
