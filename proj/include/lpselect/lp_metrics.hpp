#pragma once

#include <span>
#include <string>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

struct MetricConfig {
    Metric metric = Metric::lp;
    int epoch = 1;
    double denom_tolerance = 1e-9;
};

/// Learning percentage of epoch `epoch`: the share of the total perplexity
/// drop (P_0 - P_n) that happened during that epoch,
///
///     (P_{i-1} - P_i) / (P_0 - P_n).
///
/// When |P_0 - P_n| < tol the sample never moved; it is scored 1.0 (easiest)
/// and flagged degenerate. Negative values and values above 1 are returned
/// as is. Throws Error(epoch_out_of_range) unless 1 <= epoch <= n.
ScoreRecord lp_exact(const PerplexityTrace& trace, int epoch, double tol = 1e-9);

/// Single-run approximation that treats P_n as the same for every sample:
///
///     (P_{i-1} - P_i) / P_0.
///
/// Never degenerate since P_0 > 0.
ScoreRecord lp_approx(const PerplexityTrace& trace, int epoch);

ScoreRecord score_trace(const PerplexityTrace& trace, const MetricConfig& cfg);

// Scores every trace, output in input order. Any thread count gives the same result.
std::vector<ScoreRecord> score_traces(std::span<const PerplexityTrace> traces, const MetricConfig& cfg,
                                      int threads = 1);

/// Ids ordered by (value ascending, id ascending); first is hardest.
/// Throws Error(duplicate_score) if an id is scored twice.
std::vector<std::string> rank_ascending(std::span<const ScoreRecord> scores);

}  // namespace lpsel
