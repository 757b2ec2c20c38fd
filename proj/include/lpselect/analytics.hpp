#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

// Pair counts behind Kendall's tau-b for n paired observations.
struct TauCounts {
    std::int64_t pairs = 0;      // n(n-1)/2
    std::int64_t ties_x = 0;     // pairs tied in x (including joint ties)
    std::int64_t ties_y = 0;     // pairs tied in y (including joint ties)
    std::int64_t ties_xy = 0;    // pairs tied in both
    std::int64_t discordant = 0;

    std::int64_t concordant() const { return pairs - ties_x - ties_y + ties_xy - discordant; }
    bool operator==(const TauCounts&) const = default;
};

// O(n log n) pair counts (Knight's merge-sort method).
TauCounts tau_counts(std::span<const double> x, std::span<const double> y);

// tau-b from counts; equals (C - D) / (n(n-1)/2) when there are no ties.
// Throws Error(too_few) when either variable is constant.
double tau_b(const TauCounts& c);

double kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Kendall tau between two orderings of the same id set (positions are the
/// ranks). Throws Error(id_set_mismatch) if the sets differ and
/// Error(too_few) below two ids.
double kendall_tau(std::span<const std::string> rank_a, std::span<const std::string> rank_b);

/// |A ∩ B| / |A ∪ B| over distinct ids. Throws Error(empty_set) if either
/// side is empty.
double iou(std::span<const std::string> set_a, std::span<const std::string> set_b);

// The first round-half-up(fraction% * n) ids of a ranking.
std::vector<std::string> top_fraction(std::span<const std::string> ranking, double fraction_percent);

struct TransferReport {
    double kendall_tau = 0.0;
    std::size_t n_common = 0;
    std::map<double, double> iou_by_fraction;
    std::pair<std::string, std::string> source_tags;
};

// Tau over the two rankings plus IOU of their global top-f% prefixes.
TransferReport transfer_report(std::span<const std::string> rank_a, std::span<const std::string> rank_b,
                               std::span<const double> fractions, std::pair<std::string, std::string> tags);

struct SubsetStats {
    std::size_t n = 0;
    double mean_output_chars = 0.0;
    double mean_instruction_chars = 0.0;
    std::size_t empty_output_count = 0;
    std::map<int, std::size_t> per_cluster_counts;
};

// Number of UTF-8 code points.
std::size_t char_count(const std::string& s);

/// Character-length statistics over the manifest's samples. Means are 0
/// for an empty manifest. Throws Error(unknown_id) if an id is missing from
/// the corpus or the clustering.
SubsetStats subset_stats(std::span<const std::string> ids, std::span<const SampleRecord> corpus,
                         std::span<const ClusterAssignment> clusters);

std::string to_json(const TransferReport& r);
std::string to_json(const SubsetStats& s);
std::string iou_csv(const TransferReport& r);

}  // namespace lpsel
