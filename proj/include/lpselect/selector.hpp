#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

struct SelectionParams {
    SelectionMode mode = SelectionMode::topk_low;
    std::optional<double> fraction_percent;  // topk_low, clust_rand
    std::optional<Bucket> bucket;            // bucket
    std::uint64_t seed = 0;                  // clust_rand
    std::string ranking_source_tag;
    std::optional<Metric> metric;
    std::optional<int> epoch;
    std::optional<std::string> corpus_hash;
    std::string created_at = "1970-01-01T00:00:00Z";
};

// round-half-up(fraction_percent / 100 * cluster_size), capped at cluster_size.
int per_cluster_quota(int cluster_size, double fraction_percent);

// The global ascending ranking restricted to each cluster: result[c] holds
// cluster c's ids, hardest first. Throws Error(missing_rank) for a clustered
// id without a rank and Error(missing_cluster) for a ranked id without a
// cluster.
std::vector<std::vector<std::string>> split_ranking(std::span<const std::string> ranking,
                                                    std::span<const ClusterAssignment> clusters);

// First quota ids of each cluster's ranking, ordered by (cluster, rank).
SelectionManifest select_topk_low(std::span<const std::string> ranking, std::span<const ClusterAssignment> clusters,
                                  const SelectionParams& params);

struct BucketSizes {
    int low = 0;
    int mid = 0;
    int high = 0;
};

// Thirds of m, remainder to low first then mid.
BucketSizes bucket_sizes(int m);

struct BucketPartition {
    SelectionManifest low;
    SelectionManifest mid;
    SelectionManifest high;

    const SelectionManifest& operator[](Bucket b) const;
};

// Splits each cluster's ranking into contiguous low/mid/high thirds.
BucketPartition partition_buckets(std::span<const std::string> ranking, std::span<const ClusterAssignment> clusters,
                                  const SelectionParams& params);

/// Size-matched random baseline: from each cluster, draws the same quota
/// select_topk_low would take, uniformly without replacement. Each cluster
/// draws from its own substream of params.seed, so the result does not
/// depend on iteration order. Selected ids are listed per cluster in draw
/// order.
SelectionManifest select_clust_rand(std::span<const ClusterAssignment> clusters, const SelectionParams& params);

}  // namespace lpsel
