#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

// k = max(1, floor(n / min_avg)).
int auto_cluster_count(std::size_t n, int min_avg = 50);

struct EmbedResult {
    EmbeddingRecord record;
    bool zero = false;  // text was empty; vector is all zeros
};

// Signed feature hashing of byte trigrams over the non-empty fields of
// instruction, input and output (joined by '\n'), L2-normalized. Text
// shorter than three bytes hashes as a single gram. Requires dim >= 8.
EmbedResult fallback_embed(const SampleRecord& sample, int dim = 256, std::uint64_t seed = 0);

std::vector<EmbedResult> fallback_embed_all(std::span<const SampleRecord> corpus, int dim, std::uint64_t seed,
                                            int threads = 1);

struct ClusterConfig {
    std::optional<int> k;  // unset: auto_cluster_count(N, min_avg)
    int min_avg = 50;
    std::uint64_t seed = 0;
    int max_iters = 100;
    double conv_tol = 1e-6;
    int threads = 1;
};

struct KMeansResult {
    std::vector<ClusterAssignment> assignments;  // input order
    std::vector<std::vector<double>> centroids;  // k x d
    double inertia = 0.0;
    int iters_run = 0;
    // The final nearest-centroid pass moved nothing: centroids are the means
    // of their members. False when it still moved points (max_iters ran out
    // or conv_tol stopped early); centroids then lag by one update.
    bool converged = false;
    std::vector<double> inertia_history;  // after each Lloyd iteration
};

/// k-means over L2-normalized embeddings: k-means++ seeding from cfg.seed,
/// Lloyd iterations until the relative inertia improvement drops below
/// cfg.conv_tol, assignments stop changing, or cfg.max_iters is reached.
/// Empty clusters are reseeded at the point farthest from its centroid.
/// Labels are renumbered densely by first occurrence in input order.
///
/// Throws Error(too_few_points) if N < k, Error(dimension_mismatch) on
/// ragged input.
KMeansResult kmeans(std::span<const EmbeddingRecord> embeddings, const ClusterConfig& cfg);

// Copy of v scaled to unit L2 norm; zero vectors are returned unchanged.
std::vector<double> l2_normalized(std::span<const double> v);

}  // namespace lpsel
