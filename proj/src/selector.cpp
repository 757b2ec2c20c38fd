#include "lpselect/selector.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "lpselect/corpus_io.hpp"
#include "lpselect/error.hpp"
#include "lpselect/random.hpp"

namespace lpsel {

namespace {

void check_fraction(const std::optional<double>& fraction) {
    if (!fraction || !(*fraction > 0.0) || *fraction > 100.0) {
        throw Error(Errc::invalid_argument, "fraction_percent must be in (0, 100]");
    }
}

SelectionManifest make_manifest(const SelectionParams& p, SelectionMode mode) {
    SelectionManifest m;
    m.params.mode = mode;
    m.params.metric = p.metric;
    m.params.epoch = p.epoch;
    m.params.ranking_source_tag = p.ranking_source_tag;
    m.params.corpus_hash = p.corpus_hash;
    m.created_at = p.created_at;
    if (mode == SelectionMode::bucket) {
        m.params.bucket = p.bucket;
    } else {
        m.params.fraction_percent = p.fraction_percent;
    }
    if (mode == SelectionMode::clust_rand) {
        m.params.seed = p.seed;
    }
    return m;
}

std::vector<std::vector<std::string>> group_by_cluster(std::span<const ClusterAssignment> clusters) {
    std::vector<std::vector<std::string>> groups(static_cast<std::size_t>(cluster_count(clusters)));
    for (const auto& a : clusters) {
        if (a.cluster < 0) {
            throw Error(Errc::invalid_argument, a.id + " has a negative cluster index");
        }
        groups[static_cast<std::size_t>(a.cluster)].push_back(a.id);
    }
    return groups;
}

}  // namespace

int per_cluster_quota(int cluster_size, double fraction_percent) {
    if (cluster_size < 1) {
        throw Error(Errc::invalid_argument, "cluster size must be >= 1");
    }
    const double exact = fraction_percent * static_cast<double>(cluster_size) / 100.0;
    const auto quota = static_cast<long long>(std::floor(exact + 0.5));
    return static_cast<int>(std::clamp<long long>(quota, 0, cluster_size));
}

std::vector<std::vector<std::string>> split_ranking(std::span<const std::string> ranking,
                                                    std::span<const ClusterAssignment> clusters) {
    const auto index = cluster_index(clusters);
    if (index.size() != clusters.size()) {
        throw Error(Errc::duplicate_id, "cluster assignment lists an id twice");
    }
    std::vector<std::vector<std::string>> per_cluster(static_cast<std::size_t>(cluster_count(clusters)));
    std::unordered_map<std::string_view, bool> ranked;
    ranked.reserve(ranking.size());
    for (const auto& id : ranking) {
        auto it = index.find(id);
        if (it == index.end()) {
            throw Error(Errc::missing_cluster, id);
        }
        if (!ranked.emplace(id, true).second) {
            throw Error(Errc::duplicate_score, id);
        }
        per_cluster[static_cast<std::size_t>(it->second)].push_back(id);
    }
    if (ranked.size() != clusters.size()) {
        for (const auto& a : clusters) {
            if (!ranked.contains(a.id)) {
                throw Error(Errc::missing_rank, a.id);
            }
        }
    }
    return per_cluster;
}

SelectionManifest select_topk_low(std::span<const std::string> ranking, std::span<const ClusterAssignment> clusters,
                                  const SelectionParams& params) {
    check_fraction(params.fraction_percent);
    auto per_cluster = split_ranking(ranking, clusters);
    auto m = make_manifest(params, SelectionMode::topk_low);
    for (const auto& ids : per_cluster) {
        if (ids.empty()) {
            continue;
        }
        const int quota = per_cluster_quota(static_cast<int>(ids.size()), *params.fraction_percent);
        m.ids.insert(m.ids.end(), ids.begin(), ids.begin() + quota);
    }
    return m;
}

BucketSizes bucket_sizes(int m) {
    const int q = m / 3;
    const int r = m % 3;
    return {q + (r >= 1 ? 1 : 0), q + (r >= 2 ? 1 : 0), q};
}

const SelectionManifest& BucketPartition::operator[](Bucket b) const {
    switch (b) {
        case Bucket::low: return low;
        case Bucket::mid: return mid;
        case Bucket::high: break;
    }
    return high;
}

BucketPartition partition_buckets(std::span<const std::string> ranking, std::span<const ClusterAssignment> clusters,
                                  const SelectionParams& params) {
    auto per_cluster = split_ranking(ranking, clusters);
    BucketPartition out;
    SelectionParams p = params;
    p.bucket = Bucket::low;
    out.low = make_manifest(p, SelectionMode::bucket);
    p.bucket = Bucket::mid;
    out.mid = make_manifest(p, SelectionMode::bucket);
    p.bucket = Bucket::high;
    out.high = make_manifest(p, SelectionMode::bucket);
    for (const auto& ids : per_cluster) {
        const auto sizes = bucket_sizes(static_cast<int>(ids.size()));
        auto first = ids.begin();
        auto mid = first + sizes.low;
        auto high = mid + sizes.mid;
        out.low.ids.insert(out.low.ids.end(), first, mid);
        out.mid.ids.insert(out.mid.ids.end(), mid, high);
        out.high.ids.insert(out.high.ids.end(), high, ids.end());
    }
    return out;
}

SelectionManifest select_clust_rand(std::span<const ClusterAssignment> clusters, const SelectionParams& params) {
    check_fraction(params.fraction_percent);
    auto groups = group_by_cluster(clusters);
    auto m = make_manifest(params, SelectionMode::clust_rand);
    for (std::size_t c = 0; c < groups.size(); ++c) {
        auto& ids = groups[c];
        if (ids.empty()) {
            continue;
        }
        const int quota = per_cluster_quota(static_cast<int>(ids.size()), *params.fraction_percent);
        Rng rng(substream_seed(params.seed, c));
        // Partial Fisher-Yates: the first `quota` slots become the draw.
        for (std::size_t i = 0; i < static_cast<std::size_t>(quota); ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_below(rng, ids.size() - i));
            std::swap(ids[i], ids[j]);
        }
        m.ids.insert(m.ids.end(), ids.begin(), ids.begin() + quota);
    }
    return m;
}

}  // namespace lpsel
