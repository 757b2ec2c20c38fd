#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lpsel {

struct SampleRecord {
    std::string id;
    std::string instruction;
    std::string input;
    std::string output;

    bool operator==(const SampleRecord&) const = default;
};

// Perplexity at epoch boundaries: ppl[0] before training, ppl[i] after epoch i.
struct PerplexityTrace {
    std::string id;
    std::vector<double> ppl;

    int epochs() const { return static_cast<int>(ppl.size()) - 1; }
    bool operator==(const PerplexityTrace&) const = default;
};

// A set of traces sharing one epoch count, in file order.
struct TraceTable {
    std::vector<PerplexityTrace> traces;
    int epochs = 0;
};

enum class Metric { lp, lp_app };

struct ScoreRecord {
    std::string id;
    Metric metric = Metric::lp;
    int epoch = 1;
    double value = 0.0;
    bool degenerate = false;

    bool operator==(const ScoreRecord&) const = default;
};

struct EmbeddingRecord {
    std::string id;
    std::vector<double> vec;

    bool operator==(const EmbeddingRecord&) const = default;
};

struct ClusterAssignment {
    std::string id;
    int cluster = 0;

    bool operator==(const ClusterAssignment&) const = default;
};

enum class SelectionMode { topk_low, bucket, clust_rand };
enum class Bucket { low, mid, high };

struct ManifestParams {
    SelectionMode mode = SelectionMode::topk_low;
    std::optional<Metric> metric;
    std::optional<int> epoch;
    std::optional<double> fraction_percent;
    std::optional<Bucket> bucket;
    std::optional<std::uint64_t> seed;
    std::string ranking_source_tag;
    std::optional<std::string> corpus_hash;

    bool operator==(const ManifestParams&) const = default;
};

struct SelectionManifest {
    std::vector<std::string> ids;
    ManifestParams params;
    std::string created_at = "1970-01-01T00:00:00Z";

    bool operator==(const SelectionManifest&) const = default;
};

const char* to_string(Metric m);
const char* to_string(SelectionMode m);
const char* to_string(Bucket b);

}  // namespace lpsel
