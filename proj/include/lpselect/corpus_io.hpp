#pragma once

// On-disk schemas. Everything except manifests is UTF-8 JSONL, one object
// per line:
//
//   corpus      {"id": str, "instruction": str, "input": str, "output": str}
//   trace       {"id": str, "ppl": [float, ...]}            ppl[0] = P_0
//   embedding   {"id": str, "vec": [float, ...]}
//   assignment  {"id": str, "cluster": int}
//   score       {"id": str, "metric": "lp"|"lp_app", "epoch": int,
//                "value": float, "degenerate": bool}
//
// Emitters write canonical lines (sorted keys, shortest round-trip floats),
// so emitting the same records twice is byte-identical. Blank lines are
// skipped on load; any other malformed line rejects the whole file.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

std::vector<SampleRecord> load_corpus(const std::string& path);
std::vector<SampleRecord> read_corpus(std::istream& in);

// Trace ids are validated against `corpus` when one is given.
TraceTable load_traces(const std::string& path, const std::vector<SampleRecord>* corpus = nullptr);
TraceTable read_traces(std::istream& in, const std::vector<SampleRecord>* corpus = nullptr);

std::vector<EmbeddingRecord> load_embeddings(const std::string& path);
std::vector<EmbeddingRecord> read_embeddings(std::istream& in);

// Cluster indices must be dense in [0, K).
std::vector<ClusterAssignment> load_clusters(const std::string& path);
std::vector<ClusterAssignment> read_clusters(std::istream& in);

std::vector<ScoreRecord> load_scores(const std::string& path);
std::vector<ScoreRecord> read_scores(std::istream& in);

SelectionManifest load_manifest(const std::string& path);
SelectionManifest parse_manifest(const std::string& text);

std::string canonical_line(const SampleRecord& r);
std::string canonical_line(const PerplexityTrace& t);
std::string canonical_line(const EmbeddingRecord& e);
std::string canonical_line(const ClusterAssignment& a);
std::string canonical_line(const ScoreRecord& s);

void write_corpus(std::ostream& out, std::span<const SampleRecord> records);
void write_traces(std::ostream& out, std::span<const PerplexityTrace> traces);
void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> embeddings);
void write_clusters(std::ostream& out, std::span<const ClusterAssignment> assignments);
void write_scores(std::ostream& out, std::span<const ScoreRecord> scores);

// Throws Error(duplicate_id) before anything is written if ids repeat.
std::string manifest_to_json(const SelectionManifest& manifest);
void write_manifest(const SelectionManifest& manifest, const std::string& path);
void validate_manifest(const SelectionManifest& manifest);

// SHA-256 over the concatenated canonical corpus lines (newline-terminated),
// lowercase hex.
std::string corpus_hash(std::span<const SampleRecord> corpus);

// Writes `content` to `path`, throwing IoError on failure.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::unordered_map<std::string, int> cluster_index(std::span<const ClusterAssignment> assignments);
int cluster_count(std::span<const ClusterAssignment> assignments);

Metric parse_metric(const std::string& name);
SelectionMode parse_mode(const std::string& name);
Bucket parse_bucket(const std::string& name);

}  // namespace lpsel
