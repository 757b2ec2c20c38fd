#include "lpselect/corpus_io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <algorithm>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lpselect/error.hpp"

namespace lpsel {

using json = nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return in;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

// Calls fn(object, line_no) for each non-blank line.
template <class Fn>
void for_each_object(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(Errc::malformed_line, e.what(), line_no);
        }
        if (!obj.is_object()) {
            throw Error(Errc::malformed_line, "expected a JSON object", line_no);
        }
        fn(obj, line_no);
    }
    if (in.bad()) {
        throw IoError("read failure");
    }
}

const json& require(const json& obj, const char* field, std::size_t line_no) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        throw Error(Errc::missing_field, field, line_no);
    }
    return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line_no) {
    const json& v = require(obj, field, line_no);
    if (!v.is_string()) {
        throw Error(Errc::malformed_line, std::string("field '") + field + "' must be a string", line_no);
    }
    return v.get<std::string>();
}

std::string require_id(const json& obj, std::size_t line_no) {
    std::string id = require_string(obj, "id", line_no);
    if (id.empty()) {
        throw Error(Errc::malformed_line, "field 'id' must be non-empty", line_no);
    }
    return id;
}

std::vector<double> require_reals(const json& obj, const char* field, std::size_t line_no) {
    const json& v = require(obj, field, line_no);
    if (!v.is_array()) {
        throw Error(Errc::malformed_line, std::string("field '") + field + "' must be an array", line_no);
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw Error(Errc::malformed_line, std::string("field '") + field + "' must hold numbers", line_no);
        }
        out.push_back(x.get<double>());
    }
    return out;
}

std::int64_t require_int(const json& obj, const char* field, std::size_t line_no) {
    const json& v = require(obj, field, line_no);
    if (!v.is_number_integer()) {
        throw Error(Errc::malformed_line, std::string("field '") + field + "' must be an integer", line_no);
    }
    return v.get<std::int64_t>();
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& id, std::size_t line_no) {
    if (!seen.insert(id).second) {
        throw Error(Errc::duplicate_id, id, line_no);
    }
}

// Rethrows validation errors with the file name in front.
template <class Fn>
auto with_path(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), path + (e.detail().empty() ? "" : ": " + e.detail()), e.line());
    }
}

std::string dump(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

template <class T>
void write_lines(std::ostream& out, std::span<const T> items) {
    for (const auto& item : items) {
        out << canonical_line(item) << '\n';
    }
    if (!out) {
        throw IoError("write failure");
    }
}

json manifest_json(const SelectionManifest& m) {
    json params = json::object();
    params["mode"] = to_string(m.params.mode);
    params["metric"] = m.params.metric ? json(to_string(*m.params.metric)) : json(nullptr);
    params["epoch"] = m.params.epoch ? json(*m.params.epoch) : json(nullptr);
    params["fraction_percent"] = m.params.fraction_percent ? json(*m.params.fraction_percent) : json(nullptr);
    params["bucket"] = m.params.bucket ? json(to_string(*m.params.bucket)) : json(nullptr);
    params["seed"] = m.params.seed ? json(*m.params.seed) : json(nullptr);
    params["ranking_source_tag"] = m.params.ranking_source_tag;
    params["corpus_hash"] = m.params.corpus_hash ? json(*m.params.corpus_hash) : json(nullptr);
    json doc = json::object();
    doc["ids"] = m.ids;
    doc["params"] = std::move(params);
    doc["created_at"] = m.created_at;
    return doc;
}

}  // namespace

std::vector<SampleRecord> read_corpus(std::istream& in) {
    std::vector<SampleRecord> out;
    std::unordered_set<std::string> seen;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        SampleRecord r;
        r.id = require_id(obj, line_no);
        r.instruction = require_string(obj, "instruction", line_no);
        // Records without an input field get an empty input.
        if (obj.contains("input")) {
            r.input = require_string(obj, "input", line_no);
        }
        r.output = require_string(obj, "output", line_no);
        check_unique(seen, r.id, line_no);
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<SampleRecord> load_corpus(const std::string& path) {
    auto in = open_input(path);
    return with_path(path, [&] { return read_corpus(in); });
}

TraceTable read_traces(std::istream& in, const std::vector<SampleRecord>* corpus) {
    std::unordered_set<std::string> corpus_ids;
    if (corpus != nullptr) {
        for (const auto& r : *corpus) {
            corpus_ids.insert(r.id);
        }
    }
    TraceTable table;
    std::unordered_set<std::string> seen;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        PerplexityTrace t;
        t.id = require_id(obj, line_no);
        t.ppl = require_reals(obj, "ppl", line_no);
        if (t.ppl.size() < 2) {
            throw Error(Errc::malformed_line, "ppl needs at least two entries (P_0 and P_1)", line_no);
        }
        for (double p : t.ppl) {
            if (!std::isfinite(p) || p <= 0.0) {
                throw Error(Errc::non_positive_perplexity, t.id, line_no);
            }
        }
        if (corpus != nullptr && !corpus_ids.contains(t.id)) {
            throw Error(Errc::unknown_id, t.id, line_no);
        }
        if (table.traces.empty()) {
            table.epochs = t.epochs();
        } else if (t.epochs() != table.epochs) {
            throw Error(Errc::inconsistent_epoch_count,
                        t.id + " has " + std::to_string(t.ppl.size()) + " entries, expected " +
                            std::to_string(table.epochs + 1),
                        line_no);
        }
        check_unique(seen, t.id, line_no);
        table.traces.push_back(std::move(t));
    });
    return table;
}

TraceTable load_traces(const std::string& path, const std::vector<SampleRecord>* corpus) {
    auto in = open_input(path);
    return with_path(path, [&] { return read_traces(in, corpus); });
}

std::vector<EmbeddingRecord> read_embeddings(std::istream& in) {
    std::vector<EmbeddingRecord> out;
    std::unordered_set<std::string> seen;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        EmbeddingRecord e;
        e.id = require_id(obj, line_no);
        e.vec = require_reals(obj, "vec", line_no);
        if (e.vec.empty()) {
            throw Error(Errc::malformed_line, "vec must be non-empty", line_no);
        }
        for (double x : e.vec) {
            if (!std::isfinite(x)) {
                throw Error(Errc::malformed_line, "vec entries must be finite", line_no);
            }
        }
        if (!out.empty() && e.vec.size() != out.front().vec.size()) {
            throw Error(Errc::dimension_mismatch,
                        e.id + " has dimension " + std::to_string(e.vec.size()) + ", expected " +
                            std::to_string(out.front().vec.size()),
                        line_no);
        }
        check_unique(seen, e.id, line_no);
        out.push_back(std::move(e));
    });
    return out;
}

std::vector<EmbeddingRecord> load_embeddings(const std::string& path) {
    auto in = open_input(path);
    return with_path(path, [&] { return read_embeddings(in); });
}

std::vector<ClusterAssignment> read_clusters(std::istream& in) {
    std::vector<ClusterAssignment> out;
    std::unordered_set<std::string> seen;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        ClusterAssignment a;
        a.id = require_id(obj, line_no);
        auto c = require_int(obj, "cluster", line_no);
        if (c < 0 || c > std::numeric_limits<int>::max()) {
            throw Error(Errc::malformed_line, "cluster must be a non-negative int", line_no);
        }
        a.cluster = static_cast<int>(c);
        check_unique(seen, a.id, line_no);
        out.push_back(std::move(a));
    });
    const int k = cluster_count(out);
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    for (const auto& a : out) {
        used[static_cast<std::size_t>(a.cluster)] = 1;
    }
    for (int c = 0; c < k; ++c) {
        if (used[static_cast<std::size_t>(c)] == 0) {
            throw Error(Errc::malformed_line, "cluster indices are not dense: " + std::to_string(c) + " is unused");
        }
    }
    return out;
}

std::vector<ClusterAssignment> load_clusters(const std::string& path) {
    auto in = open_input(path);
    return with_path(path, [&] { return read_clusters(in); });
}

std::vector<ScoreRecord> read_scores(std::istream& in) {
    std::vector<ScoreRecord> out;
    std::unordered_set<std::string> seen;
    for_each_object(in, [&](const json& obj, std::size_t line_no) {
        ScoreRecord s;
        s.id = require_id(obj, line_no);
        try {
            s.metric = parse_metric(require_string(obj, "metric", line_no));
        } catch (const Error& e) {
            throw Error(Errc::malformed_line, e.detail(), line_no);
        }
        auto epoch = require_int(obj, "epoch", line_no);
        if (epoch < 1 || epoch > std::numeric_limits<int>::max()) {
            throw Error(Errc::malformed_line, "epoch must be a positive integer", line_no);
        }
        s.epoch = static_cast<int>(epoch);
        const json& v = require(obj, "value", line_no);
        if (!v.is_number()) {
            throw Error(Errc::malformed_line, "value must be a number", line_no);
        }
        s.value = v.get<double>();
        const json& d = require(obj, "degenerate", line_no);
        if (!d.is_boolean()) {
            throw Error(Errc::malformed_line, "degenerate must be a boolean", line_no);
        }
        s.degenerate = d.get<bool>();
        if (!seen.insert(s.id).second) {
            throw Error(Errc::duplicate_score, s.id, line_no);
        }
        out.push_back(std::move(s));
    });
    return out;
}

std::vector<ScoreRecord> load_scores(const std::string& path) {
    auto in = open_input(path);
    return with_path(path, [&] { return read_scores(in); });
}

SelectionManifest parse_manifest(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::malformed_line, e.what());
    }
    if (!doc.is_object()) {
        throw Error(Errc::malformed_line, "manifest must be a JSON object");
    }
    SelectionManifest m;
    try {
        m.ids = doc.at("ids").get<std::vector<std::string>>();
        m.created_at = doc.at("created_at").get<std::string>();
        const json& p = doc.at("params");
        m.params.mode = parse_mode(p.at("mode").get<std::string>());
        auto opt = [&](const char* key) -> const json* {
            auto it = p.find(key);
            return (it == p.end() || it->is_null()) ? nullptr : &*it;
        };
        if (auto* v = opt("metric")) m.params.metric = parse_metric(v->get<std::string>());
        if (auto* v = opt("epoch")) m.params.epoch = v->get<int>();
        if (auto* v = opt("fraction_percent")) m.params.fraction_percent = v->get<double>();
        if (auto* v = opt("bucket")) m.params.bucket = parse_bucket(v->get<std::string>());
        if (auto* v = opt("seed")) m.params.seed = v->get<std::uint64_t>();
        if (auto* v = opt("ranking_source_tag")) m.params.ranking_source_tag = v->get<std::string>();
        if (auto* v = opt("corpus_hash")) m.params.corpus_hash = v->get<std::string>();
    } catch (const json::exception& e) {
        throw Error(Errc::missing_field, e.what());
    }
    validate_manifest(m);
    return m;
}

SelectionManifest load_manifest(const std::string& path) {
    const std::string text = read_file(path);
    return with_path(path, [&] { return parse_manifest(text); });
}

std::string canonical_line(const SampleRecord& r) {
    return dump(json{{"id", r.id}, {"instruction", r.instruction}, {"input", r.input}, {"output", r.output}});
}

std::string canonical_line(const PerplexityTrace& t) {
    return dump(json{{"id", t.id}, {"ppl", t.ppl}});
}

std::string canonical_line(const EmbeddingRecord& e) {
    return dump(json{{"id", e.id}, {"vec", e.vec}});
}

std::string canonical_line(const ClusterAssignment& a) {
    return dump(json{{"id", a.id}, {"cluster", a.cluster}});
}

std::string canonical_line(const ScoreRecord& s) {
    return dump(json{{"id", s.id},
                     {"metric", to_string(s.metric)},
                     {"epoch", s.epoch},
                     {"value", s.value},
                     {"degenerate", s.degenerate}});
}

void write_corpus(std::ostream& out, std::span<const SampleRecord> records) { write_lines(out, records); }
void write_traces(std::ostream& out, std::span<const PerplexityTrace> traces) { write_lines(out, traces); }
void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> e) { write_lines(out, e); }
void write_clusters(std::ostream& out, std::span<const ClusterAssignment> a) { write_lines(out, a); }
void write_scores(std::ostream& out, std::span<const ScoreRecord> scores) { write_lines(out, scores); }

void validate_manifest(const SelectionManifest& manifest) {
    std::unordered_set<std::string> seen;
    for (const auto& id : manifest.ids) {
        if (!seen.insert(id).second) {
            throw Error(Errc::duplicate_id, id);
        }
    }
    const auto& p = manifest.params;
    const bool wants_fraction = p.mode != SelectionMode::bucket;
    if (wants_fraction != p.fraction_percent.has_value() || wants_fraction == p.bucket.has_value()) {
        throw Error(Errc::invalid_argument,
                    std::string("mode ") + to_string(p.mode) + " takes " +
                        (wants_fraction ? "fraction_percent and no bucket" : "bucket and no fraction_percent"));
    }
}

std::string manifest_to_json(const SelectionManifest& manifest) {
    validate_manifest(manifest);
    return manifest_json(manifest).dump(2) + "\n";
}

void write_manifest(const SelectionManifest& manifest, const std::string& path) {
    write_file(path, manifest_to_json(manifest));
}

std::string corpus_hash(std::span<const SampleRecord> corpus) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 unavailable");
    }
    std::string line;
    for (const auto& r : corpus) {
        line = canonical_line(r);
        line.push_back('\n');
        EVP_DigestUpdate(ctx.get(), line.data(), line.size());
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    hex << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) {
        const unsigned char b = digest[i];
        hex << std::setw(2) << static_cast<int>(b);
    }
    return hex.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

std::string read_file(const std::string& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read from '" + path + "' failed");
    }
    return ss.str();
}

std::unordered_map<std::string, int> cluster_index(std::span<const ClusterAssignment> assignments) {
    std::unordered_map<std::string, int> out;
    out.reserve(assignments.size());
    for (const auto& a : assignments) {
        out.emplace(a.id, a.cluster);
    }
    return out;
}

int cluster_count(std::span<const ClusterAssignment> assignments) {
    int k = 0;
    for (const auto& a : assignments) {
        k = std::max(k, a.cluster + 1);
    }
    return k;
}

Metric parse_metric(const std::string& name) {
    if (name == "lp") return Metric::lp;
    if (name == "lp_app" || name == "lp-app") return Metric::lp_app;
    throw Error(Errc::invalid_argument, "unknown metric '" + name + "'");
}

SelectionMode parse_mode(const std::string& name) {
    if (name == "topk_low" || name == "topk-low") return SelectionMode::topk_low;
    if (name == "bucket") return SelectionMode::bucket;
    if (name == "clust_rand" || name == "clust-rand") return SelectionMode::clust_rand;
    throw Error(Errc::invalid_argument, "unknown selection mode '" + name + "'");
}

Bucket parse_bucket(const std::string& name) {
    if (name == "low") return Bucket::low;
    if (name == "mid") return Bucket::mid;
    if (name == "high") return Bucket::high;
    throw Error(Errc::invalid_argument, "unknown bucket '" + name + "'");
}

const char* to_string(Metric m) { return m == Metric::lp ? "lp" : "lp_app"; }

const char* to_string(SelectionMode m) {
    switch (m) {
        case SelectionMode::topk_low: return "topk_low";
        case SelectionMode::bucket: return "bucket";
        case SelectionMode::clust_rand: return "clust_rand";
    }
    return "?";
}

const char* to_string(Bucket b) {
    switch (b) {
        case Bucket::low: return "low";
        case Bucket::mid: return "mid";
        case Bucket::high: return "high";
    }
    return "?";
}

}  // namespace lpsel
