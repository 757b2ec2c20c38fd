#include "lpselect/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpselect/analytics.hpp"
#include "lpselect/corpus_io.hpp"
#include "lpselect/diversity.hpp"
#include "lpselect/error.hpp"
#include "lpselect/lp_metrics.hpp"
#include "lpselect/parallel.hpp"
#include "lpselect/ref_trainer.hpp"
#include "lpselect/selector.hpp"

namespace lpsel {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kCorpusSchema = R"(corpus JSONL: {"id": str, "instruction": str, "input": str, "output": str})";
constexpr const char* kTraceSchema = R"(trace JSONL: {"id": str, "ppl": [P_0, P_1, ..., P_n]})";
constexpr const char* kEmbeddingSchema = R"(embedding JSONL: {"id": str, "vec": [float, ...]})";
constexpr const char* kClusterSchema = R"(cluster JSONL: {"id": str, "cluster": int})";
constexpr const char* kScoreSchema =
    R"(score JSONL: {"id": str, "metric": "lp"|"lp_app", "epoch": int, "value": float, "degenerate": bool})";
constexpr const char* kManifestSchema =
    R"(manifest JSON: {"ids": [str], "params": {"mode", "metric", "epoch", "fraction_percent"|"bucket", "seed", "ranking_source_tag", "corpus_hash"}, "created_at": str})";

struct Globals {
    std::uint64_t seed = 0;
    std::string threads;
    std::string out;
    std::string format;
    bool force = false;
};

// Output sink honoring --out / --force; falls back to the data stream.
class Sink {
public:
    Sink(const Globals& g, std::ostream& stdout_stream) : g_(g), stdout_(stdout_stream) {}

    void check(const std::string& path) const {
        if (path.empty()) {
            return;
        }
        const fs::path p(path);
        if (fs::exists(p) && !g_.force) {
            throw Error(Errc::invalid_argument, "refusing to overwrite '" + path + "' without --force");
        }
        const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
        if (!fs::is_directory(parent)) {
            throw IoError("output directory '" + parent.string() + "' does not exist");
        }
    }

    void emit(const std::string& content) const { emit_to(g_.out, content); }

    void emit_to(const std::string& path, const std::string& content) const {
        if (path.empty()) {
            stdout_ << content;
            stdout_.flush();
        } else {
            write_file(path, content);
        }
    }

private:
    const Globals& g_;
    std::ostream& stdout_;
};

void require_input(const std::string& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw IoError("input '" + path + "' does not exist or is not a file");
    }
}

int thread_count(const Globals& g) {
    std::string spec = g.threads;
    if (spec.empty()) {
        if (const char* env = std::getenv("LP_SELECT_THREADS")) {
            spec = env;
        }
    }
    if (spec.empty() || spec == "auto") {
        return resolve_threads(0);
    }
    try {
        std::size_t used = 0;
        const int n = std::stoi(spec, &used);
        if (used == spec.size() && n >= 1) {
            return n;
        }
    } catch (const std::exception&) {
    }
    throw Error(Errc::invalid_argument, "--threads must be a positive integer or 'auto', got '" + spec + "'");
}

std::string iso8601(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --created-at wins, then SOURCE_DATE_EPOCH, then the Unix epoch.
std::string created_at(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        try {
            return iso8601(static_cast<std::time_t>(std::stoll(env)));
        } catch (const std::exception&) {
            throw Error(Errc::invalid_argument, "SOURCE_DATE_EPOCH must be an integer");
        }
    }
    return iso8601(0);
}

template <class T, class Writer>
std::string render_lines(const std::vector<T>& items, Writer write) {
    std::ostringstream ss;
    write(ss, std::span<const T>(items));
    return ss.str();
}

std::vector<std::string> ids_from_scores(const std::vector<ScoreRecord>& scores) { return rank_ascending(scores); }

// Manifest JSON yields its ids in order; anything else is read as score
// JSONL and ranked ascending.
std::vector<std::string> load_ranking(const std::string& path) {
    const std::string text = read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        bool manifest = false;
        try {
            const auto doc = json::parse(text);
            manifest = doc.is_object() && doc.contains("ids") && doc.contains("params");
        } catch (const json::parse_error&) {
        }
        if (manifest) {
            return parse_manifest(text).ids;
        }
    }
    std::istringstream in(text);
    return ids_from_scores(read_scores(in));
}

std::vector<double> parse_fractions(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw Error(Errc::invalid_argument, "bad fraction '" + item + "' in --fractions");
        }
    }
    if (out.empty()) {
        throw Error(Errc::invalid_argument, "--fractions is empty");
    }
    return out;
}

// Metric and epoch shared by every score, for manifest provenance.
std::pair<Metric, int> score_provenance(const std::vector<ScoreRecord>& scores) {
    if (scores.empty()) {
        throw Error(Errc::empty_set, "score file is empty");
    }
    for (const auto& s : scores) {
        if (s.metric != scores.front().metric || s.epoch != scores.front().epoch) {
            throw Error(Errc::invalid_argument, "score file mixes metrics or epochs (see id " + s.id + ")");
        }
    }
    return {scores.front().metric, scores.front().epoch};
}

struct Command {
    CLI::App* app;
    std::function<void()> action;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learning-percentage data selection toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->default_val(0);
    app.add_option("--threads", g.threads, "Worker threads: integer or 'auto' (env LP_SELECT_THREADS)");
    app.add_option("--out", g.out, "Output path (default: standard output)");
    app.add_option("--format", g.format, "Output format where applicable: json|jsonl|csv|text");
    app.add_flag("--force", g.force, "Overwrite existing outputs");

    Sink sink(g, out);
    std::vector<Command> commands;

    // score
    std::string traces_path, corpus_path, metric_name = "lp";
    int epoch = 1;
    double tol = 1e-9;
    {
        auto* sub = app.add_subcommand("score", "Score perplexity traces with LP or LP_app");
        sub->add_option("--traces", traces_path, "Trace JSONL")->required();
        sub->add_option("--corpus", corpus_path, "Corpus JSONL; trace ids must resolve against it");
        sub->add_option("--metric", metric_name, "lp | lp-app")->default_val("lp");
        sub->add_option("--epoch", epoch, "Epoch i of LP(i)")->default_val(1);
        sub->add_option("--tol", tol, "Degenerate-denominator tolerance")->default_val(1e-9);
        sub->footer(std::string("Reads ") + kTraceSchema + "\nWrites " + kScoreSchema);
        commands.push_back({sub, [&] {
            require_input(traces_path);
            if (!corpus_path.empty()) require_input(corpus_path);
            sink.check(g.out);
            MetricConfig cfg{parse_metric(metric_name), epoch, tol};
            std::vector<SampleRecord> corpus;
            if (!corpus_path.empty()) corpus = load_corpus(corpus_path);
            const auto table = load_traces(traces_path, corpus_path.empty() ? nullptr : &corpus);
            const auto scores = score_traces(table.traces, cfg, thread_count(g));
            const auto degenerate = std::count_if(scores.begin(), scores.end(), [](auto& s) { return s.degenerate; });
            if (degenerate > 0) {
                err << "note: " << degenerate << " trace(s) have a degenerate denominator (scored 1.0, flagged)\n";
            }
            sink.emit(render_lines(scores, write_scores));
        }});
    }

    // rank
    std::string scores_path;
    {
        auto* sub = app.add_subcommand("rank", "Order scored ids hardest first (value, then id)");
        sub->add_option("--scores", scores_path, "Score JSONL")->required();
        sub->footer(std::string("Reads ") + kScoreSchema + "\nWrites one id per line, or a JSON array with --format json");
        commands.push_back({sub, [&] {
            require_input(scores_path);
            sink.check(g.out);
            const auto ranking = rank_ascending(load_scores(scores_path));
            if (g.format == "json") {
                sink.emit(json(ranking).dump() + "\n");
            } else {
                std::string text;
                for (const auto& id : ranking) text += id + "\n";
                sink.emit(text);
            }
        }});
    }

    // embed
    int dim = 256;
    {
        auto* sub = app.add_subcommand("embed", "Hashed character-trigram embeddings (fallback embedder)");
        sub->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
        sub->add_option("--dim", dim, "Embedding dimension (>= 8)")->default_val(256);
        sub->footer(std::string("Reads ") + kCorpusSchema + "\nWrites " + kEmbeddingSchema);
        commands.push_back({sub, [&] {
            require_input(corpus_path);
            sink.check(g.out);
            const auto corpus = load_corpus(corpus_path);
            const auto embedded = fallback_embed_all(corpus, dim, g.seed, thread_count(g));
            std::vector<EmbeddingRecord> records;
            records.reserve(embedded.size());
            for (const auto& e : embedded) {
                if (e.zero) err << "warning: " << e.record.id << " has no text; emitted a zero vector\n";
                records.push_back(e.record);
            }
            sink.emit(render_lines(records, write_embeddings));
        }});
    }

    // cluster
    std::string embeddings_path, meta_path;
    std::optional<int> k;
    int min_avg = 50, max_iters = 100;
    double conv_tol = 1e-6;
    {
        auto* sub = app.add_subcommand("cluster", "k-means over L2-normalized embeddings");
        sub->add_option("--embeddings", embeddings_path, "Embedding JSONL")->required();
        auto* k_opt = sub->add_option("--k", k, "Cluster count (overrides --min-avg)");
        sub->add_option("--min-avg", min_avg, "Auto k = max(1, floor(N / min_avg))")->default_val(50)->excludes(k_opt);
        sub->add_option("--max-iters", max_iters, "Lloyd iteration cap")->default_val(100);
        sub->add_option("--tol", conv_tol, "Relative inertia improvement to stop at")->default_val(1e-6);
        sub->add_option("--meta", meta_path, "Write run metadata JSON (seed, k, inertia, iters) here");
        sub->footer(std::string("Reads ") + kEmbeddingSchema + "\nWrites " + kClusterSchema +
                    "\nDefault k = floor(N / min_avg); e.g. 52,000 samples give 1,040. Pass --k 1000 for 1,000 clusters.");
        commands.push_back({sub, [&] {
            require_input(embeddings_path);
            sink.check(g.out);
            sink.check(meta_path);
            const auto embeddings = load_embeddings(embeddings_path);
            ClusterConfig cfg;
            cfg.k = k;
            cfg.min_avg = min_avg;
            cfg.seed = g.seed;
            cfg.max_iters = max_iters;
            cfg.conv_tol = conv_tol;
            cfg.threads = thread_count(g);
            const auto result = kmeans(embeddings, cfg);
            sink.emit(render_lines(result.assignments, write_clusters));
            if (!meta_path.empty()) {
                json meta{{"seed", g.seed},
                          {"k", result.centroids.size()},
                          {"inertia", result.inertia},
                          {"iters", result.iters_run},
                          {"converged", result.converged}};
                sink.emit_to(meta_path, meta.dump(2) + "\n");
            }
        }});
    }

    // select
    std::string clusters_path, mode_name, bucket_name, tag, subset_out, created_flag;
    std::optional<double> fraction;
    {
        auto* sub = app.add_subcommand("select", "Cluster-stratified subset selection");
        sub->add_option("--scores", scores_path, "Score JSONL (ranking source)");
        sub->add_option("--clusters", clusters_path, "Cluster JSONL")->required();
        sub->add_option("--mode", mode_name, "topk-low | bucket | clust-rand")->required();
        sub->add_option("--fraction", fraction, "Percent per cluster, in (0, 100] (topk-low, clust-rand)");
        sub->add_option("--bucket", bucket_name, "low | mid | high (bucket mode)");
        sub->add_option("--corpus", corpus_path, "Corpus JSONL; enables corpus_hash and --subset-out");
        sub->add_option("--tag", tag, "ranking_source_tag (default: scores file name)");
        sub->add_option("--subset-out", subset_out, "Also write the selected corpus rows as JSONL");
        sub->add_option("--created-at", created_flag, "Manifest timestamp (default: SOURCE_DATE_EPOCH or 1970)");
        sub->footer(std::string("Reads ") + kScoreSchema + "\n      " + kClusterSchema + "\nWrites " + kManifestSchema);
        commands.push_back({sub, [&] {
            const auto mode = parse_mode(mode_name);
            if (mode != SelectionMode::clust_rand && scores_path.empty()) {
                throw Error(Errc::invalid_argument, "--scores is required for this mode");
            }
            if ((mode == SelectionMode::bucket) == fraction.has_value() ||
                (mode == SelectionMode::bucket) != !bucket_name.empty()) {
                throw Error(Errc::invalid_argument, "use --fraction with topk-low/clust-rand and --bucket with bucket");
            }
            if (!subset_out.empty() && corpus_path.empty()) {
                throw Error(Errc::invalid_argument, "--subset-out needs --corpus");
            }
            if (!scores_path.empty()) require_input(scores_path);
            require_input(clusters_path);
            if (!corpus_path.empty()) require_input(corpus_path);
            sink.check(g.out);
            sink.check(subset_out);

            const auto clusters = load_clusters(clusters_path);
            SelectionParams params;
            params.mode = mode;
            params.fraction_percent = fraction;
            if (!bucket_name.empty()) params.bucket = parse_bucket(bucket_name);
            params.seed = g.seed;
            params.created_at = created_at(created_flag);
            std::vector<std::string> ranking;
            if (!scores_path.empty()) {
                const auto scores = load_scores(scores_path);
                const auto [metric, ep] = score_provenance(scores);
                params.metric = metric;
                params.epoch = ep;
                ranking = rank_ascending(scores);
                params.ranking_source_tag = tag.empty() ? fs::path(scores_path).filename().string() : tag;
            } else {
                params.ranking_source_tag = tag;
            }
            std::vector<SampleRecord> corpus;
            if (!corpus_path.empty()) {
                corpus = load_corpus(corpus_path);
                params.corpus_hash = corpus_hash(corpus);
            }
            SelectionManifest manifest;
            switch (mode) {
                case SelectionMode::topk_low: manifest = select_topk_low(ranking, clusters, params); break;
                case SelectionMode::bucket: manifest = partition_buckets(ranking, clusters, params)[*params.bucket]; break;
                case SelectionMode::clust_rand: manifest = select_clust_rand(clusters, params); break;
            }
            std::vector<SampleRecord> subset;
            if (!corpus.empty()) {
                std::unordered_map<std::string_view, const SampleRecord*> by_id;
                for (const auto& r : corpus) by_id.emplace(r.id, &r);
                for (const auto& id : manifest.ids) {
                    auto it = by_id.find(id);
                    if (it == by_id.end()) throw Error(Errc::unknown_id, id + " is not in the corpus");
                    subset.push_back(*it->second);
                }
            }
            err << "selected " << manifest.ids.size() << " of " << clusters.size() << " samples\n";
            sink.emit(manifest_to_json(manifest));
            if (!subset_out.empty()) sink.emit_to(subset_out, render_lines(subset, write_corpus));
        }});
    }

    // partition
    std::string out_dir;
    {
        auto* sub = app.add_subcommand("partition", "Per-cluster Low/Mid/High thirds of the ranking");
        sub->add_option("--scores", scores_path, "Score JSONL")->required();
        sub->add_option("--clusters", clusters_path, "Cluster JSONL")->required();
        sub->add_option("--corpus", corpus_path, "Corpus JSONL for corpus_hash");
        sub->add_option("--tag", tag, "ranking_source_tag (default: scores file name)");
        sub->add_option("--out-dir", out_dir, "Write low.json, mid.json, high.json here (default: one JSON object)");
        sub->add_option("--created-at", created_flag, "Manifest timestamp");
        sub->footer(std::string("Reads ") + kScoreSchema + "\n      " + kClusterSchema + "\nWrites " +
                    kManifestSchema + " per bucket");
        commands.push_back({sub, [&] {
            require_input(scores_path);
            require_input(clusters_path);
            if (!corpus_path.empty()) require_input(corpus_path);
            if (!out_dir.empty()) {
                if (!fs::is_directory(out_dir)) throw IoError("--out-dir '" + out_dir + "' is not a directory");
                for (const char* name : {"low.json", "mid.json", "high.json"}) sink.check((fs::path(out_dir) / name).string());
            } else {
                sink.check(g.out);
            }
            const auto scores = load_scores(scores_path);
            const auto clusters = load_clusters(clusters_path);
            SelectionParams params;
            params.mode = SelectionMode::bucket;
            std::tie(params.metric, params.epoch) = score_provenance(scores);
            params.ranking_source_tag = tag.empty() ? fs::path(scores_path).filename().string() : tag;
            params.created_at = created_at(created_flag);
            if (!corpus_path.empty()) params.corpus_hash = corpus_hash(load_corpus(corpus_path));
            const auto parts = partition_buckets(rank_ascending(scores), clusters, params);
            if (!out_dir.empty()) {
                sink.emit_to((fs::path(out_dir) / "low.json").string(), manifest_to_json(parts.low));
                sink.emit_to((fs::path(out_dir) / "mid.json").string(), manifest_to_json(parts.mid));
                sink.emit_to((fs::path(out_dir) / "high.json").string(), manifest_to_json(parts.high));
            } else {
                json doc{{"low", json::parse(manifest_to_json(parts.low))},
                         {"mid", json::parse(manifest_to_json(parts.mid))},
                         {"high", json::parse(manifest_to_json(parts.high))}};
                sink.emit(doc.dump(2) + "\n");
            }
        }});
    }

    // compare
    std::string rank_a, rank_b, set_a, set_b, fractions = "1,5,10,33", tags;
    {
        auto* sub = app.add_subcommand("compare", "Kendall tau / IOU between two rankings or two manifests");
        auto* ra = sub->add_option("--rank-a", rank_a, "Score JSONL or manifest JSON");
        auto* rb = sub->add_option("--rank-b", rank_b, "Score JSONL or manifest JSON");
        auto* sa = sub->add_option("--set-a", set_a, "Manifest JSON");
        auto* sb = sub->add_option("--set-b", set_b, "Manifest JSON");
        ra->needs(rb);
        rb->needs(ra);
        sa->needs(sb);
        sb->needs(sa);
        ra->excludes(sa);
        ra->excludes(sb);
        rb->excludes(sa);
        rb->excludes(sb);
        sub->add_option("--fractions", fractions, "Comma-separated percents for the IOU curve")->default_val("1,5,10,33");
        sub->add_option("--tags", tags, "Comma-separated source tags for the two rankings");
        sub->footer(
            "Rank mode writes {kendall_tau, n_common, iou_by_fraction, source_tags} JSON, or the IOU curve with "
            "--format csv.\nSet mode writes {iou, n_a, n_b, n_intersection} JSON.");
        commands.push_back({sub, [&] {
            sink.check(g.out);
            if (!rank_a.empty()) {
                require_input(rank_a);
                require_input(rank_b);
                const auto a = load_ranking(rank_a);
                const auto b = load_ranking(rank_b);
                std::pair<std::string, std::string> names{fs::path(rank_a).filename().string(),
                                                          fs::path(rank_b).filename().string()};
                if (!tags.empty()) {
                    const auto comma = tags.find(',');
                    if (comma == std::string::npos) throw Error(Errc::invalid_argument, "--tags needs two names");
                    names = {tags.substr(0, comma), tags.substr(comma + 1)};
                }
                const auto report = transfer_report(a, b, parse_fractions(fractions), names);
                sink.emit(g.format == "csv" ? iou_csv(report) : to_json(report));
            } else if (!set_a.empty()) {
                require_input(set_a);
                require_input(set_b);
                const auto a = load_manifest(set_a).ids;
                const auto b = load_manifest(set_b).ids;
                const double value = iou(a, b);
                const std::unordered_set<std::string> sa_ids(a.begin(), a.end());
                const auto inter = std::count_if(b.begin(), b.end(), [&](auto& id) { return sa_ids.contains(id); });
                json doc{{"iou", value}, {"n_a", a.size()}, {"n_b", b.size()}, {"n_intersection", inter}};
                sink.emit(doc.dump(2) + "\n");
            } else {
                throw Error(Errc::invalid_argument, "compare needs --rank-a/--rank-b or --set-a/--set-b");
            }
        }});
    }

    // stats
    std::string manifest_path;
    {
        auto* sub = app.add_subcommand("stats", "Character-length statistics of a selected subset vs the corpus");
        sub->add_option("--manifest", manifest_path, "Manifest JSON")->required();
        sub->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
        sub->add_option("--clusters", clusters_path, "Cluster JSONL")->required();
        sub->footer("Writes {\"subset\": SubsetStats, \"corpus\": SubsetStats}; SubsetStats = {n, mean_output_chars, "
                    "mean_instruction_chars, empty_output_count, per_cluster_counts}");
        commands.push_back({sub, [&] {
            require_input(manifest_path);
            require_input(corpus_path);
            require_input(clusters_path);
            sink.check(g.out);
            const auto manifest = load_manifest(manifest_path);
            const auto corpus = load_corpus(corpus_path);
            const auto clusters = load_clusters(clusters_path);
            if (manifest.params.corpus_hash && *manifest.params.corpus_hash != corpus_hash(corpus)) {
                err << "warning: manifest corpus_hash does not match " << corpus_path << "\n";
            }
            std::vector<std::string> all;
            all.reserve(corpus.size());
            for (const auto& r : corpus) all.push_back(r.id);
            const auto subset = subset_stats(manifest.ids, corpus, clusters);
            const auto whole = subset_stats(all, corpus, clusters);
            json doc{{"subset", json::parse(to_json(subset))}, {"corpus", json::parse(to_json(whole))}};
            sink.emit(doc.dump(2) + "\n");
        }});
    }

    // train-ref
    TrainerConfig tcfg;
    {
        auto* sub = app.add_subcommand("train-ref", "Train the reference byte model and record perplexity traces");
        sub->add_option("--corpus", corpus_path, "Corpus JSONL")->required();
        sub->add_option("--epochs", tcfg.epochs, "Training epochs n")->default_val(3);
        sub->add_option("--hidden-dim", tcfg.hidden_dim, "Hidden units")->default_val(64);
        sub->add_option("--embed-dim", tcfg.embed_dim, "Byte embedding width")->default_val(16);
        sub->add_option("--context", tcfg.context, "Preceding bytes seen by the predictor")->default_val(4);
        sub->add_option("--lr", tcfg.lr, "Base learning rate; epoch e uses lr/sqrt(e)")->default_val(0.1);
        sub->add_option("--batch-size", tcfg.batch_size, "Samples per SGD step")->default_val(1);
        sub->add_option("--meta", meta_path, "Write run metadata JSON here");
        sub->footer(std::string("Reads ") + kCorpusSchema + "\nWrites " + kTraceSchema);
        commands.push_back({sub, [&] {
            require_input(corpus_path);
            sink.check(g.out);
            sink.check(meta_path);
            const auto corpus = load_corpus(corpus_path);
            tcfg.seed = g.seed;
            tcfg.threads = thread_count(g);
            const auto set = train_and_trace(corpus, tcfg);
            for (const auto& id : set.empty_output_ids) {
                err << "note: " << id << " has an empty output; traced at the uniform perplexity\n";
            }
            sink.emit(render_lines(set.traces, write_traces));
            if (!meta_path.empty()) sink.emit_to(meta_path, trace_meta_json(set));
        }});
    }

    // synth
    SynthSpec sspec;
    std::string corpus_out;
    {
        auto* sub = app.add_subcommand("synth", "Synthetic traces with planted easy/hard/noisy learning patterns");
        sub->add_option("--easy", sspec.n_easy, "Easy traces (LP(1) ~ 0.9)")->default_val(0);
        sub->add_option("--hard", sspec.n_hard, "Hard traces (LP(1) ~ 0.1)")->default_val(0);
        sub->add_option("--noisy", sspec.n_noisy, "Non-monotone traces")->default_val(0);
        sub->add_option("--epochs", sspec.epochs, "Epochs n")->default_val(3);
        sub->add_option("--jitter", sspec.jitter, "Uniform jitter on P_0 and LP(1), in [0, 0.05]")->default_val(0.02);
        sub->add_option("--corpus-out", corpus_out, "Also write matching stand-in corpus JSONL");
        sub->footer(std::string("Writes ") + kTraceSchema);
        commands.push_back({sub, [&] {
            sink.check(g.out);
            sink.check(corpus_out);
            sspec.seed = g.seed;
            const auto synth = synth_traces(sspec);
            sink.emit(render_lines(synth.traces, write_traces));
            if (!corpus_out.empty()) sink.emit_to(corpus_out, render_lines(synth_corpus(synth, g.seed), write_corpus));
        }});
    }

    // planted
    PlantedSpec pspec;
    std::string labels_out;
    {
        auto* sub = app.add_subcommand("planted", "Instruction corpus with a planted easy/hard split");
        sub->add_option("--n", pspec.n, "Samples")->default_val(2000);
        sub->add_option("--hard-frac", pspec.hard_fraction, "Share of planted-hard samples")->default_val(0.1);
        sub->add_option("--labels-out", labels_out, "Write {\"id\", \"population\"} JSONL here");
        sub->footer(std::string("Writes ") + kCorpusSchema);
        commands.push_back({sub, [&] {
            sink.check(g.out);
            sink.check(labels_out);
            pspec.seed = g.seed;
            const auto planted = planted_corpus(pspec);
            sink.emit(render_lines(planted.samples, write_corpus));
            if (!labels_out.empty()) {
                std::string text;
                for (std::size_t i = 0; i < planted.samples.size(); ++i) {
                    text += json{{"id", planted.samples[i].id},
                                 {"population", planted.labels[i] == Population::hard ? "hard" : "easy"}}
                                .dump() +
                            "\n";
                }
                sink.emit_to(labels_out, text);
            }
        }});
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        for (auto& cmd : commands) {
            if (cmd.app->parsed()) {
                cmd.action();
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace lpsel
