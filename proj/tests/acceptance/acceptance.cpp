// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lpselect/analytics.hpp"
#include "lpselect/cli.hpp"
#include "lpselect/corpus_io.hpp"
#include "lpselect/diversity.hpp"
#include "lpselect/lp_metrics.hpp"
#include "lpselect/ref_trainer.hpp"
#include "lpselect/selector.hpp"
#include "oracles.hpp"

using namespace lpsel;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = "failed: " + what;
        }
    }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

PerplexityTrace trace_of(std::vector<double> p, const std::string& id = "t") { return {id, std::move(p)}; }

Outcome formula_oracle() {
    Outcome o;
    struct Row {
        std::vector<double> p;
        double lp;
        bool degenerate;
    };
    const std::vector<Row> exact{{{100, 40, 20, 10}, 60.0 / 90.0, false},
                                 {{50, 10, 10, 10}, 1.0, false},
                                 {{50, 50, 20, 10}, 0.0, false},
                                 {{30, 30, 30, 30}, 1.0, true}};
    for (const auto& r : exact) {
        const auto s = lp_exact(trace_of(r.p), 1);
        o.require(std::abs(s.value - r.lp) <= 1e-12, "lp_exact example");
        o.require(s.degenerate == r.degenerate, "degenerate flag");
        if (!r.degenerate) o.require(std::abs(s.value - oracle::lp(r.p, 1)) <= 1e-12, "lp_exact vs oracle");
    }
    const std::vector<std::pair<std::vector<double>, double>> approx{
        {{100, 40}, 0.6}, {{100, 100}, 0.0}, {{100, 120}, -0.2}};
    for (const auto& [p, v] : approx) {
        const auto s = lp_approx(trace_of(p), 1);
        o.require(std::abs(s.value - v) <= 1e-12, "lp_approx example");
        o.require(std::abs(s.value - oracle::lp_app(p, 1)) <= 1e-12, "lp_approx vs oracle");
        o.require(!s.degenerate, "lp_approx never degenerate");
    }

    oracle::Gen g(1001);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) {
        const int n = g.integer(1, 10);
        auto tr = trace_of(g.trace(n));
        double sum = 0;
        for (int i = 1; i <= n; ++i) sum += lp_exact(tr, i).value;
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    o.require(worst <= 1e-9, "telescoping sum");
    if (o.ok) o.detail = "max |sum LP - 1| = " + fmt("%.2e", worst);
    return o;
}

Outcome rank_oracle() {
    Outcome o;
    oracle::Gen g(1002);
    for (int t = 0; t < 200; ++t) {
        const auto n = static_cast<std::size_t>(g.integer(2, 500));
        auto a = g.ids(n);
        auto b = a;
        g.shuffle(a);
        g.shuffle(b);
        o.require(kendall_tau(a, b) == oracle::tau_classic(a, b), "fast tau == brute force");
        auto rev = a;
        std::reverse(rev.begin(), rev.end());
        o.require(kendall_tau(a, a) == 1.0, "identity");
        o.require(kendall_tau(a, rev) == -1.0, "reversal");
    }
    if (o.ok) o.detail = "200 permutations exact";
    return o;
}

Outcome partition_invariants() {
    Outcome o;
    oracle::Gen g(1003);
    std::vector<std::string> ranking;
    std::vector<ClusterAssignment> clusters;
    std::vector<int> sizes(500);
    int next = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        sizes[c] = g.integer(1, 100);
        for (int i = 0; i < sizes[c]; ++i) {
            const auto id = "x" + std::to_string(next++);
            clusters.push_back({id, static_cast<int>(c)});
            ranking.push_back(id);
        }
    }
    g.shuffle(ranking);
    g.shuffle(clusters);
    const auto p = partition_buckets(ranking, clusters, {});

    std::unordered_map<std::string, int> cl, pos;
    for (const auto& a : clusters) cl[a.id] = a.cluster;
    for (std::size_t i = 0; i < ranking.size(); ++i) pos[ranking[i]] = static_cast<int>(i);

    std::unordered_set<std::string> seen;
    std::vector<std::array<std::vector<int>, 3>> per(sizes.size());
    int b = 0;
    for (const auto* m : {&p.low, &p.mid, &p.high}) {
        for (const auto& id : m->ids) {
            o.require(seen.insert(id).second, "disjoint");
            per[static_cast<std::size_t>(cl[id])][static_cast<std::size_t>(b)].push_back(pos[id]);
        }
        ++b;
    }
    o.require(seen.size() == ranking.size(), "exhaustive");
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        const int m = sizes[c], q = m / 3, r = m % 3;
        const auto& [lo, mi, hi] = per[c];
        o.require(static_cast<int>(lo.size()) == q + (r >= 1), "low size");
        o.require(static_cast<int>(mi.size()) == q + (r >= 2), "mid size");
        o.require(static_cast<int>(hi.size()) == q, "high size");
        std::vector<int> joined;
        for (const auto* v : {&lo, &mi, &hi}) joined.insert(joined.end(), v->begin(), v->end());
        o.require(std::is_sorted(joined.begin(), joined.end()), "rank contiguous");
    }
    if (o.ok) o.detail = std::to_string(ranking.size()) + " ids in 500 clusters";
    return o;
}

Outcome clustering_invariants() {
    Outcome o;
    oracle::Gen g(1004);

    std::vector<EmbeddingRecord> emb;
    for (int i = 0; i < 600; ++i) {
        std::vector<double> v(16);
        for (auto& x : v) x = g.normal();
        emb.push_back({"r" + std::to_string(i), v});
    }
    ClusterConfig cfg;
    cfg.k = 12;
    cfg.seed = 3;
    cfg.max_iters = 300;
    cfg.conv_tol = 1e-15;
    const auto r = kmeans(emb, cfg);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
        o.require(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12, "inertia non-increasing");
    }
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const auto u = l2_normalized(emb[i].vec);
        const double own = oracle::sq_dist(u, r.centroids[static_cast<std::size_t>(r.assignments[i].cluster)]);
        for (const auto& c : r.centroids) o.require(own <= oracle::sq_dist(u, c) + 1e-12, "nearest centroid");
    }

    std::vector<EmbeddingRecord> blobs;
    std::vector<int> truth;
    for (int i = 0; i < 400; ++i) {
        const int label = i % 4;
        std::vector<double> v(8);
        for (auto& x : v) x = 0.05 * g.normal();
        v[static_cast<std::size_t>(2 * label)] += 1.0;
        blobs.push_back({"b" + std::to_string(i), v});
        truth.push_back(label);
    }
    ClusterConfig bc;
    bc.k = 4;
    bc.seed = 7;
    const auto br = kmeans(blobs, bc);
    std::vector<int> got;
    for (const auto& a : br.assignments) got.push_back(a.cluster);
    const double recovery = oracle::best_match_fraction(truth, got, 4);
    o.require(recovery >= 0.99, "blob recovery");
    o.require(auto_cluster_count(15000, 50) == 300, "auto cluster count");
    if (o.ok) o.detail = "blob recovery " + fmt("%.3f", recovery) + ", k(15000, 50) = 300";
    return o;
}

// Shared state for the planted-corpus criteria.
struct Planted {
    PlantedCorpus corpus;
    std::vector<std::string> rank64, rank16;
    std::vector<ScoreRecord> scores64;
};

std::vector<std::string> train_rank(const PlantedCorpus& pc, int hidden, std::vector<ScoreRecord>* scores = nullptr) {
    TrainerConfig cfg;
    cfg.hidden_dim = hidden;
    cfg.seed = 1;
    const auto set = train_and_trace(pc.samples, cfg);
    auto s = score_traces(set.traces, {});
    auto rank = rank_ascending(s);
    if (scores) *scores = std::move(s);
    return rank;
}

Outcome planted_recovery(Planted& st) {
    Outcome o;
    st.corpus = planted_corpus({2000, 0.1, 7});
    st.rank64 = train_rank(st.corpus, 64, &st.scores64);

    std::unordered_set<std::string> hard;
    double sum_e = 0, sum_h = 0;
    std::size_t n_e = 0, n_h = 0;
    for (std::size_t i = 0; i < st.corpus.samples.size(); ++i) {
        const bool h = st.corpus.labels[i] == Population::hard;
        if (h) hard.insert(st.corpus.samples[i].id);
        (h ? sum_h : sum_e) += st.scores64[i].value;
        (h ? n_h : n_e)++;
    }
    std::vector<ClusterAssignment> one;
    for (const auto& s : st.corpus.samples) one.push_back({s.id, 0});
    SelectionParams p;
    p.fraction_percent = 10;
    const auto sel = select_topk_low(st.rank64, one, p);
    std::size_t hit = 0;
    for (const auto& id : sel.ids) hit += hard.count(id);
    const double recovery = static_cast<double>(hit) / static_cast<double>(hard.size());
    const double mean_e = sum_e / static_cast<double>(n_e), mean_h = sum_h / static_cast<double>(n_h);

    // Informational: the same selection within fallback-embedding clusters.
    std::vector<EmbeddingRecord> emb;
    for (auto& e : fallback_embed_all(st.corpus.samples, 256, 0, 1)) emb.push_back(std::move(e.record));
    const auto km = kmeans(emb, ClusterConfig{});
    std::size_t chit = 0;
    for (const auto& id : select_topk_low(st.rank64, km.assignments, p).ids) chit += hard.count(id);

    o.require(recovery >= 0.7, "hard recovery " + fmt("%.3f", recovery) + " < 0.7");
    o.require(mean_e > mean_h, "mean LP(1) easy " + fmt("%.4f", mean_e) + " <= hard " + fmt("%.4f", mean_h));
    o.detail += (o.ok ? "" : "; ") + std::string("recovery ") + fmt("%.3f", recovery) + ", mean LP(1) easy " +
                fmt("%.4f", mean_e) + " > hard " + fmt("%.4f", mean_h) + "; per-cluster (k=" +
                std::to_string(km.centroids.size()) + ") recovery " +
                fmt("%.3f", static_cast<double>(chit) / static_cast<double>(hard.size()));
    return o;
}

Outcome transferability(Planted& st) {
    Outcome o;
    st.rank16 = train_rank(st.corpus, 16);
    const double tau = kendall_tau(st.rank16, st.rank64);
    const double v = iou(top_fraction(st.rank16, 33), top_fraction(st.rank64, 33));
    const double k = 0.33, random = k / (2 - k);
    o.require(tau > 0, "tau " + fmt("%.4f", tau) + " <= 0");
    o.require(v > random + 0.1, "IOU@33 " + fmt("%.4f", v) + " <= random + 0.1");
    if (o.ok) o.detail = "tau " + fmt("%.4f", tau) + ", IOU@33 " + fmt("%.4f", v) + " vs random " + fmt("%.4f", random);
    return o;
}

Outcome iou_monotone(const Planted& st) {
    Outcome o;
    std::vector<double> fr{1, 10, 33};
    const auto r = transfer_report(st.rank16, st.rank64, fr, {"h16", "h64"});
    const double a = r.iou_by_fraction.at(1), b = r.iou_by_fraction.at(10), c = r.iou_by_fraction.at(33);
    o.require(c >= b && b >= a, "IOU not monotone");
    o.detail += (o.ok ? "" : ": ") + std::string("IOU@1 ") + fmt("%.4f", a) + ", @10 " + fmt("%.4f", b) + ", @33 " +
                fmt("%.4f", c);
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto dir = fs::temp_directory_path() / "lpselect_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::string> files{"c.jsonl",  "t.jsonl", "tmeta.json", "s.jsonl",    "s2.jsonl",
                                         "rank.txt", "e.jsonl", "a.jsonl",    "cmeta.json", "m.json",
                                         "r.json",   "parts.json", "cmp.json", "stats.json", "syn.jsonl"};
    auto pipeline = [&](const std::string& tag, const std::string& threads) {
        auto p = [&](const std::string& f) { return (dir / (tag + "_" + f)).string(); };
        const std::vector<std::vector<std::string>> steps = {
            {"planted", "--n", "300", "--seed", "11", "--out", p("c.jsonl")},
            {"train-ref", "--corpus", p("c.jsonl"), "--hidden-dim", "16", "--seed", "4", "--out", p("t.jsonl"),
             "--meta", p("tmeta.json")},
            {"score", "--traces", p("t.jsonl"), "--out", p("s.jsonl")},
            {"score", "--traces", p("t.jsonl"), "--metric", "lp-app", "--out", p("s2.jsonl")},
            {"rank", "--scores", p("s.jsonl"), "--out", p("rank.txt")},
            {"embed", "--corpus", p("c.jsonl"), "--out", p("e.jsonl")},
            {"cluster", "--embeddings", p("e.jsonl"), "--k", "6", "--seed", "2", "--out", p("a.jsonl"), "--meta",
             p("cmeta.json")},
            {"select", "--scores", p("s.jsonl"), "--clusters", p("a.jsonl"), "--mode", "topk-low", "--fraction", "10",
             "--corpus", p("c.jsonl"), "--tag", "h16", "--out", p("m.json")},
            {"select", "--clusters", p("a.jsonl"), "--mode", "clust-rand", "--fraction", "10", "--seed", "5", "--out",
             p("r.json")},
            {"partition", "--scores", p("s.jsonl"), "--clusters", p("a.jsonl"), "--tag", "h16", "--out",
             p("parts.json")},
            {"compare", "--rank-a", p("s.jsonl"), "--rank-b", p("s2.jsonl"), "--tags", "lp,lp-app", "--out",
             p("cmp.json")},
            {"stats", "--manifest", p("m.json"), "--corpus", p("c.jsonl"), "--clusters", p("a.jsonl"), "--out",
             p("stats.json")},
            {"synth", "--easy", "50", "--hard", "50", "--noisy", "10", "--seed", "9", "--out", p("syn.jsonl")},
        };
        for (auto s : steps) {
            s.push_back("--threads");
            s.push_back(threads);
            std::ostringstream out, err;
            if (run(s, out, err) != 0) {
                o.require(false, s[0] + " exited non-zero: " + err.str());
                return;
            }
        }
    };
    pipeline("a", "1");
    pipeline("b", "1");
    pipeline("c", "4");
    if (o.ok) {
        for (const auto& f : files) {
            const auto ref = read_file((dir / ("a_" + f)).string());
            o.require(read_file((dir / ("b_" + f)).string()) == ref, f + " differs between identical runs");
            o.require(read_file((dir / ("c_" + f)).string()) == ref, f + " differs with --threads 4");
        }
    }
    fs::remove_all(dir);
    if (o.ok) o.detail = std::to_string(files.size()) + " outputs byte-identical across reruns and thread counts";
    return o;
}

}  // namespace

int main() {
    Planted st;
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "formula oracle", 1, formula_oracle},
        {2, "rank-statistic oracle", 10, rank_oracle},
        {3, "partition invariants", 1, partition_invariants},
        {4, "clustering invariants", 5, clustering_invariants},
        {5, "planted-difficulty recovery", 120, [&] { return planted_recovery(st); }},
        {6, "transferability", 240, [&] { return transferability(st); }},
        {7, "IOU monotonicity", 0, [&] { return iou_monotone(st); }},
        {8, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs > c.limit_s) {
            o.ok = false;
            o.detail += "; over time limit " + fmt("%.0fs", c.limit_s);
        }
        std::printf("criterion %d %-28s %s  (%s; %.2fs)\n", c.id, c.name, o.ok ? "PASS" : "FAIL", o.detail.c_str(),
                    secs);
        std::fflush(stdout);
        failed += !o.ok;
    }
    return failed ? 1 : 0;
}
