#include "lpselect/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "lpselect/corpus_io.hpp"
#include "lpselect/error.hpp"
#include "lpselect/selector.hpp"

namespace lpsel {

using json = nlohmann::json;

namespace {

std::int64_t pairs_of(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts v ascending, returning the number of strict inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) {
        return 0;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

TauCounts tau_counts(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(Errc::invalid_argument, "paired samples differ in length");
    }
    const std::size_t n = x.size();
    TauCounts c;
    c.pairs = pairs_of(static_cast<std::int64_t>(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
    });

    std::int64_t run_x = 1;
    std::int64_t run_xy = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
        const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
        if (same_x) {
            ++run_x;
        } else {
            c.ties_x += pairs_of(run_x);
            run_x = 1;
        }
        if (same_xy) {
            ++run_xy;
        } else {
            c.ties_xy += pairs_of(run_xy);
            run_xy = 1;
        }
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[order[i]];
    }
    std::vector<double> buf(n);
    c.discordant = merge_count(ys, buf, 0, n);

    std::int64_t run_y = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i < n && ys[i] == ys[i - 1]) {
            ++run_y;
        } else {
            c.ties_y += pairs_of(run_y);
            run_y = 1;
        }
    }
    return c;
}

double tau_b(const TauCounts& c) {
    const std::int64_t untied_x = c.pairs - c.ties_x;
    const std::int64_t untied_y = c.pairs - c.ties_y;
    if (untied_x <= 0 || untied_y <= 0) {
        throw Error(Errc::too_few, "tau is undefined when a ranking has no untied pairs");
    }
    const auto numerator = static_cast<double>(c.concordant() - c.discordant);
    if (c.ties_x == 0 && c.ties_y == 0) {
        return numerator / static_cast<double>(c.pairs);
    }
    return numerator / std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2) {
        throw Error(Errc::too_few, "need at least two paired observations");
    }
    return tau_b(tau_counts(x, y));
}

double kendall_tau(std::span<const std::string> rank_a, std::span<const std::string> rank_b) {
    if (rank_a.size() < 2 || rank_b.size() < 2) {
        throw Error(Errc::too_few, "need at least two ranked ids");
    }
    if (rank_a.size() != rank_b.size()) {
        throw Error(Errc::id_set_mismatch, "rankings have different lengths");
    }
    std::unordered_map<std::string_view, std::size_t> pos_b;
    pos_b.reserve(rank_b.size());
    for (std::size_t i = 0; i < rank_b.size(); ++i) {
        if (!pos_b.emplace(rank_b[i], i).second) {
            throw Error(Errc::id_set_mismatch, "duplicate id in ranking: " + rank_b[i]);
        }
    }
    std::vector<double> xa(rank_a.size());
    std::vector<double> xb(rank_a.size());
    std::unordered_set<std::string_view> seen_a;
    seen_a.reserve(rank_a.size());
    for (std::size_t i = 0; i < rank_a.size(); ++i) {
        auto it = pos_b.find(rank_a[i]);
        if (it == pos_b.end()) {
            throw Error(Errc::id_set_mismatch, rank_a[i] + " appears in only one ranking");
        }
        if (!seen_a.insert(rank_a[i]).second) {
            throw Error(Errc::id_set_mismatch, "duplicate id in ranking: " + rank_a[i]);
        }
        xa[i] = static_cast<double>(i);
        xb[i] = static_cast<double>(it->second);
    }
    return kendall_tau_b(xa, xb);
}

double iou(std::span<const std::string> set_a, std::span<const std::string> set_b) {
    if (set_a.empty() || set_b.empty()) {
        throw Error(Errc::empty_set, "IOU needs two non-empty sets");
    }
    std::unordered_set<std::string_view> a(set_a.begin(), set_a.end());
    std::unordered_set<std::string_view> b(set_b.begin(), set_b.end());
    std::size_t inter = 0;
    for (const auto& id : a) {
        inter += b.contains(id) ? 1 : 0;
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> top_fraction(std::span<const std::string> ranking, double fraction_percent) {
    if (ranking.empty()) {
        return {};
    }
    const int count = per_cluster_quota(static_cast<int>(ranking.size()), fraction_percent);
    return {ranking.begin(), ranking.begin() + count};
}

TransferReport transfer_report(std::span<const std::string> rank_a, std::span<const std::string> rank_b,
                               std::span<const double> fractions, std::pair<std::string, std::string> tags) {
    TransferReport r;
    r.kendall_tau = kendall_tau(rank_a, rank_b);
    r.n_common = rank_a.size();
    r.source_tags = std::move(tags);
    for (double f : fractions) {
        if (!(f > 0.0) || f > 100.0) {
            throw Error(Errc::invalid_argument, "IOU fractions must be in (0, 100]");
        }
        const auto a = top_fraction(rank_a, f);
        const auto b = top_fraction(rank_b, f);
        if (a.empty()) {
            throw Error(Errc::empty_set, "fraction " + std::to_string(f) + "% selects no ids");
        }
        r.iou_by_fraction[f] = iou(a, b);
    }
    return r;
}

std::size_t char_count(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        n += (c & 0xC0) != 0x80 ? 1 : 0;
    }
    return n;
}

SubsetStats subset_stats(std::span<const std::string> ids, std::span<const SampleRecord> corpus,
                         std::span<const ClusterAssignment> clusters) {
    std::unordered_map<std::string_view, const SampleRecord*> by_id;
    by_id.reserve(corpus.size());
    for (const auto& r : corpus) {
        by_id.emplace(r.id, &r);
    }
    const auto cluster_of = cluster_index(clusters);
    SubsetStats s;
    double out_chars = 0.0;
    double ins_chars = 0.0;
    for (const auto& id : ids) {
        auto rec = by_id.find(id);
        if (rec == by_id.end()) {
            throw Error(Errc::unknown_id, id + " is not in the corpus");
        }
        auto cl = cluster_of.find(id);
        if (cl == cluster_of.end()) {
            throw Error(Errc::unknown_id, id + " has no cluster assignment");
        }
        ++s.n;
        out_chars += static_cast<double>(char_count(rec->second->output));
        ins_chars += static_cast<double>(char_count(rec->second->instruction));
        s.empty_output_count += rec->second->output.empty() ? 1 : 0;
        ++s.per_cluster_counts[cl->second];
    }
    if (s.n > 0) {
        s.mean_output_chars = out_chars / static_cast<double>(s.n);
        s.mean_instruction_chars = ins_chars / static_cast<double>(s.n);
    }
    return s;
}

namespace {

std::string fraction_key(double f) {
    std::ostringstream ss;
    ss << f;
    return ss.str();
}

json stats_json(const SubsetStats& s) {
    json per_cluster = json::object();
    for (const auto& [c, count] : s.per_cluster_counts) {
        per_cluster[std::to_string(c)] = count;
    }
    return json{{"n", s.n},
                {"mean_output_chars", s.mean_output_chars},
                {"mean_instruction_chars", s.mean_instruction_chars},
                {"empty_output_count", s.empty_output_count},
                {"per_cluster_counts", per_cluster}};
}

}  // namespace

std::string to_json(const TransferReport& r) {
    json ious = json::object();
    for (const auto& [f, v] : r.iou_by_fraction) {
        ious[fraction_key(f)] = v;
    }
    json doc{{"kendall_tau", r.kendall_tau},
             {"n_common", r.n_common},
             {"iou_by_fraction", ious},
             {"source_tags", json::array({r.source_tags.first, r.source_tags.second})}};
    return doc.dump(2) + "\n";
}

std::string to_json(const SubsetStats& s) { return stats_json(s).dump(2) + "\n"; }

std::string iou_csv(const TransferReport& r) {
    std::ostringstream ss;
    ss << "fraction_percent,iou\n";
    for (const auto& [f, v] : r.iou_by_fraction) {
        ss << fraction_key(f) << ',' << json(v).dump() << '\n';
    }
    return ss.str();
}

}  // namespace lpsel
