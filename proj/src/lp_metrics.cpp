#include "lpselect/lp_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "lpselect/error.hpp"
#include "lpselect/parallel.hpp"

namespace lpsel {

namespace {

void check_epoch(const PerplexityTrace& trace, int epoch) {
    const int n = trace.epochs();
    if (epoch < 1 || epoch > n) {
        throw Error(Errc::epoch_out_of_range,
                    trace.id + ": epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(n) + "]");
    }
}

}  // namespace

ScoreRecord lp_exact(const PerplexityTrace& trace, int epoch, double tol) {
    check_epoch(trace, epoch);
    const auto& p = trace.ppl;
    const double drop = p[static_cast<std::size_t>(epoch) - 1] - p[static_cast<std::size_t>(epoch)];
    const double total = p.front() - p.back();
    ScoreRecord s{trace.id, Metric::lp, epoch, 0.0, false};
    if (std::abs(total) < tol) {
        s.value = 1.0;
        s.degenerate = true;
    } else {
        s.value = drop / total;
    }
    return s;
}

ScoreRecord lp_approx(const PerplexityTrace& trace, int epoch) {
    check_epoch(trace, epoch);
    const auto& p = trace.ppl;
    const double drop = p[static_cast<std::size_t>(epoch) - 1] - p[static_cast<std::size_t>(epoch)];
    return ScoreRecord{trace.id, Metric::lp_app, epoch, drop / p.front(), false};
}

ScoreRecord score_trace(const PerplexityTrace& trace, const MetricConfig& cfg) {
    return cfg.metric == Metric::lp ? lp_exact(trace, cfg.epoch, cfg.denom_tolerance) : lp_approx(trace, cfg.epoch);
}

std::vector<ScoreRecord> score_traces(std::span<const PerplexityTrace> traces, const MetricConfig& cfg,
                                      int threads) {
    if (cfg.epoch < 1) {
        throw Error(Errc::epoch_out_of_range, "epoch must be >= 1");
    }
    if (!(cfg.denom_tolerance > 0.0)) {
        throw Error(Errc::invalid_argument, "denominator tolerance must be positive");
    }
    std::vector<ScoreRecord> out(traces.size());
    parallel_for(traces.size(), threads, [&](std::size_t i) { out[i] = score_trace(traces[i], cfg); });
    return out;
}

std::vector<std::string> rank_ascending(std::span<const ScoreRecord> scores) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(scores.size());
    for (const auto& s : scores) {
        if (!seen.insert(s.id).second) {
            throw Error(Errc::duplicate_score, s.id);
        }
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = scores[a];
        const auto& y = scores[b];
        if (x.value != y.value) {
            return x.value < y.value;
        }
        return x.id < y.id;
    });
    std::vector<std::string> ids;
    ids.reserve(order.size());
    for (auto i : order) {
        ids.push_back(scores[i].id);
    }
    return ids;
}

}  // namespace lpsel
