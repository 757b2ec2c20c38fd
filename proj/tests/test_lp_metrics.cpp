#include <doctest.h>

#include <algorithm>
#include <set>

#include "lpselect/error.hpp"
#include "lpselect/lp_metrics.hpp"
#include "oracles.hpp"

using namespace lpsel;

namespace {

PerplexityTrace tr(std::vector<double> p, std::string id = "x") { return {std::move(id), std::move(p)}; }

}  // namespace

TEST_CASE("lp_exact worked examples") {
    auto s = lp_exact(tr({100, 40, 20, 10}), 1);
    CHECK(s.value == doctest::Approx(60.0 / 90.0).epsilon(1e-12));
    CHECK(s.value == oracle::lp({100, 40, 20, 10}, 1));
    CHECK_FALSE(s.degenerate);
    CHECK(s.metric == Metric::lp);
    CHECK(s.epoch == 1);

    CHECK(lp_exact(tr({50, 10, 10, 10}), 1).value == 1.0);
    CHECK(lp_exact(tr({50, 50, 20, 10}), 1).value == 0.0);

    auto d = lp_exact(tr({30, 30, 30, 30}), 1);
    CHECK(d.degenerate);
    CHECK(d.value == 1.0);
}

TEST_CASE("lp_exact passes unclamped values through") {
    auto neg = lp_exact(tr({100, 120, 50, 40}), 1);
    CHECK(neg.value == doctest::Approx(-20.0 / 60.0));
    CHECK_FALSE(neg.degenerate);
    auto big = lp_exact(tr({100, 20, 50, 60}), 1);
    CHECK(big.value == doctest::Approx(2.0));
    // Net increase: the raw signed ratio.
    CHECK(lp_exact(tr({10, 20}), 1).value == doctest::Approx(1.0));
    CHECK(lp_exact(tr({10, 5, 20}), 1).value == doctest::Approx(5.0 / -10.0));
}

TEST_CASE("lp_exact tolerance") {
    CHECK(lp_exact(tr({10, 9, 10 - 1e-10}), 1).degenerate);
    CHECK_FALSE(lp_exact(tr({10, 9, 10 - 1e-10}), 1, 1e-12).degenerate);
}

TEST_CASE("lp_approx worked examples") {
    CHECK(lp_approx(tr({100, 40}), 1).value == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(lp_approx(tr({100, 100}), 1).value == 0.0);
    CHECK(lp_approx(tr({100, 120}), 1).value == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK_FALSE(lp_approx(tr({100, 100}), 1).degenerate);
    CHECK(lp_approx(tr({100, 40, 30}), 2).value == doctest::Approx(0.1));
    CHECK(lp_approx(tr({100, 40}), 1).metric == Metric::lp_app);
}

TEST_CASE("epoch out of range") {
    for (int e : {0, 4, -1}) {
        CHECK_THROWS_AS(lp_exact(tr({4, 3, 2, 1}), e), Error);
        CHECK_THROWS_AS(lp_approx(tr({4, 3, 2, 1}), e), Error);
    }
    try {
        score_trace(tr({4, 3}), {Metric::lp, 2});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::epoch_out_of_range);
    }
}

TEST_CASE("property: per-epoch LP sums to one") {
    oracle::Gen g(11);
    for (int k = 0; k < 1000; ++k) {
        const int n = g.integer(1, 8);
        auto t = tr(g.trace(n));
        double sum = 0;
        for (int i = 1; i <= n; ++i) {
            sum += lp_exact(t, i).value;
        }
        REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("property: lp_exact is scale invariant") {
    oracle::Gen g(12);
    for (int k = 0; k < 500; ++k) {
        auto p = g.trace(g.integer(1, 5));
        const double c = g.uniform(1e-3, 1e3);
        auto q = p;
        for (auto& v : q) v *= c;
        const int i = g.integer(1, static_cast<int>(p.size()) - 1);
        REQUIRE(std::abs(lp_exact(tr(p), i).value - lp_exact(tr(q), i).value) < 1e-9);
    }
}

TEST_CASE("property: lp_app ranking is invariant under a common scale") {
    oracle::Gen g(13);
    std::vector<PerplexityTrace> a, b;
    const double c = 7.25;
    for (int k = 0; k < 300; ++k) {
        auto p = g.trace(3);
        a.push_back(tr(p, "s" + std::to_string(k)));
        for (auto& v : p) v *= c;
        b.push_back(tr(p, "s" + std::to_string(k)));
    }
    MetricConfig cfg{Metric::lp_app, 1};
    CHECK(rank_ascending(score_traces(a, cfg)) == rank_ascending(score_traces(b, cfg)));
}

TEST_CASE("property: LP(1) strictly decreases as P_1 rises") {
    oracle::Gen g(14);
    for (int k = 0; k < 200; ++k) {
        const double p0 = g.uniform(100, 200), pn = g.uniform(1, 50);
        double last = 1e300;
        for (double p1 = 1.0; p1 < 300.0; p1 += g.uniform(0.5, 10.0)) {
            const double v = lp_exact(tr({p0, p1, pn}), 1).value;
            REQUIRE(v < last);
            last = v;
        }
    }
}

TEST_CASE("rank_ascending") {
    std::vector<ScoreRecord> s{{"a", Metric::lp, 1, 0.9}, {"b", Metric::lp, 1, 0.1}, {"c", Metric::lp, 1, 0.5}};
    CHECK(rank_ascending(s) == std::vector<std::string>{"b", "c", "a"});
    std::vector<ScoreRecord> tie{{"b", Metric::lp, 1, 0.5}, {"a", Metric::lp, 1, 0.5}};
    CHECK(rank_ascending(tie) == std::vector<std::string>{"a", "b"});
    s.push_back({"a", Metric::lp, 1, 0.2});
    try {
        rank_ascending(s);
        FAIL("expected DuplicateScore");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::duplicate_score);
    }
}

TEST_CASE("property: ranking is a permutation, hardest first, idempotent") {
    oracle::Gen g(15);
    std::vector<ScoreRecord> s;
    for (int i = 0; i < 1000; ++i) {
        // Coarse values force plenty of ties.
        s.push_back({"id" + std::to_string(i), Metric::lp, 1, std::round(g.uniform(-1, 2) * 20) / 20});
    }
    const auto r = rank_ascending(s);
    CHECK(std::set<std::string>(r.begin(), r.end()).size() == s.size());
    double min_v = s[0].value;
    for (const auto& x : s) min_v = std::min(min_v, x.value);
    const auto first = std::find_if(s.begin(), s.end(), [&](const ScoreRecord& x) { return x.id == r[0]; });
    CHECK(first->value == min_v);

    std::vector<ScoreRecord> reordered;
    for (const auto& id : r) {
        reordered.push_back(*std::find_if(s.begin(), s.end(), [&](const ScoreRecord& x) { return x.id == id; }));
    }
    CHECK(rank_ascending(reordered) == r);
}

TEST_CASE("score_traces is independent of thread count") {
    oracle::Gen g(16);
    std::vector<PerplexityTrace> t;
    for (int i = 0; i < 777; ++i) t.push_back(tr(g.trace(3), "t" + std::to_string(i)));
    const auto one = score_traces(t, {});
    for (int threads : {2, 3, 8}) {
        CHECK(score_traces(t, {}, threads) == one);
    }
}
