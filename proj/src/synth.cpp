#include <array>
#include <cmath>
#include <cstdio>

#include "lpselect/error.hpp"
#include "lpselect/random.hpp"
#include "lpselect/ref_trainer.hpp"

namespace lpsel {

namespace {

constexpr double kTotalDrop = 0.6;  // P_n = 0.4 * P_0

std::string numbered(const char* prefix, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s-%05zu", prefix, i);
    return buf;
}

// Epoch-wise shares of the total drop; they sum to 1.
std::vector<double> drop_shares(Population pop, int epochs, double first) {
    const auto n = static_cast<std::size_t>(epochs);
    std::vector<double> f(n, 0.0);
    if (n == 1) {
        f[0] = 1.0;
        return f;
    }
    if (pop == Population::noisy && n >= 3) {
        f[0] = first;
        f[1] = -0.3;
        const double rest = (1.0 - f[0] - f[1]) / static_cast<double>(n - 2);
        for (std::size_t i = 2; i < n; ++i) f[i] = rest;
        return f;
    }
    f[0] = first;
    const double rest = (1.0 - first) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) f[i] = rest;
    return f;
}

constexpr std::array<const char*, 8> kTopics = {
    "You are helping a home gardener who asks about soil, seeds, watering and seasonal planting in a small backyard plot.",
    "You are assisting a traveler who is planning train routes, hotel stays and museum visits across several old cities.",
    "You are tutoring a student who is practicing fractions, decimals and percentages for an upcoming arithmetic quiz.",
    "You are advising a small bakery owner about bread recipes, oven temperatures, flour types and morning schedules.",
    "You are guiding a new programmer through loops, functions, variables and reading error messages in a script.",
    "You are helping a runner prepare for a long race with pacing plans, stretching routines and weekly mileage goals.",
    "You are supporting a librarian who sorts donated books by genre, author surname, condition and shelf location.",
    "You are coaching a beginner photographer on light, framing, shutter speed and choosing lenses for portraits.",
};

constexpr std::array<const char*, 24> kItems = {
    "lantern", "harbor", "maple",  "quartz", "saddle", "violet", "ember",  "falcon",
    "meadow",  "copper", "thistle", "beacon", "walnut", "orchid", "glacier", "pepper",
    "compass", "juniper", "marble", "tundra", "willow", "cobalt", "saffron", "hazel",
};

constexpr const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz";

std::string easy_output(const std::string& item) {
    return "Sure. The " + item + " is a common item here, and it is easy to find and simple to use.";
}

// Zipf-like pick: item r has weight 1 / (r + 1).
std::size_t pick_item(Rng& rng) {
    static const auto cumulative = [] {
        std::array<double, kItems.size()> c{};
        double acc = 0.0;
        for (std::size_t r = 0; r < kItems.size(); ++r) {
            acc += 1.0 / static_cast<double>(r + 1);
            c[r] = acc;
        }
        return c;
    }();
    const double u = uniform01(rng) * cumulative.back();
    for (std::size_t r = 0; r < kItems.size(); ++r) {
        if (u < cumulative[r]) {
            return r;
        }
    }
    return kItems.size() - 1;
}

std::string random_text(Rng& rng, std::size_t len) {
    std::string out;
    out.reserve(len + len / 6);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(kAlphabet[uniform_below(rng, 26)]);
        if (i % 6 == 5 && i + 1 < len) {
            out.push_back(' ');
        }
    }
    return out;
}

// Random "code" tail lengths. Easy tails stay below the hard range, so
// difficulty is graded across the whole corpus.
constexpr std::uint64_t kEasyTailMax = 120;
constexpr std::uint64_t kHardTailMin = 120;
constexpr std::uint64_t kHardTailMax = 400;

SampleRecord planted_sample(std::string id, Population pop, Rng& rng) {
    const std::string topic = kTopics[uniform_below(rng, kTopics.size())];
    const std::string item = kItems[pick_item(rng)];
    SampleRecord r;
    r.id = std::move(id);
    r.instruction = topic + " Describe the " + item + " in one sentence.";
    switch (pop) {
        case Population::easy: {
            const auto tail = static_cast<std::size_t>(uniform_below(rng, kEasyTailMax));
            r.output = easy_output(item);
            if (tail > 0) {
                r.output += " Code: " + random_text(rng, tail);
            }
            break;
        }
        case Population::hard: {
            const auto tail = static_cast<std::size_t>(kHardTailMin + uniform_below(rng, kHardTailMax - kHardTailMin + 1));
            r.output = easy_output(item) + " Code: " + random_text(rng, tail);
            break;
        }
        case Population::noisy: break;  // missing response
    }
    return r;
}

}  // namespace

SynthTraces synth_traces(const SynthSpec& spec) {
    const std::size_t total = spec.n_easy + spec.n_hard + spec.n_noisy;
    if (total == 0) {
        throw Error(Errc::invalid_argument, "synth needs at least one trace");
    }
    if (spec.epochs < 1) {
        throw Error(Errc::invalid_argument, "synth needs epochs >= 1");
    }
    if (!(spec.jitter >= 0.0) || spec.jitter > 0.05) {
        throw Error(Errc::invalid_argument, "jitter must be in [0, 0.05]");
    }
    SynthTraces out;
    out.traces.reserve(total);
    auto emit = [&](Population pop, std::size_t count, const char* prefix, double lp1) {
        for (std::size_t i = 0; i < count; ++i) {
            Rng rng(substream_seed(spec.seed, out.traces.size()));
            const double p0 = 100.0 * (1.0 + spec.jitter * (2.0 * uniform01(rng) - 1.0));
            const double first = lp1 + spec.jitter * (2.0 * uniform01(rng) - 1.0);
            PerplexityTrace t;
            t.id = numbered(prefix, i);
            t.ppl.push_back(p0);
            if (pop == Population::noisy && spec.epochs == 1) {
                t.ppl.push_back(p0 * 1.2);
            } else {
                const double drop = kTotalDrop * p0;
                const auto shares = drop_shares(pop, spec.epochs, first);
                double cum = 0.0;
                for (std::size_t e = 0; e + 1 < shares.size(); ++e) {
                    cum += shares[e];
                    t.ppl.push_back(p0 - drop * cum);
                }
                t.ppl.push_back(p0 - drop);
            }
            out.traces.push_back(std::move(t));
            out.labels.push_back(pop);
        }
    };
    emit(Population::easy, spec.n_easy, "easy", 0.9);
    emit(Population::hard, spec.n_hard, "hard", 0.1);
    // With two epochs the epoch-1 share must exceed 1 for epoch 2 to rise.
    emit(Population::noisy, spec.n_noisy, "noisy", spec.epochs == 2 ? 1.3 : 0.6);

    Rng rng(substream_seed(spec.seed, 0xffffffffULL));
    for (std::size_t i = total; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(out.traces[i - 1], out.traces[j]);
        std::swap(out.labels[i - 1], out.labels[j]);
    }
    return out;
}

PlantedCorpus planted_corpus(const PlantedSpec& spec) {
    if (spec.n == 0 || !(spec.hard_fraction >= 0.0) || spec.hard_fraction > 1.0) {
        throw Error(Errc::invalid_argument, "planted corpus needs n >= 1 and hard_fraction in [0, 1]");
    }
    const auto n_hard = static_cast<std::size_t>(std::floor(spec.hard_fraction * static_cast<double>(spec.n) + 0.5));
    PlantedCorpus out;
    out.labels.assign(spec.n, Population::easy);
    std::fill_n(out.labels.begin(), n_hard, Population::hard);
    Rng shuffle(substream_seed(spec.seed, 0xfffffffeULL));
    for (std::size_t i = spec.n; i > 1; --i) {
        std::swap(out.labels[i - 1], out.labels[static_cast<std::size_t>(uniform_below(shuffle, i))]);
    }
    out.samples.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Rng rng(substream_seed(spec.seed, i));
        out.samples.push_back(planted_sample(numbered("p", i), out.labels[i], rng));
    }
    return out;
}

std::vector<SampleRecord> synth_corpus(const SynthTraces& synth, std::uint64_t seed) {
    std::vector<SampleRecord> out;
    out.reserve(synth.traces.size());
    for (std::size_t i = 0; i < synth.traces.size(); ++i) {
        Rng rng(substream_seed(seed, i));
        out.push_back(planted_sample(synth.traces[i].id, synth.labels[i], rng));
    }
    return out;
}

}  // namespace lpsel
