#include "lpselect/ref_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "lpselect/corpus_io.hpp"
#include "lpselect/error.hpp"
#include "lpselect/parallel.hpp"
#include "lpselect/random.hpp"

namespace lpsel {

namespace {

struct Encoded {
    std::vector<int> stream;     // BOS prompt EOS output
    std::size_t first_target = 0;
    std::vector<int> buckets;    // hashed prompt words, with repeats
};

std::size_t word_bucket(std::string_view word, int buckets) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : word) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(mix64(h) % static_cast<std::uint64_t>(buckets));
}

Encoded encode(const SampleRecord& s, int buckets) {
    std::string prompt = s.instruction;
    if (!s.input.empty()) {
        prompt += '\n';
        prompt += s.input;
    }
    Encoded e;
    e.stream.reserve(prompt.size() + s.output.size() + 2);
    e.stream.push_back(kBos);
    for (unsigned char c : prompt) {
        e.stream.push_back(c);
    }
    e.stream.push_back(kEos);
    e.first_target = e.stream.size();
    for (unsigned char c : s.output) {
        e.stream.push_back(c);
    }
    std::size_t start = 0;
    auto is_word = [](unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; };
    for (std::size_t i = 0; i <= prompt.size(); ++i) {
        if (i < prompt.size() && is_word(static_cast<unsigned char>(prompt[i]))) {
            continue;
        }
        if (i > start) {
            e.buckets.push_back(static_cast<int>(word_bucket(std::string_view(prompt).substr(start, i - start), buckets)));
        }
        start = i + 1;
    }
    return e;
}

struct Params {
    std::vector<float> emb;     // V x e
    std::vector<float> prompt;  // B x e
    std::vector<float> w1;      // H x in
    std::vector<float> b1;      // H
    std::vector<float> w2;      // V x H
    std::vector<float> b2;      // V

    void zero() {
        for (auto* v : {&emb, &prompt, &w1, &b1, &w2, &b2}) {
            std::fill(v->begin(), v->end(), 0.0f);
        }
    }
};

struct Workspace {
    std::vector<float> pvec;  // mean prompt embedding
    std::vector<float> x;
    std::vector<float> h;
    std::vector<float> z;
    std::vector<float> dh;
    std::vector<float> dx;
};

class ByteModel {
public:
    explicit ByteModel(const TrainerConfig& cfg)
        : e_(static_cast<std::size_t>(cfg.embed_dim)), c_(static_cast<std::size_t>(cfg.context)),
          h_(static_cast<std::size_t>(cfg.hidden_dim)), b_(static_cast<std::size_t>(cfg.prompt_buckets)),
          in_((c_ + 1) * e_) {
        const auto v = static_cast<std::size_t>(kVocabSize);
        p_.emb.assign(v * e_, 0.0f);
        p_.prompt.assign(b_ * e_, 0.0f);
        p_.w1.assign(h_ * in_, 0.0f);
        p_.b1.assign(h_, 0.0f);
        p_.w2.assign(v * h_, 0.0f);
        p_.b2.assign(v, 0.0f);
        g_ = p_;

        Rng rng(substream_seed(cfg.seed, 0x1217));
        auto fill = [&](std::vector<float>& w, double scale) {
            for (auto& x : w) {
                x = static_cast<float>((2.0 * uniform01(rng) - 1.0) * scale);
            }
        };
        fill(p_.emb, 1.0);
        fill(p_.prompt, 1.0);
        fill(p_.w1, std::sqrt(3.0 / static_cast<double>(in_)));
        // w2 and b2 stay zero: the untrained model is uniform over the vocabulary.
    }

    Workspace workspace() const {
        return {std::vector<float>(e_), std::vector<float>(in_), std::vector<float>(h_),
                std::vector<float>(kVocabSize), std::vector<float>(h_), std::vector<float>(in_)};
    }

    void prepare(const Encoded& s, Workspace& ws) const {
        std::fill(ws.pvec.begin(), ws.pvec.end(), 0.0f);
        if (s.buckets.empty()) {
            return;
        }
        for (int b : s.buckets) {
            const float* row = &p_.prompt[static_cast<std::size_t>(b) * e_];
            for (std::size_t j = 0; j < e_; ++j) {
                ws.pvec[j] += row[j];
            }
        }
        const float inv = 1.0f / static_cast<float>(s.buckets.size());
        for (auto& x : ws.pvec) {
            x *= inv;
        }
    }

    // Log-probability of stream[t] given the preceding context; leaves the
    // softmax distribution in ws.z.
    double forward(const Encoded& s, std::size_t t, Workspace& ws) const {
        for (std::size_t k = 0; k < c_; ++k) {
            const int sym = t >= c_ - k ? s.stream[t - (c_ - k)] : kBos;
            std::copy_n(&p_.emb[static_cast<std::size_t>(sym) * e_], e_, &ws.x[k * e_]);
        }
        std::copy_n(ws.pvec.data(), e_, &ws.x[c_ * e_]);
        for (std::size_t j = 0; j < h_; ++j) {
            const float* w = &p_.w1[j * in_];
            float a = p_.b1[j];
            for (std::size_t i = 0; i < in_; ++i) {
                a += w[i] * ws.x[i];
            }
            ws.h[j] = std::tanh(a);
        }
        float zmax = -INFINITY;
        for (std::size_t v = 0; v < static_cast<std::size_t>(kVocabSize); ++v) {
            const float* w = &p_.w2[v * h_];
            float z = p_.b2[v];
            for (std::size_t j = 0; j < h_; ++j) {
                z += w[j] * ws.h[j];
            }
            ws.z[v] = z;
            zmax = std::max(zmax, z);
        }
        double sum = 0.0;
        for (auto& z : ws.z) {
            z = std::exp(z - zmax);
            sum += z;
        }
        const auto target = static_cast<std::size_t>(s.stream[t]);
        const double logp = std::log(static_cast<double>(ws.z[target])) - std::log(sum);
        const auto inv = static_cast<float>(1.0 / sum);
        for (auto& z : ws.z) {
            z *= inv;
        }
        return logp;
    }

    // Accumulates weight * d(-log p)/d(params) for the last forward().
    void backward(const Encoded& s, std::size_t t, float weight, Workspace& ws) {
        const auto target = static_cast<std::size_t>(s.stream[t]);
        std::fill(ws.dh.begin(), ws.dh.end(), 0.0f);
        for (std::size_t v = 0; v < static_cast<std::size_t>(kVocabSize); ++v) {
            const float dz = weight * (ws.z[v] - (v == target ? 1.0f : 0.0f));
            g_.b2[v] += dz;
            float* gw = &g_.w2[v * h_];
            const float* w = &p_.w2[v * h_];
            for (std::size_t j = 0; j < h_; ++j) {
                gw[j] += dz * ws.h[j];
                ws.dh[j] += dz * w[j];
            }
        }
        std::fill(ws.dx.begin(), ws.dx.end(), 0.0f);
        for (std::size_t j = 0; j < h_; ++j) {
            const float da = ws.dh[j] * (1.0f - ws.h[j] * ws.h[j]);
            g_.b1[j] += da;
            float* gw = &g_.w1[j * in_];
            const float* w = &p_.w1[j * in_];
            for (std::size_t i = 0; i < in_; ++i) {
                gw[i] += da * ws.x[i];
                ws.dx[i] += da * w[i];
            }
        }
        for (std::size_t k = 0; k < c_; ++k) {
            const int sym = t >= c_ - k ? s.stream[t - (c_ - k)] : kBos;
            float* g = &g_.emb[static_cast<std::size_t>(sym) * e_];
            for (std::size_t j = 0; j < e_; ++j) {
                g[j] += ws.dx[k * e_ + j];
            }
        }
        if (!s.buckets.empty()) {
            const float inv = 1.0f / static_cast<float>(s.buckets.size());
            for (int b : s.buckets) {
                float* g = &g_.prompt[static_cast<std::size_t>(b) * e_];
                for (std::size_t j = 0; j < e_; ++j) {
                    g[j] += inv * ws.dx[c_ * e_ + j];
                }
            }
        }
    }

    void step(float lr) {
        auto apply = [lr](std::vector<float>& w, std::vector<float>& g) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] -= lr * g[i];
            }
        };
        apply(p_.emb, g_.emb);
        apply(p_.prompt, g_.prompt);
        apply(p_.w1, g_.w1);
        apply(p_.b1, g_.b1);
        apply(p_.w2, g_.w2);
        apply(p_.b2, g_.b2);
        g_.zero();
    }

    double mean_nll(const Encoded& s, Workspace& ws) const {
        prepare(s, ws);
        double total = 0.0;
        for (std::size_t t = s.first_target; t < s.stream.size(); ++t) {
            total -= forward(s, t, ws);
        }
        return total / static_cast<double>(s.stream.size() - s.first_target);
    }

private:
    std::size_t e_;
    std::size_t c_;
    std::size_t h_;
    std::size_t b_;
    std::size_t in_;
    Params p_;
    Params g_;
};

void check_config(const TrainerConfig& cfg) {
    if (cfg.epochs < 1 || cfg.hidden_dim < 2 || cfg.embed_dim < 1 || cfg.context < 1 || cfg.prompt_buckets < 1 ||
        !(cfg.lr > 0.0) || cfg.batch_size < 1) {
        throw Error(Errc::invalid_argument,
                    "trainer needs epochs >= 1, hidden_dim >= 2, embed_dim/context/prompt_buckets/batch_size >= 1, "
                    "lr > 0");
    }
}

}  // namespace

TraceSet train_and_trace(std::span<const SampleRecord> corpus, const TrainerConfig& cfg) {
    check_config(cfg);
    if (corpus.empty()) {
        throw Error(Errc::empty_corpus, "nothing to train on");
    }
    std::vector<Encoded> encoded;
    encoded.reserve(corpus.size());
    for (const auto& s : corpus) {
        encoded.push_back(encode(s, cfg.prompt_buckets));
    }
    std::vector<std::size_t> trainable;
    TraceSet out;
    out.config = cfg;
    out.corpus_hash = corpus_hash(corpus);
    out.traces.resize(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        out.traces[i].id = corpus[i].id;
        out.traces[i].ppl.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
        if (corpus[i].output.empty()) {
            out.empty_output_ids.push_back(corpus[i].id);
        } else {
            trainable.push_back(i);
        }
    }

    ByteModel model(cfg);
    const int threads = std::max(1, cfg.threads);
    std::vector<Workspace> spaces;
    for (int w = 0; w < threads; ++w) {
        spaces.push_back(model.workspace());
    }
    std::vector<double> nll(corpus.size(), std::log(static_cast<double>(kVocabSize)));
    auto evaluate = [&] {
        // One workspace per contiguous chunk, matching parallel_for's split.
        const std::size_t n = trainable.size();
        const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));
        const std::size_t chunk = (n + workers - 1) / workers;
        parallel_for(workers, static_cast<int>(workers), [&](std::size_t w) {
            const std::size_t end = std::min(n, (w + 1) * chunk);
            for (std::size_t k = w * chunk; k < end; ++k) {
                nll[trainable[k]] = model.mean_nll(encoded[trainable[k]], spaces[w]);
            }
        });
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            out.traces[i].ppl.push_back(std::exp(nll[i]));
        }
    };

    evaluate();
    Workspace& ws = spaces.front();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = trainable;
        Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_below(rng, i))]);
        }
        const auto lr = static_cast<float>(cfg.lr / std::sqrt(static_cast<double>(epoch)));
        const auto batch = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const auto in_batch = static_cast<float>(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                const Encoded& s = encoded[order[k]];
                const float weight = 1.0f / (in_batch * static_cast<float>(s.stream.size() - s.first_target));
                model.prepare(s, ws);
                for (std::size_t t = s.first_target; t < s.stream.size(); ++t) {
                    model.forward(s, t, ws);
                    model.backward(s, t, weight, ws);
                }
            }
            model.step(lr);
        }
        evaluate();
    }
    return out;
}

std::string trace_meta_json(const TraceSet& set) {
    const auto& c = set.config;
    nlohmann::json doc{{"corpus_hash", set.corpus_hash},
                       {"epochs", c.epochs},
                       {"hidden_dim", c.hidden_dim},
                       {"embed_dim", c.embed_dim},
                       {"context", c.context},
                       {"prompt_buckets", c.prompt_buckets},
                       {"lr", c.lr},
                       {"lr_schedule", "lr / sqrt(epoch)"},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"vocab_size", kVocabSize},
                       {"perplexity", "exp(mean NLL over output bytes, prompt-conditioned)"},
                       {"empty_output_ids", set.empty_output_ids}};
    return doc.dump(2) + "\n";
}

}  // namespace lpsel
