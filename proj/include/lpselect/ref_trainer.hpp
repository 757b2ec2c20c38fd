#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpselect/types.hpp"

namespace lpsel {

// Byte-level vocabulary: 256 byte values plus BOS and EOS.
inline constexpr int kVocabSize = 258;
inline constexpr int kBos = 256;
inline constexpr int kEos = 257;

struct TrainerConfig {
    int epochs = 3;
    int hidden_dim = 64;
    int embed_dim = 16;
    int context = 4;             // preceding symbols fed to the predictor
    int prompt_buckets = 1024;   // hashed prompt-word features
    double lr = 0.1;             // epoch e trains at lr / sqrt(e)
    int batch_size = 1;          // samples per SGD step
    std::uint64_t seed = 0;
    int threads = 1;             // evaluation passes only
};

struct TraceSet {
    std::vector<PerplexityTrace> traces;  // corpus order
    TrainerConfig config;
    std::string corpus_hash;
    std::vector<std::string> empty_output_ids;
};

/// Trains a next-byte predictor (embedding + one tanh hidden layer +
/// softmax) on the corpus and records each sample's perplexity before
/// training and after every epoch.
///
/// The predictor sees the `context` preceding symbols of the stream
/// BOS, prompt bytes, EOS, output bytes, plus the mean of hashed prompt-word
/// embeddings. Perplexity is exp(mean NLL) over the output bytes only. The
/// output layer starts at zero, so every P_0 equals the vocabulary size.
/// Samples with an empty output are left out of training and get the
/// uniform perplexity at every boundary.
///
/// Shuffling is fixed per (seed, epoch); results are identical for any
/// `threads`. Throws Error(empty_corpus) on an empty corpus.
TraceSet train_and_trace(std::span<const SampleRecord> corpus, const TrainerConfig& cfg);

// Run metadata: config echo, corpus hash, empty-output ids.
std::string trace_meta_json(const TraceSet& set);

struct SynthSpec {
    std::size_t n_easy = 0;
    std::size_t n_hard = 0;
    std::size_t n_noisy = 0;
    int epochs = 3;
    std::uint64_t seed = 0;
    double jitter = 0.02;
};

enum class Population { easy, hard, noisy };

struct SynthTraces {
    std::vector<PerplexityTrace> traces;
    std::vector<Population> labels;
};

/// Parametric traces with a known learning pattern. Each trace drops 60%
/// from P_0 ~ 100 over training:
///   easy   LP(1) = 0.9 + jitter*u, rest spread over later epochs
///   hard   LP(1) = 0.1 + jitter*u, rest spread over later epochs
///   noisy  perplexity rises during epoch 2 (during epoch 1 if epochs == 1)
/// with u uniform in [-1, 1]. Ids are easy-N / hard-N / noisy-N, order
/// shuffled by seed.
SynthTraces synth_traces(const SynthSpec& spec);

struct PlantedSpec {
    std::size_t n = 2000;
    double hard_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct PlantedCorpus {
    std::vector<SampleRecord> samples;
    std::vector<Population> labels;
};

/// Instruction corpus with a planted difficulty split. Every output starts
/// with one shared template; easy samples append a random "code" of fewer
/// than 120 letters (often none), hard samples one of 120 to 400 letters, so
/// hard outputs are mostly unique high-entropy text. Prompts come from a
/// handful of topics so that topic, not difficulty, drives clustering.
PlantedCorpus planted_corpus(const PlantedSpec& spec);

// Stand-in corpus rows for synthetic traces (same ids, label-shaped text).
std::vector<SampleRecord> synth_corpus(const SynthTraces& synth, std::uint64_t seed);

}  // namespace lpsel
