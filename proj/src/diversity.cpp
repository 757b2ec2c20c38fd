#include "lpselect/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>

#include "lpselect/error.hpp"
#include "lpselect/parallel.hpp"
#include "lpselect/random.hpp"

namespace lpsel {

int auto_cluster_count(std::size_t n, int min_avg) {
    if (min_avg < 1) {
        throw Error(Errc::invalid_argument, "min_avg must be >= 1");
    }
    const auto k = n / static_cast<std::size_t>(min_avg);
    return static_cast<int>(std::clamp<std::size_t>(k, 1, std::numeric_limits<int>::max()));
}

namespace {

std::uint64_t hash_gram(std::string_view gram, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : gram) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h ^ mix64(seed));
}

std::string embed_text(const SampleRecord& s) {
    std::string text;
    for (const std::string* field : {&s.instruction, &s.input, &s.output}) {
        if (field->empty()) {
            continue;
        }
        if (!text.empty()) {
            text.push_back('\n');
        }
        text += *field;
    }
    return text;
}

double sq_dist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// Row-major N x d matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
};

class Lloyd {
public:
    Lloyd(const Matrix& points, int k, int threads)
        : points_(points), k_(static_cast<std::size_t>(k)), threads_(threads),
          centroids_{static_cast<std::size_t>(k), points.cols, std::vector<double>(k_ * points.cols, 0.0)},
          labels_(points.rows, -1), dist_(points.rows, 0.0) {}

    void seed_plus_plus(std::uint64_t seed) {
        const std::size_t n = points_.rows;
        const std::size_t d = points_.cols;
        Rng rng(seed);
        std::vector<char> chosen(n, 0);
        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        std::size_t pick = uniform_below(rng, n);
        for (std::size_t c = 0; c < k_; ++c) {
            chosen[pick] = 1;
            std::copy_n(points_.row(pick), d, centroids_.row(c));
            if (c + 1 == k_) {
                break;
            }
            parallel_for(n, threads_, [&](std::size_t i) {
                best[i] = std::min(best[i], sq_dist(points_.row(i), centroids_.row(c), d));
            });
            double total = 0.0;
            for (double b : best) {
                total += b;
            }
            if (total <= 0.0) {
                // Every point coincides with a center; take the next unused one.
                pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
                continue;
            }
            const double target = uniform01(rng) * total;
            double cum = 0.0;
            pick = n;
            std::size_t last_positive = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (best[i] <= 0.0) {
                    continue;
                }
                last_positive = i;
                cum += best[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                pick = last_positive;
            }
        }
    }

    // Moves each point to its nearest centroid; a point only leaves its
    // current cluster for a strictly closer one. Returns whether any moved.
    bool assign() {
        const std::size_t d = points_.cols;
        std::vector<char> moved(points_.rows, 0);
        parallel_for(points_.rows, threads_, [&](std::size_t i) {
            const double* p = points_.row(i);
            int best = labels_[i];
            double best_d = best >= 0 ? sq_dist(p, centroids_.row(static_cast<std::size_t>(best)), d)
                                      : std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k_; ++c) {
                const double dc = sq_dist(p, centroids_.row(c), d);
                if (dc < best_d) {
                    best_d = dc;
                    best = static_cast<int>(c);
                }
            }
            moved[i] = best != labels_[i];
            labels_[i] = best;
            dist_[i] = best_d;
        });
        return std::find(moved.begin(), moved.end(), 1) != moved.end();
    }

    // Reseeds each empty cluster at the point farthest from its centroid,
    // taken from a cluster that keeps at least one other member.
    void repair_empty() {
        std::vector<std::size_t> sizes(k_, 0);
        for (int l : labels_) {
            ++sizes[static_cast<std::size_t>(l)];
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (sizes[c] != 0) {
                continue;
            }
            std::size_t far = points_.rows;
            double far_d = -1.0;
            for (std::size_t i = 0; i < points_.rows; ++i) {
                if (sizes[static_cast<std::size_t>(labels_[i])] > 1 && dist_[i] > far_d) {
                    far_d = dist_[i];
                    far = i;
                }
            }
            --sizes[static_cast<std::size_t>(labels_[far])];
            labels_[far] = static_cast<int>(c);
            ++sizes[c];
            dist_[far] = 0.0;
            std::copy_n(points_.row(far), points_.cols, centroids_.row(c));
        }
    }

    // Centroids become cluster means, summed in point order.
    void update() {
        const std::size_t d = points_.cols;
        std::fill(centroids_.data.begin(), centroids_.data.end(), 0.0);
        std::vector<std::size_t> sizes(k_, 0);
        for (std::size_t i = 0; i < points_.rows; ++i) {
            const auto c = static_cast<std::size_t>(labels_[i]);
            double* cen = centroids_.row(c);
            const double* p = points_.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                cen[j] += p[j];
            }
            ++sizes[c];
        }
        for (std::size_t c = 0; c < k_; ++c) {
            double* cen = centroids_.row(c);
            for (std::size_t j = 0; j < d; ++j) {
                cen[j] /= static_cast<double>(sizes[c]);
            }
        }
    }

    double inertia() {
        const std::size_t d = points_.cols;
        parallel_for(points_.rows, threads_, [&](std::size_t i) {
            dist_[i] = sq_dist(points_.row(i), centroids_.row(static_cast<std::size_t>(labels_[i])), d);
        });
        double total = 0.0;
        for (double x : dist_) {
            total += x;
        }
        return total;
    }

    const std::vector<int>& labels() const { return labels_; }
    const Matrix& centroids() const { return centroids_; }

private:
    const Matrix& points_;
    std::size_t k_;
    int threads_;
    Matrix centroids_;
    std::vector<int> labels_;
    std::vector<double> dist_;
};

}  // namespace

std::vector<double> l2_normalized(std::span<const double> v) {
    double norm2 = 0.0;
    for (double x : v) {
        norm2 += x * x;
    }
    std::vector<double> out(v.begin(), v.end());
    if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : out) {
            x *= inv;
        }
    }
    return out;
}

EmbedResult fallback_embed(const SampleRecord& sample, int dim, std::uint64_t seed) {
    if (dim < 8) {
        throw Error(Errc::invalid_argument, "embedding dimension must be >= 8");
    }
    const std::string text = embed_text(sample);
    std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
    auto add = [&](std::string_view gram) {
        const std::uint64_t h = hash_gram(gram, seed);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        acc[(h & 0x7fffffffffffffffULL) % static_cast<std::uint64_t>(dim)] += sign;
    };
    if (text.size() < 3) {
        if (!text.empty()) {
            add(text);
        }
    } else {
        const std::string_view view(text);
        for (std::size_t i = 0; i + 3 <= view.size(); ++i) {
            add(view.substr(i, 3));
        }
    }
    EmbedResult r;
    r.record.id = sample.id;
    r.record.vec = l2_normalized(acc);
    r.zero = std::all_of(r.record.vec.begin(), r.record.vec.end(), [](double x) { return x == 0.0; });
    return r;
}

std::vector<EmbedResult> fallback_embed_all(std::span<const SampleRecord> corpus, int dim, std::uint64_t seed,
                                            int threads) {
    if (dim < 8) {
        throw Error(Errc::invalid_argument, "embedding dimension must be >= 8");
    }
    std::vector<EmbedResult> out(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) { out[i] = fallback_embed(corpus[i], dim, seed); });
    return out;
}

KMeansResult kmeans(std::span<const EmbeddingRecord> embeddings, const ClusterConfig& cfg) {
    const std::size_t n = embeddings.size();
    if (n == 0) {
        throw Error(Errc::too_few_points, "no embeddings");
    }
    const int k = cfg.k.value_or(auto_cluster_count(n, cfg.min_avg));
    if (k < 1) {
        throw Error(Errc::invalid_argument, "k must be >= 1");
    }
    if (n < static_cast<std::size_t>(k)) {
        throw Error(Errc::too_few_points, std::to_string(n) + " points for k=" + std::to_string(k));
    }
    if (cfg.max_iters < 1 || !(cfg.conv_tol > 0.0)) {
        throw Error(Errc::invalid_argument, "max_iters must be >= 1 and conv_tol > 0");
    }
    const std::size_t d = embeddings.front().vec.size();
    if (d == 0) {
        throw Error(Errc::dimension_mismatch, "zero-dimensional embeddings");
    }
    Matrix points{n, d, std::vector<double>(n * d)};
    for (std::size_t i = 0; i < n; ++i) {
        if (embeddings[i].vec.size() != d) {
            throw Error(Errc::dimension_mismatch, embeddings[i].id + " has dimension " +
                                                      std::to_string(embeddings[i].vec.size()) + ", expected " +
                                                      std::to_string(d));
        }
        auto unit = l2_normalized(embeddings[i].vec);
        std::copy(unit.begin(), unit.end(), points.row(i));
    }

    Lloyd lloyd(points, k, cfg.threads);
    lloyd.seed_plus_plus(cfg.seed);

    KMeansResult result;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iters; ++it) {
        const bool moved = lloyd.assign();
        lloyd.repair_empty();
        lloyd.update();
        const double inertia = lloyd.inertia();
        result.inertia_history.push_back(inertia);
        result.iters_run = it + 1;
        if (it > 0 && !moved) {
            result.converged = true;
            break;
        }
        if (std::isfinite(prev) && (prev <= 0.0 || (prev - inertia) / prev < cfg.conv_tol)) {
            result.converged = true;
            break;
        }
        prev = inertia;
    }
    // Final nearest-centroid pass against the stored centroids.
    if (lloyd.assign()) {
        result.converged = false;
        lloyd.repair_empty();
    }
    result.inertia = lloyd.inertia();

    // Dense relabel by first occurrence.
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int l : lloyd.labels()) {
        if (remap[static_cast<std::size_t>(l)] < 0) {
            remap[static_cast<std::size_t>(l)] = next++;
        }
    }
    result.centroids.assign(static_cast<std::size_t>(k), {});
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        const double* row = lloyd.centroids().row(c);
        result.centroids[static_cast<std::size_t>(remap[c])] = std::vector<double>(row, row + d);
    }
    result.assignments.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        result.assignments.push_back({embeddings[i].id, remap[static_cast<std::size_t>(lloyd.labels()[i])]});
    }
    return result;
}

}  // namespace lpsel
