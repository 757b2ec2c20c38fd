#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>

#include "lpselect/analytics.hpp"
#include "lpselect/cli.hpp"
#include "lpselect/corpus_io.hpp"
#include "lpselect/diversity.hpp"
#include "lpselect/error.hpp"
#include "lpselect/lp_metrics.hpp"
#include "lpselect/ref_trainer.hpp"
#include "lpselect/selector.hpp"

namespace py = pybind11;
using namespace lpsel;

namespace {

using ClusterMap = std::map<std::string, int>;

std::vector<ClusterAssignment> assignments(const ClusterMap& clusters) {
    std::vector<ClusterAssignment> out;
    out.reserve(clusters.size());
    for (const auto& [id, c] : clusters) out.push_back({id, c});
    return out;
}

SelectionParams fraction_params(double fraction_percent, std::uint64_t seed = 0) {
    SelectionParams p;
    p.fraction_percent = fraction_percent;
    p.seed = seed;
    return p;
}

MetricConfig metric_config(const std::string& metric, int epoch, double tol) {
    MetricConfig cfg;
    cfg.metric = parse_metric(metric);
    cfg.epoch = epoch;
    cfg.denom_tolerance = tol;
    return cfg;
}

const char* population_name(Population p) {
    switch (p) {
        case Population::easy: return "easy";
        case Population::hard: return "hard";
        case Population::noisy: return "noisy";
    }
    return "";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Learning-percentage data selection";

    static py::handle validation_error = py::exception<Error>(m, "ValidationError", PyExc_ValueError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(validation_error)(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            exc.attr("line") = e.line() ? py::cast(*e.line()) : py::none();
            PyErr_SetObject(validation_error.ptr(), exc.ptr());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        }
    });

    py::class_<SampleRecord>(m, "Sample")
        .def(py::init<std::string, std::string, std::string, std::string>(), py::arg("id"),
             py::arg("instruction"), py::arg("input") = "", py::arg("output") = "")
        .def_readwrite("id", &SampleRecord::id)
        .def_readwrite("instruction", &SampleRecord::instruction)
        .def_readwrite("input", &SampleRecord::input)
        .def_readwrite("output", &SampleRecord::output)
        .def(py::self == py::self)
        .def("__repr__", [](const SampleRecord& s) { return "Sample(" + canonical_line(s) + ")"; });

    py::class_<PerplexityTrace>(m, "Trace")
        .def(py::init<std::string, std::vector<double>>(), py::arg("id"), py::arg("ppl"))
        .def_readwrite("id", &PerplexityTrace::id)
        .def_readwrite("ppl", &PerplexityTrace::ppl)
        .def_property_readonly("epochs", &PerplexityTrace::epochs)
        .def(py::self == py::self)
        .def("__repr__", [](const PerplexityTrace& t) { return "Trace(" + canonical_line(t) + ")"; });

    py::class_<ScoreRecord>(m, "Score")
        .def_readonly("id", &ScoreRecord::id)
        .def_property_readonly("metric", [](const ScoreRecord& s) { return std::string(to_string(s.metric)); })
        .def_readonly("epoch", &ScoreRecord::epoch)
        .def_readonly("value", &ScoreRecord::value)
        .def_readonly("degenerate", &ScoreRecord::degenerate)
        .def("__repr__", [](const ScoreRecord& s) { return "Score(" + canonical_line(s) + ")"; });

    m.def("load_corpus", &load_corpus, py::arg("path"));
    m.def(
        "load_traces", [](const std::string& path) { return load_traces(path).traces; }, py::arg("path"));
    m.def(
        "write_traces",
        [](const std::string& path, const std::vector<PerplexityTrace>& traces) {
            std::ostringstream out;
            write_traces(out, traces);
            write_file(path, out.str());
        },
        py::arg("path"), py::arg("traces"));
    m.def(
        "corpus_hash", [](const std::vector<SampleRecord>& c) { return corpus_hash(c); }, py::arg("corpus"));

    m.def(
        "lp_exact", [](const PerplexityTrace& t, int epoch, double tol) { return lp_exact(t, epoch, tol); },
        py::arg("trace"), py::arg("epoch") = 1, py::arg("tol") = 1e-9);
    m.def(
        "lp_approx", [](const PerplexityTrace& t, int epoch) { return lp_approx(t, epoch); }, py::arg("trace"),
        py::arg("epoch") = 1);
    m.def(
        "score_traces",
        [](const std::vector<PerplexityTrace>& traces, const std::string& metric, int epoch, double tol,
           int threads) { return score_traces(traces, metric_config(metric, epoch, tol), threads); },
        py::arg("traces"), py::arg("metric") = "lp", py::arg("epoch") = 1, py::arg("tol") = 1e-9,
        py::arg("threads") = 1);
    m.def(
        "rank_ascending", [](const std::vector<ScoreRecord>& s) { return rank_ascending(s); }, py::arg("scores"));

    m.def(
        "embed",
        [](const std::vector<SampleRecord>& corpus, int dim, std::uint64_t seed, int threads) {
            std::vector<std::vector<double>> out;
            for (auto& e : fallback_embed_all(corpus, dim, seed, threads)) out.push_back(std::move(e.record.vec));
            return out;
        },
        py::arg("corpus"), py::arg("dim") = 256, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def("auto_cluster_count", &auto_cluster_count, py::arg("n"), py::arg("min_avg") = 50);
    m.def(
        "kmeans",
        [](const std::vector<std::string>& ids, const std::vector<std::vector<double>>& vectors,
           std::optional<int> k, int min_avg, std::uint64_t seed, int max_iters, double conv_tol, int threads) {
            if (ids.size() != vectors.size()) throw Error(Errc::invalid_argument, "ids and vectors differ in length");
            std::vector<EmbeddingRecord> emb;
            for (std::size_t i = 0; i < ids.size(); ++i) emb.push_back({ids[i], vectors[i]});
            ClusterConfig cfg{k, min_avg, seed, max_iters, conv_tol, threads};
            auto r = kmeans(emb, cfg);
            std::vector<int> labels;
            for (const auto& a : r.assignments) labels.push_back(a.cluster);
            py::dict d;
            d["labels"] = labels;
            d["centroids"] = r.centroids;
            d["inertia"] = r.inertia;
            d["inertia_history"] = r.inertia_history;
            d["iters_run"] = r.iters_run;
            d["converged"] = r.converged;
            return d;
        },
        py::arg("ids"), py::arg("vectors"), py::arg("k") = py::none(), py::arg("min_avg") = 50, py::arg("seed") = 0,
        py::arg("max_iters") = 100, py::arg("conv_tol") = 1e-6, py::arg("threads") = 1);

    m.def("per_cluster_quota", &per_cluster_quota, py::arg("cluster_size"), py::arg("fraction_percent"));
    m.def(
        "select_topk_low",
        [](const std::vector<std::string>& ranking, const ClusterMap& clusters, double fraction) {
            return select_topk_low(ranking, assignments(clusters), fraction_params(fraction)).ids;
        },
        py::arg("ranking"), py::arg("clusters"), py::arg("fraction_percent"));
    m.def(
        "partition_buckets",
        [](const std::vector<std::string>& ranking, const ClusterMap& clusters) {
            auto p = partition_buckets(ranking, assignments(clusters), {});
            py::dict d;
            d["low"] = p.low.ids;
            d["mid"] = p.mid.ids;
            d["high"] = p.high.ids;
            return d;
        },
        py::arg("ranking"), py::arg("clusters"));
    m.def(
        "select_clust_rand",
        [](const ClusterMap& clusters, double fraction, std::uint64_t seed) {
            return select_clust_rand(assignments(clusters), fraction_params(fraction, seed)).ids;
        },
        py::arg("clusters"), py::arg("fraction_percent"), py::arg("seed") = 0);

    m.def(
        "kendall_tau",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) { return kendall_tau(a, b); },
        py::arg("rank_a"), py::arg("rank_b"));
    m.def(
        "kendall_tau_b",
        [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau_b(x, y); },
        py::arg("x"), py::arg("y"));
    m.def(
        "iou", [](const std::vector<std::string>& a, const std::vector<std::string>& b) { return iou(a, b); },
        py::arg("set_a"), py::arg("set_b"));
    m.def(
        "top_fraction",
        [](const std::vector<std::string>& r, double f) { return top_fraction(r, f); }, py::arg("ranking"),
        py::arg("fraction_percent"));

    m.def(
        "train_and_trace",
        [](const std::vector<SampleRecord>& corpus, int hidden_dim, int epochs, double lr, int batch_size,
           std::uint64_t seed, int threads) {
            TrainerConfig cfg;
            cfg.hidden_dim = hidden_dim;
            cfg.epochs = epochs;
            cfg.lr = lr;
            cfg.batch_size = batch_size;
            cfg.seed = seed;
            cfg.threads = threads;
            py::gil_scoped_release release;
            return train_and_trace(corpus, cfg).traces;
        },
        py::arg("corpus"), py::arg("hidden_dim") = 64, py::arg("epochs") = 3, py::arg("lr") = 0.1,
        py::arg("batch_size") = 1, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def(
        "planted_corpus",
        [](std::size_t n, double hard_fraction, std::uint64_t seed) {
            auto pc = planted_corpus({n, hard_fraction, seed});
            std::vector<std::string> labels;
            for (auto p : pc.labels) labels.push_back(population_name(p));
            return py::make_tuple(pc.samples, labels);
        },
        py::arg("n") = 2000, py::arg("hard_fraction") = 0.1, py::arg("seed") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
